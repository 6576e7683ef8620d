//! The complete codec: message format plus the encode/decode pipelines for
//! the pure-deletion and the general (insertion/deletion/substitution)
//! modes.
//!
//! Wire layout: magic `MSAC`, version byte, mode byte, the source length
//! gamma-coded and zero-padded to a byte boundary, then a single
//! range-coded payload. Run structure (U_l, L_max, break slots) is never
//! transmitted: the decoder recomputes everything from the
//! side-information, section by section.

use crate::align::nw_align;
use crate::describe::{
    apply_deletion_description, build_y_prime, decode_general_description, describe_deletions,
    describe_general, potential_break_slots, rebuild_filled_x_row, Burst, DeletionDescription,
    GeneralDescription, InsertionDescription, SubstitutionMask,
};
use crate::entropy::{AdaptiveModel, CodedStream, RangeDecoder, RangeEncoder};
use crate::seqcore::{decompose_runs, BitSeq, RunDecomposition};
use crate::{align::greedy_align, Error, Result};

const MAGIC: [u8; 4] = *b"MSAC";
const VERSION: u8 = 1;
/// Upper bound accepted for the header's source length; rejects corrupt
/// headers before any large allocation.
const MAX_XLEN: u64 = 1 << 31;
/// Below this DP size `encode_auto` also tries the general mode and keeps
/// the smaller message; above it the quadratic alignment is skipped.
const GENERAL_TRY_LIMIT: usize = 2_000_000;

/// Codec mode recorded in the header.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Source is a subsequence of the side-information.
    Pure = 0,
    /// Insertions, deletions and substitutions.
    General = 1,
}

/// An encoded message: everything the decoder needs besides Y.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Message {
    pub mode: Mode,
    pub x_length: u64,
    pub payload: CodedStream,
}

impl Message {
    pub fn payload_bits(&self) -> usize {
        self.payload.bit_length()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.payload.bytes.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.mode as u8);
        let mut gamma = BitSeq::new();
        crate::entropy::encode_uint(&mut gamma, self.x_length);
        out.extend_from_slice(gamma.as_packed_bytes());
        out.extend_from_slice(&self.payload.bytes);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Message> {
        if bytes.len() < 6 {
            return Err(Error::corruption("header", "message shorter than header"));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::corruption("header", "bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::corruption(
                "header",
                format!("unsupported version {}", bytes[4]),
            ));
        }
        let mode = match bytes[5] {
            0 => Mode::Pure,
            1 => Mode::General,
            m => {
                return Err(Error::corruption("header", format!("unknown mode {}", m)));
            }
        };
        let (x_length, bits_used) = read_gamma_bits(&bytes[6..])?;
        if x_length > MAX_XLEN {
            return Err(Error::corruption("header", "implausible source length"));
        }
        let payload_start = 6 + bits_used.div_ceil(8);
        Ok(Message {
            mode,
            x_length,
            payload: CodedStream {
                bytes: bytes[payload_start..].to_vec(),
            },
        })
    }
}

/// Reads a gamma-coded integer from the front of a byte slice, MSB-first.
fn read_gamma_bits(bytes: &[u8]) -> Result<(u64, usize)> {
    let nbits = bytes.len() * 8;
    let bit = |i: usize| bytes[i / 8] >> (7 - i % 8) & 1 == 1;
    let mut pos = 0usize;
    let mut width = 0u32;
    loop {
        if pos >= nbits {
            return Err(Error::corruption("header", "truncated length field"));
        }
        if bit(pos) {
            break;
        }
        width += 1;
        pos += 1;
        if width > 62 {
            return Err(Error::corruption("header", "length field too long"));
        }
    }
    pos += 1;
    let mut m = 1u64;
    for _ in 0..width {
        if pos >= nbits {
            return Err(Error::corruption("header", "truncated length field"));
        }
        m = m << 1 | u64::from(bit(pos));
        pos += 1;
    }
    Ok((m - 1, pos))
}

/// Counts up to this value are coded as direct symbols; larger counts (rare
/// at any useful deletion rate) go through an escape symbol plus a gamma
/// remainder, so contexts for long runs stay small.
const DEL_DIRECT_MAX: usize = 3;

fn del_alphabet(l: usize) -> usize {
    (l + 1).min(DEL_DIRECT_MAX + 2)
}

/// One adaptive model per run extent of the reference: counts in an
/// extent-`l` run live on the alphabet {0..l}, capped via the escape.
fn deletion_models(rd: &RunDecomposition) -> Vec<AdaptiveModel> {
    let l_max = rd.max_extent().unwrap_or(0);
    (1..=l_max).map(|l| AdaptiveModel::new(del_alphabet(l))).collect()
}

/// Extension counts use a capped alphabet {0..4} plus an escape symbol
/// followed by the gamma-coded remainder.
const EXTEND_CAP: u32 = 4;
const EXTEND_ESCAPE: u32 = 5;

fn extension_models(rd: &RunDecomposition) -> Vec<AdaptiveModel> {
    let l_max = rd.max_extent().unwrap_or(0);
    (1..=l_max)
        .map(|_| AdaptiveModel::new(EXTEND_ESCAPE as usize + 1))
        .collect()
}

// ---------------------------------------------------------------------------
// pure-deletion mode
// ---------------------------------------------------------------------------

/// Encodes a source that is a subsequence of the side-information: greedy
/// alignment, per-run deletion counts, entropy coding with one context per
/// run extent. Counts are sent for l = 1..=L_max ascending, runs left to
/// right.
pub fn encode_pure(x: &BitSeq, y: &BitSeq) -> Result<Message> {
    let d_hat = greedy_align(x, y)?;
    let desc = describe_deletions(&d_hat, y)?;
    let rd = decompose_runs(y);
    let mut models = deletion_models(&rd);
    let mut enc = RangeEncoder::new();
    write_deletion_section(&mut enc, &mut models, &desc)?;
    Ok(Message {
        mode: Mode::Pure,
        x_length: x.len() as u64,
        payload: enc.finish(),
    })
}

fn write_deletion_section(
    enc: &mut RangeEncoder,
    models: &mut [AdaptiveModel],
    desc: &DeletionDescription,
) -> Result<()> {
    for (l_minus_1, list) in desc.counts.iter().enumerate() {
        let l = l_minus_1 + 1;
        for &v in list {
            if l > DEL_DIRECT_MAX && v > DEL_DIRECT_MAX as u32 {
                enc.encode_symbol(&mut models[l_minus_1], DEL_DIRECT_MAX as u32 + 1)?;
                enc.encode_gamma(u64::from(v) - DEL_DIRECT_MAX as u64 - 1);
            } else {
                enc.encode_symbol(&mut models[l_minus_1], v)?;
            }
        }
    }
    Ok(())
}

fn read_deletion_section(
    dec: &mut RangeDecoder,
    models: &mut [AdaptiveModel],
    rd: &RunDecomposition,
) -> Result<DeletionDescription> {
    let l_max = rd.max_extent().unwrap_or(0);
    let mut counts = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let u_l = rd.count_of_extent(l);
        let mut list = Vec::with_capacity(u_l);
        for _ in 0..u_l {
            let sym = dec.decode_symbol(&mut models[l - 1]);
            let v = if l > DEL_DIRECT_MAX && sym == DEL_DIRECT_MAX as u32 + 1 {
                let rem = dec.decode_gamma().map_err(in_section("deletions"))?;
                DEL_DIRECT_MAX as u64 + 1 + rem
            } else {
                u64::from(sym)
            };
            if v > l as u64 {
                return Err(Error::corruption(
                    "deletions",
                    format!("count {} exceeds run extent {}", v, l),
                ));
            }
            list.push(v as u32);
        }
        counts.push(list);
    }
    Ok(DeletionDescription { counts })
}

/// Recovers the per-run deletion counts of a pure-mode message.
pub fn pure_description_of(m: &Message, y: &BitSeq) -> Result<DeletionDescription> {
    if m.mode != Mode::Pure {
        return Err(Error::corruption("header", "not a pure-deletion message"));
    }
    let rd = decompose_runs(y);
    let mut models = deletion_models(&rd);
    let mut dec = RangeDecoder::new(&m.payload.bytes);
    read_deletion_section(&mut dec, &mut models, &rd)
}

pub fn decode_pure(m: &Message, y: &BitSeq) -> Result<BitSeq> {
    let desc = pure_description_of(m, y)?;
    let x = apply_deletion_description(y, &desc).map_err(|e| match e {
        Error::CountExceedsExtent { count, extent } => Error::corruption(
            "deletions",
            format!("count {} exceeds run extent {}", count, extent),
        ),
        other => other,
    })?;
    if x.len() as u64 != m.x_length {
        return Err(Error::corruption(
            "length",
            format!("decoded {} bits, header says {}", x.len(), m.x_length),
        ));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// general mode
// ---------------------------------------------------------------------------

/// Encodes against side-information related by insertions, deletions and
/// substitutions. Sections, in order: run-extension counts, break flags,
/// bursts, substitution mask, deletion counts.
pub fn encode_general(x: &BitSeq, y: &BitSeq) -> Result<Message> {
    let a = nw_align(x, y);
    let g = describe_general(&a, y)?;
    encode_general_description(&g, y, x.len() as u64)
}

/// Serializes an already-computed description.
pub fn encode_general_description(
    g: &GeneralDescription,
    y: &BitSeq,
    x_length: u64,
) -> Result<Message> {
    let y_rd = decompose_runs(y);
    if g.ins.extend_counts.len() != y_rd.num_runs() {
        return Err(Error::Internal(
            "extension counts do not match the run structure".into(),
        ));
    }
    let mut enc = RangeEncoder::new();

    // (1) run-extension counts, grouped by extent
    let mut ext_models = extension_models(&y_rd);
    for l in 1..=y_rd.max_extent().unwrap_or(0) {
        for &run_idx in y_rd.runs_of_extent(l) {
            let c = g.ins.extend_counts[run_idx];
            if c <= EXTEND_CAP {
                enc.encode_symbol(&mut ext_models[l - 1], c)?;
            } else {
                enc.encode_symbol(&mut ext_models[l - 1], EXTEND_ESCAPE)?;
                enc.encode_gamma(u64::from(c - EXTEND_CAP - 1));
            }
        }
    }

    // (2) break flags over the potential slots of Y'
    let mut break_model = AdaptiveModel::new(2);
    for &f in &g.ins.break_flags {
        enc.encode_symbol(&mut break_model, u32::from(f))?;
    }

    // (3) bursts: count, then slot gaps, lengths and raw contents
    enc.encode_gamma(g.ins.bursts.len() as u64);
    let mut prev_slot = 0usize;
    for (k, burst) in g.ins.bursts.iter().enumerate() {
        let gap = if k == 0 {
            burst.slot
        } else {
            burst.slot - prev_slot - 1
        };
        enc.encode_gamma(gap as u64);
        enc.encode_gamma(burst.content.len() as u64 - 1);
        for b in burst.content.iter() {
            enc.encode_raw_bit(b);
        }
        prev_slot = burst.slot;
    }

    // (4) substitution mask over the reconstructed length
    let mut sub_model = AdaptiveModel::new(2);
    for b in g.sub.mask.iter() {
        enc.encode_symbol(&mut sub_model, u32::from(b))?;
    }

    // (5) deletion counts over the runs of the filled X row
    let mut del_models: Vec<AdaptiveModel> = (1..=g.del.counts.len())
        .map(|l| AdaptiveModel::new(del_alphabet(l)))
        .collect();
    write_deletion_section(&mut enc, &mut del_models, &g.del)?;

    Ok(Message {
        mode: Mode::General,
        x_length,
        payload: enc.finish(),
    })
}

/// Recovers the staged edit description of a general-mode message.
pub fn general_description_of(m: &Message, y: &BitSeq) -> Result<GeneralDescription> {
    if m.mode != Mode::General {
        return Err(Error::corruption("header", "not a general-mode message"));
    }
    let x_len = m.x_length as usize;
    let y_rd = decompose_runs(y);
    let mut dec = RangeDecoder::new(&m.payload.bytes);

    // (1) run-extension counts
    let mut ext_models = extension_models(&y_rd);
    let mut extend_counts = vec![0u32; y_rd.num_runs()];
    let mut extras = 0usize;
    for l in 1..=y_rd.max_extent().unwrap_or(0) {
        for &run_idx in y_rd.runs_of_extent(l) {
            let sym = dec.decode_symbol(&mut ext_models[l - 1]);
            let c = if sym == EXTEND_ESCAPE {
                let rem = dec.decode_gamma().map_err(in_section("insertions"))?;
                EXTEND_CAP as u64 + 1 + rem
            } else {
                u64::from(sym)
            };
            extras += c as usize;
            if extras > x_len {
                return Err(Error::corruption(
                    "insertions",
                    "extension counts exceed the source length",
                ));
            }
            extend_counts[run_idx] = c as u32;
        }
    }
    let y_prime = build_y_prime(&y_rd, &extend_counts);

    // (2) break flags
    let slots = potential_break_slots(&y_prime);
    let mut break_model = AdaptiveModel::new(2);
    let break_flags: Vec<bool> = (0..slots.len())
        .map(|_| dec.decode_symbol(&mut break_model) == 1)
        .collect();
    let breaks = break_flags.iter().filter(|&&f| f).count();
    if extras + breaks > x_len {
        return Err(Error::corruption(
            "insertions",
            "break flags exceed the source length",
        ));
    }
    let y_dd_len = y_prime.len() + breaks;

    // (3) bursts
    let burst_count = dec.decode_gamma().map_err(in_section("bursts"))? as usize;
    if burst_count > y_dd_len + 1 {
        return Err(Error::corruption("bursts", "more bursts than slots"));
    }
    let mut bursts = Vec::with_capacity(burst_count);
    let mut prev_slot = 0usize;
    let mut burst_bits = 0usize;
    for k in 0..burst_count {
        let gap = dec.decode_gamma().map_err(in_section("bursts"))? as usize;
        let slot = if k == 0 { gap } else { prev_slot + 1 + gap };
        if slot > y_dd_len {
            return Err(Error::corruption("bursts", "slot beyond the sequence"));
        }
        let len = dec.decode_gamma().map_err(in_section("bursts"))? as usize + 1;
        burst_bits += len;
        if extras + breaks + burst_bits > x_len {
            return Err(Error::corruption(
                "bursts",
                "burst contents exceed the source length",
            ));
        }
        let content: BitSeq = (0..len).map(|_| dec.decode_raw_bit()).collect();
        bursts.push(Burst { slot, content });
        prev_slot = slot;
    }

    // (4) substitution mask over the reconstructed length
    let z_y_len = y_dd_len + burst_bits;
    let mut sub_model = AdaptiveModel::new(2);
    let mask: BitSeq = (0..z_y_len)
        .map(|_| dec.decode_symbol(&mut sub_model) == 1)
        .collect();

    // (5) deletion counts need the run structure of the filled X row, so
    // rebuild it from the sections decoded so far
    let ins = InsertionDescription {
        extend_counts,
        break_flags,
        bursts,
    };
    let sub = SubstitutionMask { mask };
    let z_x = rebuild_filled_x_row(y, &ins, &sub)?;
    let z_x_rd = decompose_runs(&z_x);
    let mut del_models = deletion_models(&z_x_rd);
    let del = read_deletion_section(&mut dec, &mut del_models, &z_x_rd)?;

    Ok(GeneralDescription { ins, sub, del })
}

pub fn decode_general(m: &Message, y: &BitSeq) -> Result<BitSeq> {
    let g = general_description_of(m, y)?;
    let x = decode_general_description(y, &g)?;
    if x.len() as u64 != m.x_length {
        return Err(Error::corruption(
            "length",
            format!("decoded {} bits, header says {}", x.len(), m.x_length),
        ));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// mode selection
// ---------------------------------------------------------------------------

/// Tries the pure-deletion mode first; falls back to the general mode when
/// the source is not a subsequence. When the pair is small enough to afford
/// the quadratic alignment, both messages are built and the smaller one
/// wins, with ties going to the pure mode.
pub fn encode_auto(x: &BitSeq, y: &BitSeq) -> Result<Message> {
    match encode_pure(x, y) {
        Ok(pure) => {
            if x.len().saturating_mul(y.len()) <= GENERAL_TRY_LIMIT {
                let general = encode_general(x, y)?;
                if general.to_bytes().len() < pure.to_bytes().len() {
                    return Ok(general);
                }
            }
            Ok(pure)
        }
        Err(Error::NotSubsequence) => encode_general(x, y),
        Err(e) => Err(e),
    }
}

/// Dispatches on the mode recorded in the header.
pub fn decode(m: &Message, y: &BitSeq) -> Result<BitSeq> {
    match m.mode {
        Mode::Pure => decode_pure(m, y),
        Mode::General => decode_general(m, y),
    }
}

fn in_section(section: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Corruption { detail, .. } => Error::corruption(section, detail),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate, SourceParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn example_x() -> BitSeq {
        BitSeq::from_01(&[0, 1, 0, 0, 1, 0, 1])
    }

    fn example_y() -> BitSeq {
        BitSeq::from_01(&[1, 0, 1, 1, 0, 0, 0, 1, 0, 1, 1])
    }

    #[test]
    fn pure_worked_example_golden() {
        let m = encode_pure(&example_x(), &example_y()).unwrap();
        assert_eq!(m.mode, Mode::Pure);
        let desc = pure_description_of(&m, &example_y()).unwrap();
        assert_eq!(desc.counts, vec![vec![1, 0, 0, 0], vec![1, 1], vec![1]]);
        assert_eq!(decode_pure(&m, &example_y()).unwrap(), example_x());
    }

    #[test]
    fn pure_identity_near_empty_payload() {
        let y = example_y();
        let m = encode_pure(&y, &y).unwrap();
        assert!(m.payload.bytes.len() <= 3, "payload {:?}", m.payload.bytes);
        assert_eq!(decode_pure(&m, &y).unwrap(), y);
    }

    #[test]
    fn message_bytes_round_trip() {
        let m = encode_pure(&example_x(), &example_y()).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"MSAC");
        let back = Message::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn general_intro_example_round_trip() {
        let x = BitSeq::from_01(&[0, 0, 1, 1, 0, 1]);
        let y = BitSeq::from_01(&[0, 1, 0, 0, 1, 1]);
        let m = encode_general(&x, &y).unwrap();
        assert_eq!(m.mode, Mode::General);
        assert_eq!(decode_general(&m, &y).unwrap(), x);
        let bytes = m.to_bytes();
        assert_eq!(decode(&Message::from_bytes(&bytes).unwrap(), &y).unwrap(), x);
    }

    #[test]
    fn general_identity_small_payload() {
        let y = example_y();
        let m = encode_general(&y, &y).unwrap();
        assert_eq!(decode_general(&m, &y).unwrap(), y);
    }

    #[test]
    fn auto_mode_selection() {
        // subsequence pair stays in pure mode
        let m = encode_auto(&example_x(), &example_y()).unwrap();
        assert_eq!(m.mode, Mode::Pure);
        assert_eq!(decode(&m, &example_y()).unwrap(), example_x());

        // non-subsequence pair forces the general mode
        let x = BitSeq::from_01(&[1, 1, 1, 1]);
        let y = BitSeq::from_01(&[1, 0, 1, 0]);
        let m = encode_auto(&x, &y).unwrap();
        assert_eq!(m.mode, Mode::General);
        assert_eq!(decode(&m, &y).unwrap(), x);

        // identical sequences tie-break to pure
        let m = encode_auto(&example_y(), &example_y()).unwrap();
        assert_eq!(m.mode, Mode::Pure);
    }

    #[test]
    fn empty_side_information() {
        let x = BitSeq::from_01(&[1, 0, 1]);
        let y = BitSeq::new();
        let m = encode_auto(&x, &y).unwrap();
        assert_eq!(m.mode, Mode::General);
        assert_eq!(decode(&m, &y).unwrap(), x);

        // single-bit source against empty side-information
        for bit in [0u8, 1] {
            let x = BitSeq::from_01(&[bit]);
            let m = encode_auto(&x, &y).unwrap();
            assert_eq!(decode(&m, &y).unwrap(), x);
        }

        // both empty
        let e = BitSeq::new();
        let m = encode_auto(&e, &e).unwrap();
        assert_eq!(decode(&m, &e).unwrap(), e);
    }

    #[test]
    fn empty_source_nonempty_side_information() {
        let y = example_y();
        let x = BitSeq::new();
        let m = encode_auto(&x, &y).unwrap();
        assert_eq!(decode(&m, &y).unwrap(), x);
    }

    #[test]
    fn simulated_round_trips_small_grid() {
        let mut seed = 0u64;
        for p in [0.1, 0.5] {
            for (q, d_x, d_y) in [
                (0.0, 0.0, 0.0),
                (0.0, 0.05, 0.0),
                (0.01, 0.01, 0.01),
                (0.05, 0.05, 0.05),
            ] {
                for n in [1usize, 10, 100, 500] {
                    seed += 1;
                    let inst = generate(&SourceParams {
                        n,
                        p,
                        q,
                        d_x,
                        d_y,
                        seed,
                    })
                    .unwrap();
                    let m = encode_auto(&inst.x, &inst.y).unwrap();
                    let back = decode(&m, &inst.y).unwrap();
                    assert_eq!(back, inst.x, "p={} q={} dx={} dy={} n={}", p, q, d_x, d_y, n);
                }
            }
        }
    }

    #[test]
    fn corrupted_messages_fail_cleanly() {
        let mut rng = ChaCha12Rng::seed_from_u64(1234);
        let inst = generate(&SourceParams {
            n: 400,
            p: 0.5,
            q: 0.01,
            d_x: 0.02,
            d_y: 0.01,
            seed: 8,
        })
        .unwrap();
        let m = encode_auto(&inst.x, &inst.y).unwrap();
        let bytes = m.to_bytes();

        // truncations
        for cut in 0..bytes.len() {
            let msg = Message::from_bytes(&bytes[..cut]);
            if let Ok(msg) = msg {
                let _ = decode(&msg, &inst.y); // must not panic
            }
        }
        // random bit flips
        for _ in 0..500 {
            let mut mutated = bytes.clone();
            let i = rng.random_range(0..mutated.len());
            mutated[i] ^= 1 << rng.random_range(0..8);
            if let Ok(msg) = Message::from_bytes(&mutated) {
                let _ = decode(&msg, &inst.y); // Ok or Err, never a crash
            }
        }
        // decoding against the wrong side-information either errors or
        // yields some sequence, never crashes
        let other = generate(&SourceParams {
            n: 400,
            p: 0.5,
            q: 0.01,
            d_x: 0.02,
            d_y: 0.01,
            seed: 9,
        })
        .unwrap();
        let _ = decode(&m, &other.y);
    }

    #[test]
    fn header_errors_are_named() {
        assert!(matches!(
            Message::from_bytes(b"XXXX\x01\x00\x80"),
            Err(Error::Corruption { .. })
        ));
        assert!(Message::from_bytes(b"MSAC\x02\x00\x80").is_err()); // version
        assert!(Message::from_bytes(b"MSAC\x01\x07\x80").is_err()); // mode
    }
}
