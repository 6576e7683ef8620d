//! Adaptive arithmetic (range) coding with per-context Krichevsky-Trofimov
//! estimators, plus Elias-gamma integer codes.
//!
//! The coder is a 32-bit range coder with byte output and carry
//! propagation; no floating point anywhere on the coding path, so streams
//! are bit-exact across platforms. Per-extent edit counts get one adaptive
//! model per context id, so symbols in different contexts never affect each
//! other's statistics.

use crate::seqcore::BitSeq;
use crate::{Error, Result};

const TOP: u32 = 1 << 24;
/// Models rescale when the total reaches this bound; keeps the range
/// coder's truncation loss per symbol negligible.
const MAX_TOTAL: u32 = 1 << 16;

/// Adaptive symbol distribution under the Krichevsky-Trofimov (add-1/2)
/// rule: a symbol seen `c` times in `n` draws has probability
/// `(2c + 1) / (2n + A)` for alphabet size `A`.
#[derive(Clone, Debug)]
pub struct AdaptiveModel {
    freqs: Vec<u32>,
    total: u32,
}

impl AdaptiveModel {
    pub fn new(alphabet_size: usize) -> Self {
        assert!(alphabet_size >= 1, "alphabet must be non-empty");
        assert!((alphabet_size as u32) < MAX_TOTAL, "alphabet too large");
        AdaptiveModel {
            freqs: vec![1; alphabet_size],
            total: alphabet_size as u32,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.freqs.len()
    }

    fn span(&self, symbol: u32) -> (u32, u32) {
        let mut cum = 0;
        for &f in &self.freqs[..symbol as usize] {
            cum += f;
        }
        (cum, self.freqs[symbol as usize])
    }

    fn symbol_at(&self, value: u32) -> (u32, u32, u32) {
        let mut cum = 0;
        for (s, &f) in self.freqs.iter().enumerate() {
            if value < cum + f {
                return (s as u32, cum, f);
            }
            cum += f;
        }
        // value clamped by the caller, so this is the last symbol
        let last = self.freqs.len() - 1;
        (last as u32, self.total - self.freqs[last], self.freqs[last])
    }

    fn update(&mut self, symbol: u32) {
        self.freqs[symbol as usize] += 2;
        self.total += 2;
        if self.total >= MAX_TOTAL {
            self.total = 0;
            for f in &mut self.freqs {
                *f = (*f >> 1) | 1;
                self.total += *f;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn freq_of(&self, symbol: u32) -> u32 {
        self.freqs[symbol as usize]
    }
}

/// A finished entropy-coded byte stream.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CodedStream {
    pub bytes: Vec<u8>,
}

impl CodedStream {
    pub fn bit_length(&self) -> usize {
        self.bytes.len() * 8
    }
}

/// Byte-oriented range encoder. Termination emits only the bytes needed to
/// pin the final interval and drops trailing zeros (the decoder pads with
/// zero bytes past the end of the stream).
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    pending_ff: u64,
    has_cache: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending_ff: 0,
            has_cache: false,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self, force: bool) {
        let lo32 = self.low as u32;
        let carry = (self.low >> 32) as u8; // 0 or 1
        if force || lo32 < 0xFF00_0000 || carry == 1 {
            if self.has_cache {
                self.out.push(self.cache.wrapping_add(carry));
            }
            for _ in 0..self.pending_ff {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.pending_ff = 0;
            self.cache = (lo32 >> 24) as u8;
            self.has_cache = true;
        } else {
            self.pending_ff += 1;
        }
        self.low = ((lo32 as u64) << 8) & 0xFFFF_FFFF;
    }

    fn encode_span(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total && total < TOP);
        let r = self.range / total;
        self.low += u64::from(r) * u64::from(cum);
        self.range = r * freq;
        while self.range < TOP {
            self.shift_low(false);
            self.range <<= 8;
        }
    }

    /// Encodes `symbol` under `model` and updates the model.
    pub fn encode_symbol(&mut self, model: &mut AdaptiveModel, symbol: u32) -> Result<()> {
        if symbol as usize >= model.alphabet_size() {
            return Err(Error::InvalidParams(format!(
                "symbol {} outside alphabet of size {}",
                symbol,
                model.alphabet_size()
            )));
        }
        let (cum, freq) = model.span(symbol);
        self.encode_span(cum, freq, model.total);
        model.update(symbol);
        Ok(())
    }

    /// Encodes one bit at a fixed uniform probability; costs one bit.
    pub fn encode_raw_bit(&mut self, bit: bool) {
        self.encode_span(u32::from(bit), 1, 2);
    }

    /// Elias-gamma code of `n + 1` through uniform bits.
    pub fn encode_gamma(&mut self, n: u64) {
        let m = n + 1;
        let width = 63 - m.leading_zeros();
        for _ in 0..width {
            self.encode_raw_bit(false);
        }
        for i in (0..=width).rev() {
            self.encode_raw_bit(m >> i & 1 == 1);
        }
    }

    /// Seals the stream: picks the representative of the final interval
    /// with the most trailing zero bytes and flushes.
    pub fn finish(mut self) -> CodedStream {
        let top = self.low + u64::from(self.range);
        let mut v = self.low;
        for nbytes in 0..=4u32 {
            let align = 1u64 << (8 * (4 - nbytes));
            let cand = self.low.div_ceil(align).checked_mul(align);
            if let Some(cand) = cand {
                if cand < top {
                    v = cand;
                    break;
                }
            }
        }
        self.low = v;
        for _ in 0..5 {
            self.shift_low(true);
        }
        while self.out.last() == Some(&0) {
            self.out.pop();
        }
        CodedStream { bytes: self.out }
    }
}

/// Mirror of [`RangeEncoder`]; reads past the end of the stream as zero
/// bytes.
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        let mut d = RangeDecoder {
            code: 0,
            range: u32::MAX,
            bytes,
            pos: 0,
        };
        for _ in 0..4 {
            d.code = d.code << 8 | u32::from(d.next_byte());
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn decode_span(&mut self, total: u32) -> (u32, u32) {
        let r = self.range / total;
        let value = (self.code / r).min(total - 1);
        (value, r)
    }

    fn consume(&mut self, r: u32, cum: u32, freq: u32) {
        self.code -= r * cum;
        self.range = r * freq;
        while self.range < TOP {
            self.code = self.code << 8 | u32::from(self.next_byte());
            self.range <<= 8;
        }
    }

    pub fn decode_symbol(&mut self, model: &mut AdaptiveModel) -> u32 {
        let (value, r) = self.decode_span(model.total);
        let (symbol, cum, freq) = model.symbol_at(value);
        self.consume(r, cum, freq);
        model.update(symbol);
        symbol
    }

    pub fn decode_raw_bit(&mut self) -> bool {
        let (value, r) = self.decode_span(2);
        let bit = value == 1;
        self.consume(r, u32::from(bit), 1);
        bit
    }

    /// Inverse of [`RangeEncoder::encode_gamma`]. The unary prefix is
    /// capped so corrupt streams fail instead of looping.
    pub fn decode_gamma(&mut self) -> Result<u64> {
        let mut width = 0u32;
        while !self.decode_raw_bit() {
            width += 1;
            if width > 62 {
                return Err(Error::corruption("gamma", "unary prefix too long"));
            }
        }
        let mut m = 1u64;
        for _ in 0..width {
            m = m << 1 | u64::from(self.decode_raw_bit());
        }
        Ok(m - 1)
    }
}

/// Entropy-codes a schedule of (context id, symbol) pairs with one adaptive
/// model per context.
pub fn encode_symbols(
    symbols: &[(usize, u32)],
    models: &mut [AdaptiveModel],
) -> Result<CodedStream> {
    let mut enc = RangeEncoder::new();
    for &(ctx, sym) in symbols {
        let model = models
            .get_mut(ctx)
            .ok_or_else(|| Error::InvalidParams(format!("unknown context {}", ctx)))?;
        enc.encode_symbol(model, sym)?;
    }
    Ok(enc.finish())
}

/// Decodes a symbol per schedule entry; the schedule and the initial models
/// must match the encoder's.
pub fn decode_symbols(
    stream: &CodedStream,
    schedule: &[usize],
    models: &mut [AdaptiveModel],
) -> Result<Vec<u32>> {
    let mut dec = RangeDecoder::new(&stream.bytes);
    let mut out = Vec::with_capacity(schedule.len());
    for &ctx in schedule {
        let model = models
            .get_mut(ctx)
            .ok_or_else(|| Error::InvalidParams(format!("unknown context {}", ctx)))?;
        out.push(dec.decode_symbol(model));
    }
    Ok(out)
}

/// Standalone Elias-gamma code of `n + 1` appended to a bit sequence;
/// prefix-free, usable outside a range-coded stream.
pub fn encode_uint(out: &mut BitSeq, n: u64) {
    let m = n + 1;
    let width = 63 - m.leading_zeros();
    for _ in 0..width {
        out.push(false);
    }
    for i in (0..=width).rev() {
        out.push(m >> i & 1 == 1);
    }
}

/// Reads one gamma-coded integer starting at bit `pos`; returns the value
/// and the next bit position.
pub fn decode_uint(bits: &BitSeq, pos: usize) -> Result<(u64, usize)> {
    let mut p = pos;
    let mut width = 0u32;
    loop {
        if p >= bits.len() {
            return Err(Error::corruption("gamma", "truncated unary prefix"));
        }
        if bits.get(p) {
            break;
        }
        width += 1;
        p += 1;
        if width > 62 {
            return Err(Error::corruption("gamma", "unary prefix too long"));
        }
    }
    p += 1; // the terminating 1 is the leading bit of m
    let mut m = 1u64;
    for _ in 0..width {
        if p >= bits.len() {
            return Err(Error::corruption("gamma", "truncated payload"));
        }
        m = m << 1 | u64::from(bits.get(p));
        p += 1;
    }
    Ok((m - 1, p))
}
