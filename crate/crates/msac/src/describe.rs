//! Edit descriptions: the message content of the codec.
//!
//! A deletion is described only up to the run of the reference that contains
//! it; the exact position inside a run is unknowable from the two sequences
//! and unnecessary for reconstruction. The general description additionally
//! carries insertions (run-extending, run-breaking, bursts) and a
//! substitution mask, staged so that each stage's coordinates are defined on
//! the previous stage's output:
//!
//! `Y -> Y' (extensions) -> Y'' (breaks) -> Z_Y (bursts) -> Z_X (mask) -> X (deletions)`

use crate::align::{fill_gaps, Alignment, Column};
use crate::seqcore::{decompose_runs, BitSeq, DeletionPattern, RunDecomposition};
use crate::{Error, Result};

/// Per-run deletion counts, grouped by run extent: `counts[l-1][i]` is the
/// number of deletions in the i-th (0-based, left to right) run of extent
/// `l` of the reference sequence.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DeletionDescription {
    pub counts: Vec<Vec<u32>>,
}

impl DeletionDescription {
    pub fn total_deletions(&self) -> usize {
        self.counts
            .iter()
            .flatten()
            .map(|&v| v as usize)
            .sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.counts.iter().flatten().all(|&v| v == 0)
    }
}

/// A burst of two or more consecutively inserted bits (or a single inserted
/// bit when the reference is empty, where no neighbor can force its value).
/// `slot` is the insertion point counted in bits of Y''.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Burst {
    pub slot: usize,
    pub content: BitSeq,
}

/// Isolated and burst insertions, staged as extensions then breaks then
/// bursts.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct InsertionDescription {
    /// Run-extending insertion count per run of Y, in run order.
    pub extend_counts: Vec<u32>,
    /// One flag per potential break slot of Y'.
    pub break_flags: Vec<bool>,
    /// Bursts with strictly increasing slots in Y'' coordinates.
    pub bursts: Vec<Burst>,
}

impl InsertionDescription {
    pub fn total_insertions(&self) -> usize {
        self.extend_counts.iter().map(|&c| c as usize).sum::<usize>()
            + self.break_flags.iter().filter(|&&f| f).count()
            + self.bursts.iter().map(|b| b.content.len()).sum::<usize>()
    }
}

/// Positional XOR between the filled rows; 1 exactly at substitution
/// columns.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubstitutionMask {
    pub mask: BitSeq,
}

/// Everything the decoder needs to rebuild X from Y.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralDescription {
    pub ins: InsertionDescription,
    pub sub: SubstitutionMask,
    pub del: DeletionDescription,
}

/// Counts the flagged deletions inside each run of `reference`, grouped by
/// run extent.
pub fn describe_deletions(
    pattern: &DeletionPattern,
    reference: &BitSeq,
) -> Result<DeletionDescription> {
    if pattern.len() != reference.len() {
        return Err(Error::LengthMismatch {
            pattern: pattern.len(),
            sequence: reference.len(),
        });
    }
    let rd = decompose_runs(reference);
    Ok(describe_deletions_on_runs(pattern, &rd))
}

fn describe_deletions_on_runs(
    pattern: &DeletionPattern,
    rd: &RunDecomposition,
) -> DeletionDescription {
    let mut per_run = vec![0u32; rd.num_runs()];
    for (idx, run) in rd.runs.iter().enumerate() {
        for p in run.start..run.start + run.extent {
            if pattern.0.get(p) {
                per_run[idx] += 1;
            }
        }
    }
    let l_max = rd.max_extent().unwrap_or(0);
    let mut counts = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        counts.push(rd.runs_of_extent(l).iter().map(|&i| per_run[i]).collect());
    }
    DeletionDescription { counts }
}

/// Deletes the first `V_{l,i}` bits of each designated run. Any other
/// placement inside the run yields the same string.
pub fn apply_deletion_description(
    reference: &BitSeq,
    desc: &DeletionDescription,
) -> Result<BitSeq> {
    let rd = decompose_runs(reference);
    let per_run = per_run_counts(&rd, desc)?;
    let mut out = BitSeq::with_capacity(reference.len());
    for (run, &del) in rd.runs.iter().zip(per_run.iter()) {
        for _ in 0..run.extent - del as usize {
            out.push(run.symbol);
        }
    }
    Ok(out)
}

/// Validates a description against the run structure and flattens it into
/// one count per run, in run order.
fn per_run_counts(rd: &RunDecomposition, desc: &DeletionDescription) -> Result<Vec<u32>> {
    let l_max = rd.max_extent().unwrap_or(0);
    if desc.counts.len() != l_max {
        return Err(Error::corruption(
            "deletions",
            format!(
                "description covers extents up to {} but reference has L_max {}",
                desc.counts.len(),
                l_max
            ),
        ));
    }
    let mut per_run = vec![0u32; rd.num_runs()];
    for l in 1..=l_max {
        let list = &desc.counts[l - 1];
        let runs = rd.runs_of_extent(l);
        if list.len() != runs.len() {
            return Err(Error::corruption(
                "deletions",
                format!(
                    "extent {} has {} runs but {} counts",
                    l,
                    runs.len(),
                    list.len()
                ),
            ));
        }
        for (&run_idx, &v) in runs.iter().zip(list.iter()) {
            if v as usize > l {
                return Err(Error::CountExceedsExtent {
                    count: v as usize,
                    extent: l,
                });
            }
            per_run[run_idx] = v;
        }
    }
    Ok(per_run)
}

/// Y with each run's extension insertions appended at the run's right end.
pub fn build_y_prime(y_rd: &RunDecomposition, extend_counts: &[u32]) -> BitSeq {
    let extra: usize = extend_counts.iter().map(|&c| c as usize).sum();
    let mut out = BitSeq::with_capacity(y_rd.len() + extra);
    for (run, &ext) in y_rd.runs.iter().zip(extend_counts.iter()) {
        for _ in 0..run.extent + ext as usize {
            out.push(run.symbol);
        }
    }
    out
}

/// Positions where a run-breaking bit may be inserted: before the first
/// bit, after the last bit, and every interior slot whose two neighbors are
/// equal. Returned sorted ascending; `U_0` is the length of this list.
pub fn potential_break_slots(seq: &BitSeq) -> Vec<usize> {
    if seq.is_empty() {
        return vec![0];
    }
    let mut slots = vec![0usize];
    for p in 1..seq.len() {
        if seq.get(p - 1) == seq.get(p) {
            slots.push(p);
        }
    }
    slots.push(seq.len());
    slots
}

/// Converts a minimum-edit alignment of some X against `y` into the staged
/// edit description.
pub fn describe_general(a: &Alignment, y: &BitSeq) -> Result<GeneralDescription> {
    if a.y_side() != *y {
        return Err(Error::Internal(
            "alignment does not match the given side-information".into(),
        ));
    }
    let filled = fill_gaps(a);
    let y_rd = decompose_runs(y);

    // run index for every y position
    let mut run_of_pos = vec![0usize; y.len()];
    for (idx, run) in y_rd.runs.iter().enumerate() {
        for p in run.start..run.start + run.extent {
            run_of_pos[p] = idx;
        }
    }

    // maximal groups of InsertX columns: (first column, length, y position)
    let mut events: Vec<(usize, usize, usize)> = Vec::new();
    let mut y_pos = 0usize;
    for (col_idx, col) in a.columns.iter().enumerate() {
        match col {
            Column::InsertX(_) => match events.last_mut() {
                Some(ev) if ev.0 + ev.1 == col_idx => ev.1 += 1,
                _ => events.push((col_idx, 1, y_pos)),
            },
            _ => y_pos += 1,
        }
    }

    let mut extend_counts = vec![0u32; y_rd.num_runs()];
    let mut expected_breaks = 0usize;
    let mut burst_events: Vec<(usize, usize)> = Vec::new();
    for &(start, len, j) in &events {
        if len >= 2 || y.is_empty() {
            burst_events.push((start, len));
            continue;
        }
        let b = a.columns[start]
            .x_bit()
            .expect("InsertX column carries an x bit");
        let left = (j > 0).then(|| y.get(j - 1));
        let right = (j < y.len()).then(|| y.get(j));
        if left == Some(b) {
            extend_counts[run_of_pos[j - 1]] += 1;
        } else if right == Some(b) {
            extend_counts[run_of_pos[j]] += 1;
        } else {
            expected_breaks += 1;
        }
    }

    // Y'' plus burst records: drop burst columns from Z_Y, remembering where
    let mut y_dd = BitSeq::with_capacity(filled.z_y.len());
    let mut bursts = Vec::with_capacity(burst_events.len());
    let mut burst_iter = burst_events.iter().peekable();
    let mut col_idx = 0usize;
    while col_idx < a.columns.len() {
        if let Some(&&(start, len)) = burst_iter.peek() {
            if start == col_idx {
                let content: BitSeq = (start..start + len).map(|c| filled.z_y.get(c)).collect();
                bursts.push(Burst {
                    slot: y_dd.len(),
                    content,
                });
                burst_iter.next();
                col_idx += len;
                continue;
            }
        }
        y_dd.push(filled.z_y.get(col_idx));
        col_idx += 1;
    }

    // derive break slots by matching Y'' against the canonical Y'
    let y_prime = build_y_prime(&y_rd, &extend_counts);
    let mut break_positions = Vec::with_capacity(expected_breaks);
    let mut i = 0usize;
    for bit in y_dd.iter() {
        if i < y_prime.len() && bit == y_prime.get(i) {
            i += 1;
        } else {
            break_positions.push(i);
        }
    }
    if i != y_prime.len() || break_positions.len() != expected_breaks {
        return Err(Error::Internal(
            "insertion description does not reproduce the aligned sequence".into(),
        ));
    }

    let slots = potential_break_slots(&y_prime);
    let mut break_flags = vec![false; slots.len()];
    for pos in break_positions {
        let idx = slots
            .binary_search(&pos)
            .map_err(|_| Error::Internal("break position is not a potential slot".into()))?;
        if break_flags[idx] {
            return Err(Error::Internal("two breaks in one slot".into()));
        }
        break_flags[idx] = true;
    }

    let mask = filled.z_y.xor(&filled.z_x)?;

    let del_pattern = DeletionPattern(
        a.columns
            .iter()
            .map(|c| matches!(c, Column::DeleteY(_)))
            .collect(),
    );
    let del = describe_deletions(&del_pattern, &filled.z_x)?;

    Ok(GeneralDescription {
        ins: InsertionDescription {
            extend_counts,
            break_flags,
            bursts,
        },
        sub: SubstitutionMask { mask },
        del,
    })
}

/// Rebuilds X from Y by replaying the staged description:
/// extensions, breaks, bursts, substitutions, deletions.
pub fn decode_general_description(y: &BitSeq, g: &GeneralDescription) -> Result<BitSeq> {
    let z_x = rebuild_filled_x_row(y, &g.ins, &g.sub)?;
    apply_deletion_description(&z_x, &g.del).map_err(|e| match e {
        Error::CountExceedsExtent { count, extent } => Error::corruption(
            "deletions",
            format!("count {} exceeds run extent {}", count, extent),
        ),
        other => other,
    })
}

/// Replays the insertion and substitution stages only, producing the filled
/// X row whose run structure governs the final deletion stage.
pub fn rebuild_filled_x_row(
    y: &BitSeq,
    ins: &InsertionDescription,
    sub: &SubstitutionMask,
) -> Result<BitSeq> {
    let y_rd = decompose_runs(y);
    if ins.extend_counts.len() != y_rd.num_runs() {
        return Err(Error::corruption(
            "insertions",
            format!(
                "{} extension counts for {} runs",
                ins.extend_counts.len(),
                y_rd.num_runs()
            ),
        ));
    }
    let y_prime = build_y_prime(&y_rd, &ins.extend_counts);

    let slots = potential_break_slots(&y_prime);
    if ins.break_flags.len() != slots.len() {
        return Err(Error::corruption(
            "insertions",
            format!(
                "{} break flags for {} potential slots",
                ins.break_flags.len(),
                slots.len()
            ),
        ));
    }
    let mut y_dd = BitSeq::with_capacity(y_prime.len() + slots.len());
    {
        let mut flagged = slots
            .iter()
            .zip(ins.break_flags.iter())
            .filter(|&(_, &f)| f)
            .map(|(&p, _)| p)
            .peekable();
        for p in 0..=y_prime.len() {
            if flagged.peek() == Some(&p) {
                flagged.next();
                // the inserted bit is forced: complement of the equal
                // neighbors, or of the single end neighbor
                let b = if p < y_prime.len() {
                    !y_prime.get(p)
                } else if p > 0 {
                    !y_prime.get(p - 1)
                } else {
                    return Err(Error::corruption(
                        "insertions",
                        "break into an empty sequence",
                    ));
                };
                y_dd.push(b);
            }
            if p < y_prime.len() {
                y_dd.push(y_prime.get(p));
            }
        }
    }

    let burst_total: usize = ins.bursts.iter().map(|b| b.content.len()).sum();
    let mut z_y = BitSeq::with_capacity(y_dd.len() + burst_total);
    let mut prev = 0usize;
    for burst in &ins.bursts {
        if burst.content.is_empty() {
            return Err(Error::corruption("bursts", "empty burst content"));
        }
        if burst.slot < prev || burst.slot > y_dd.len() {
            return Err(Error::corruption(
                "bursts",
                format!("slot {} out of order or beyond sequence", burst.slot),
            ));
        }
        for p in prev..burst.slot {
            z_y.push(y_dd.get(p));
        }
        z_y.extend_from(&burst.content);
        prev = burst.slot;
    }
    for p in prev..y_dd.len() {
        z_y.push(y_dd.get(p));
    }

    if sub.mask.len() != z_y.len() {
        return Err(Error::corruption(
            "substitutions",
            format!(
                "mask length {} does not match reconstructed length {}",
                sub.mask.len(),
                z_y.len()
            ),
        ));
    }
    z_y.xor(&sub.mask)
}
