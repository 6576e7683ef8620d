//! Alignments between the source and the side-information.
//!
//! Two aligners are provided: a greedy leftmost scan for the case where the
//! source is a plain subsequence of the reference, and a minimum-edit
//! Needleman-Wunsch alignment (unit gap and substitution penalties) for the
//! general insertion/deletion/substitution case.

use crate::seqcore::{BitSeq, DeletionPattern};
use crate::{Error, Result};

/// One column of a gapped alignment of X against Y.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Column {
    /// Same bit in both sequences.
    Match(bool),
    /// x bit differs from y bit.
    Substitute { x: bool, y: bool },
    /// Bit present only in X (gap in the Y row).
    InsertX(bool),
    /// Bit present only in Y (gap in the X row).
    DeleteY(bool),
}

impl Column {
    pub fn x_bit(&self) -> Option<bool> {
        match *self {
            Column::Match(b) | Column::InsertX(b) => Some(b),
            Column::Substitute { x, .. } => Some(x),
            Column::DeleteY(_) => None,
        }
    }

    pub fn y_bit(&self) -> Option<bool> {
        match *self {
            Column::Match(b) | Column::DeleteY(b) => Some(b),
            Column::Substitute { y, .. } => Some(y),
            Column::InsertX(_) => None,
        }
    }

    pub fn cost(&self) -> usize {
        match self {
            Column::Match(_) => 0,
            _ => 1,
        }
    }
}

/// A gapped pairing of X and Y with per-column edit classification.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Alignment {
    pub columns: Vec<Column>,
    pub cost: usize,
}

impl Alignment {
    pub fn from_columns(columns: Vec<Column>) -> Self {
        let cost = columns.iter().map(Column::cost).sum();
        Alignment { columns, cost }
    }

    /// The X row with gaps dropped.
    pub fn x_side(&self) -> BitSeq {
        self.columns.iter().filter_map(Column::x_bit).collect()
    }

    /// The Y row with gaps dropped.
    pub fn y_side(&self) -> BitSeq {
        self.columns.iter().filter_map(Column::y_bit).collect()
    }
}

/// Both rows of an alignment with gaps filled in from the opposite row.
/// `z_x` and `z_y` have the same length and differ exactly at the
/// substitution columns.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FilledPair {
    pub z_x: BitSeq,
    pub z_y: BitSeq,
}

/// Matches each source bit to the leftmost unused occurrence of that bit in
/// the reference; unmatched reference bits become deletions. Succeeds iff
/// `x` is a subsequence of `y`.
pub fn greedy_align(x: &BitSeq, y: &BitSeq) -> Result<DeletionPattern> {
    let mut flags = BitSeq::with_capacity(y.len());
    let mut xi = 0usize;
    for yb in y.iter() {
        if xi < x.len() && x.get(xi) == yb {
            flags.push(false);
            xi += 1;
        } else {
            flags.push(true);
        }
    }
    if xi < x.len() {
        return Err(Error::NotSubsequence);
    }
    Ok(DeletionPattern(flags))
}

/// Minimum-edit alignment of `x` against `y` under unit penalties. The cost
/// of the result equals the Levenshtein distance. Ties during traceback are
/// broken deterministically: Match/Substitute over DeleteY over InsertX.
pub fn nw_align(x: &BitSeq, y: &BitSeq) -> Alignment {
    let n = x.len();
    let m = y.len();
    let xb: Vec<bool> = x.iter().collect();
    let yb: Vec<bool> = y.iter().collect();

    // cost rows are rolled; traceback directions are kept for every cell
    const DIAG: u8 = 0;
    const LEFT: u8 = 1; // DeleteY, consumes y
    const UP: u8 = 2; // InsertX, consumes x
    let mut dirs = vec![0u8; (n + 1) * (m + 1)];
    let mut prev = vec![0u32; m + 1];
    let mut curr = vec![0u32; m + 1];

    for j in 0..=m {
        prev[j] = j as u32;
        dirs[j] = LEFT;
    }
    for i in 1..=n {
        curr[0] = i as u32;
        dirs[i * (m + 1)] = UP;
        for j in 1..=m {
            let sub = prev[j - 1] + u32::from(xb[i - 1] != yb[j - 1]);
            let del = curr[j - 1] + 1;
            let ins = prev[j] + 1;
            // tie-break: diagonal, then DeleteY, then InsertX
            let (best, dir) = if sub <= del && sub <= ins {
                (sub, DIAG)
            } else if del <= ins {
                (del, LEFT)
            } else {
                (ins, UP)
            };
            curr[j] = best;
            dirs[i * (m + 1) + j] = dir;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let cost = prev[m] as usize;

    let mut columns = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match dirs[i * (m + 1) + j] {
            DIAG => {
                i -= 1;
                j -= 1;
                columns.push(if xb[i] == yb[j] {
                    Column::Match(xb[i])
                } else {
                    Column::Substitute { x: xb[i], y: yb[j] }
                });
            }
            LEFT => {
                j -= 1;
                columns.push(Column::DeleteY(yb[j]));
            }
            _ => {
                i -= 1;
                columns.push(Column::InsertX(xb[i]));
            }
        }
    }
    columns.reverse();

    let a = Alignment { columns, cost };
    debug_assert_eq!(a.x_side(), *x);
    debug_assert_eq!(a.y_side(), *y);
    a
}

/// Replaces each gap by the bit from the opposite row: the filled rows agree
/// everywhere except at substitution columns.
pub fn fill_gaps(a: &Alignment) -> FilledPair {
    let mut z_x = BitSeq::with_capacity(a.columns.len());
    let mut z_y = BitSeq::with_capacity(a.columns.len());
    for col in &a.columns {
        match *col {
            Column::Match(b) => {
                z_x.push(b);
                z_y.push(b);
            }
            Column::Substitute { x, y } => {
                z_x.push(x);
                z_y.push(y);
            }
            Column::InsertX(b) | Column::DeleteY(b) => {
                z_x.push(b);
                z_y.push(b);
            }
        }
    }
    FilledPair { z_x, z_y }
}
