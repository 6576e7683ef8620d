//! Binary sequences, deletion patterns and run decomposition.
//!
//! Bits are stored packed, eight per byte, most-significant-bit first, with
//! an explicit bit length. All indices are 0-based logical bit positions.

use std::fmt;
use std::io::{Read, Write};

use crate::{Error, Result};

/// A finite binary sequence.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSeq {
    bytes: Vec<u8>,
    len: usize,
}

impl BitSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitSeq {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    /// Builds a sequence from 0/1 values; handy in tests and goldens.
    pub fn from_01(bits: &[u8]) -> Self {
        bits.iter().map(|&b| b != 0).collect()
    }

    /// Reassembles a sequence from packed MSB-first bytes and a bit length.
    /// Padding bits in the final partial byte must be zero.
    pub fn from_packed(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::corruption(
                "bitseq",
                format!("{} bytes cannot hold exactly {} bits", bytes.len(), len),
            ));
        }
        if len % 8 != 0 {
            let last = bytes[bytes.len() - 1];
            if last & (0xFFu8 >> (len % 8)) != 0 {
                return Err(Error::corruption("bitseq", "nonzero padding bits"));
            }
        }
        Ok(BitSeq { bytes, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {} out of range {}", i, self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let i = self.len;
            self.bytes[i / 8] |= 0x80 >> (i % 8);
        }
        self.len += 1;
    }

    pub fn extend_from(&mut self, other: &BitSeq) {
        for b in other.iter() {
            self.push(b);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        let full: usize = self.bytes.iter().map(|b| b.count_ones() as usize).sum();
        // padding bits are kept zero, so no correction needed
        full
    }

    /// Bitwise XOR of two equal-length sequences.
    pub fn xor(&self, other: &BitSeq) -> Result<BitSeq> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                pattern: other.len,
                sequence: self.len,
            });
        }
        let bytes = self
            .bytes
            .iter()
            .zip(other.bytes.iter())
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitSeq {
            bytes,
            len: self.len,
        })
    }

    pub fn as_packed_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Raw bit-sequence file format: 8-byte little-endian bit count, then
    /// ceil(n/8) bytes packed MSB-first, final partial byte zero-padded.
    pub fn write_raw<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.len as u64).to_le_bytes())?;
        w.write_all(&self.bytes)?;
        Ok(())
    }

    pub fn read_raw<R: Read>(r: &mut R) -> Result<Self> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header)?;
        let len = u64::from_le_bytes(header);
        if len > (1u64 << 48) {
            return Err(Error::corruption("bitseq", "implausible bit count"));
        }
        let len = len as usize;
        let mut bytes = vec![0u8; len.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        Self::from_packed(bytes, len)
    }
}

impl FromIterator<bool> for BitSeq {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut seq = BitSeq::new();
        for b in iter {
            seq.push(b);
        }
        seq
    }
}

impl fmt::Debug for BitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSeq[")?;
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, "]")
    }
}

/// A 0/1 flag sequence marking which positions of a parent sequence are
/// deleted. Same length as the parent it applies to.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DeletionPattern(pub BitSeq);

impl DeletionPattern {
    pub fn from_01(flags: &[u8]) -> Self {
        DeletionPattern(BitSeq::from_01(flags))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn deletions(&self) -> usize {
        self.0.count_ones()
    }
}

/// One maximal block of a repeated symbol.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Run {
    pub symbol: bool,
    pub extent: usize,
    /// 0-based position of the first bit of the run.
    pub start: usize,
}

/// The runs of a sequence plus per-extent bookkeeping: `extent_counts[l]`
/// is U_l, the number of runs of extent `l`, and `max_extent` is L_max.
/// An empty sequence has no runs and an empty count table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RunDecomposition {
    pub runs: Vec<Run>,
    extent_counts: Vec<usize>,
    by_extent: Vec<Vec<usize>>,
    len: usize,
}

impl RunDecomposition {
    /// Number of runs of extent `l` (U_l). Zero for extents never seen.
    pub fn count_of_extent(&self, l: usize) -> usize {
        self.extent_counts.get(l).copied().unwrap_or(0)
    }

    /// L_max, or `None` for the empty sequence.
    pub fn max_extent(&self) -> Option<usize> {
        if self.runs.is_empty() {
            None
        } else {
            Some(self.extent_counts.len() - 1)
        }
    }

    pub fn num_runs(&self) -> usize {
        self.runs.len()
    }

    /// Length of the decomposed sequence.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The i-th run (0-based, left to right) among runs of extent exactly
    /// `l`. `i` must be below U_l.
    pub fn nth_run_of_extent(&self, l: usize, i: usize) -> Result<Run> {
        let indices = self.by_extent.get(l).map(Vec::as_slice).unwrap_or(&[]);
        match indices.get(i) {
            Some(&run_idx) => Ok(self.runs[run_idx]),
            None => Err(Error::RunIndexOutOfRange {
                extent: l,
                available: indices.len(),
                requested: i,
            }),
        }
    }

    /// Run indices of extent `l`, left to right.
    pub fn runs_of_extent(&self, l: usize) -> &[usize] {
        self.by_extent.get(l).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Splits a sequence into its runs in a single left-to-right pass.
pub fn decompose_runs(seq: &BitSeq) -> RunDecomposition {
    let mut runs = Vec::new();
    let mut iter = seq.iter();
    if let Some(first) = iter.next() {
        let mut symbol = first;
        let mut start = 0usize;
        let mut extent = 1usize;
        let mut pos = 1usize;
        for bit in iter {
            if bit == symbol {
                extent += 1;
            } else {
                runs.push(Run {
                    symbol,
                    extent,
                    start,
                });
                symbol = bit;
                start = pos;
                extent = 1;
            }
            pos += 1;
        }
        runs.push(Run {
            symbol,
            extent,
            start,
        });
    }

    let max_extent = runs.iter().map(|r| r.extent).max().unwrap_or(0);
    let mut extent_counts = vec![0usize; if runs.is_empty() { 0 } else { max_extent + 1 }];
    let mut by_extent = vec![Vec::new(); extent_counts.len()];
    for (idx, run) in runs.iter().enumerate() {
        extent_counts[run.extent] += 1;
        by_extent[run.extent].push(idx);
    }

    RunDecomposition {
        runs,
        extent_counts,
        by_extent,
        len: seq.len(),
    }
}

/// Deletes from `parent` every position flagged 1 in `pattern`, preserving
/// the order of the surviving bits.
pub fn apply_deletion(parent: &BitSeq, pattern: &DeletionPattern) -> Result<BitSeq> {
    if parent.len() != pattern.len() {
        return Err(Error::LengthMismatch {
            pattern: pattern.len(),
            sequence: parent.len(),
        });
    }
    Ok(parent
        .iter()
        .zip(pattern.0.iter())
        .filter(|&(_, del)| !del)
        .map(|(bit, _)| bit)
        .collect())
}
