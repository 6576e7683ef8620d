//! Seeded sampling from the source model: an iid Bernoulli(p) sequence
//! `Z_X`, its BSC(q) image `Z_Y`, and independent Bernoulli deletion
//! patterns producing `X` and `Y`.
//!
//! Randomness comes from a counter-based generator (ChaCha12) with one
//! fixed sub-stream per random object, so adding a stream never perturbs
//! the others and identical parameters always reproduce the same instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::seqcore::{apply_deletion, BitSeq, DeletionPattern};
use crate::{Error, Result};

/// Sub-stream labels; the order is part of the reproducibility contract.
const STREAM_ZX: u64 = 0; // "zx"
const STREAM_BSC: u64 = 1; // "bsc"
const STREAM_DX: u64 = 2; // "dx"
const STREAM_DY: u64 = 3; // "dy"

/// Parameters of one sampled instance.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SourceParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub d_x: f64,
    pub d_y: f64,
    pub seed: u64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be positive".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParams(format!(
                "p must lie in (0, 1), got {}",
                self.p
            )));
        }
        for (name, v) in [("q", self.q), ("dx", self.d_x), ("dy", self.d_y)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParams(format!(
                    "{} must lie in [0, 1), got {}",
                    name, v
                )));
            }
        }
        Ok(())
    }

    /// Pure-deletion regime: the source is a subsequence of the
    /// side-information.
    pub fn is_pure_deletion(&self) -> bool {
        self.q == 0.0 && self.d_y == 0.0
    }
}

/// One sampled (Z_X, Z_Y, D_X, D_Y, X, Y) tuple.
#[derive(Clone, PartialEq, Debug)]
pub struct SimInstance {
    pub z_x: BitSeq,
    pub z_y: BitSeq,
    pub d_xpat: DeletionPattern,
    pub d_ypat: DeletionPattern,
    pub x: BitSeq,
    pub y: BitSeq,
    pub params: SourceParams,
}

fn stream(seed: u64, label: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

fn bernoulli_seq(seed: u64, label: u64, n: usize, p: f64) -> BitSeq {
    let mut rng = stream(seed, label);
    (0..n).map(|_| rng.random_bool(p)).collect()
}

/// Samples one instance. Identical parameters (including the seed) produce
/// a bit-identical instance.
pub fn generate(params: &SourceParams) -> Result<SimInstance> {
    params.validate()?;
    let n = params.n;
    let z_x = bernoulli_seq(params.seed, STREAM_ZX, n, params.p);
    let noise = bernoulli_seq(params.seed, STREAM_BSC, n, params.q);
    let z_y = z_x.xor(&noise)?;
    let d_xpat = DeletionPattern(bernoulli_seq(params.seed, STREAM_DX, n, params.d_x));
    let d_ypat = DeletionPattern(bernoulli_seq(params.seed, STREAM_DY, n, params.d_y));
    let x = apply_deletion(&z_x, &d_xpat)?;
    let y = apply_deletion(&z_y, &d_ypat)?;
    Ok(SimInstance {
        z_x,
        z_y,
        d_xpat,
        d_ypat,
        x,
        y,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64, q: f64, d_x: f64, d_y: f64, seed: u64) -> SourceParams {
        SourceParams {
            n,
            p,
            q,
            d_x,
            d_y,
            seed,
        }
    }

    #[test]
    fn pure_deletion_regime() {
        let inst = generate(&params(500, 0.5, 0.0, 0.1, 0.0, 1)).unwrap();
        assert_eq!(inst.y, inst.z_x);
        // x is a subsequence of y
        assert!(crate::align::greedy_align(&inst.x, &inst.y).is_ok());
    }

    #[test]
    fn full_deletion_leaves_empty_source() {
        // with d_x extremely close to 1 and tiny n, an all-ones pattern
        // empties the source
        let inst = generate(&params(4, 0.5, 0.0, 0.999_999_999, 0.0, 2)).unwrap();
        if inst.d_xpat.deletions() == 4 {
            assert!(inst.x.is_empty());
        }
        assert_eq!(inst.x.len(), 4 - inst.d_xpat.deletions());
    }

    #[test]
    fn empirical_marginals_within_binomial_bounds() {
        let n = 1_000_000usize;
        let inst = generate(&params(n, 0.5, 0.02, 0.01, 0.03, 3)).unwrap();
        let bound = |p: f64, sigmas: f64| sigmas * (p * (1.0 - p) / n as f64).sqrt();

        let mean_zx = inst.z_x.count_ones() as f64 / n as f64;
        assert!((mean_zx - 0.5).abs() < bound(0.5, 4.0));

        let flips = inst.z_x.xor(&inst.z_y).unwrap().count_ones() as f64 / n as f64;
        assert!((flips - 0.02).abs() < bound(0.02, 4.0));

        let dx = inst.d_xpat.deletions() as f64 / n as f64;
        assert!((dx - 0.01).abs() < bound(0.01, 4.0));
        let dy = inst.d_ypat.deletions() as f64 / n as f64;
        assert!((dy - 0.03).abs() < bound(0.03, 4.0));
    }

    #[test]
    fn deletion_pattern_independent_of_source() {
        let n = 1_000_000usize;
        let inst = generate(&params(n, 0.5, 0.0, 0.5, 0.0, 4)).unwrap();
        // sample correlation between d_xpat and z_x stays below 4/sqrt(n)
        let mean_z = inst.z_x.count_ones() as f64 / n as f64;
        let mean_d = inst.d_xpat.deletions() as f64 / n as f64;
        let mut cov = 0.0;
        for (z, d) in inst.z_x.iter().zip(inst.d_xpat.0.iter()) {
            cov += (f64::from(u8::from(z)) - mean_z) * (f64::from(u8::from(d)) - mean_d);
        }
        cov /= n as f64;
        let var_z = mean_z * (1.0 - mean_z);
        let var_d = mean_d * (1.0 - mean_d);
        let corr = cov / (var_z * var_d).sqrt();
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr = {}", corr);
    }

    #[test]
    fn reproducible_and_stream_separated() {
        let p = params(2_000, 0.3, 0.01, 0.02, 0.03, 99);
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(a, b);

        let c = generate(&params(2_000, 0.3, 0.01, 0.02, 0.03, 100)).unwrap();
        assert_ne!(a.z_x, c.z_x);

        // distinct sub-streams produce distinct sequences at equal rates
        let s1 = bernoulli_seq(7, STREAM_ZX, 4_096, 0.5);
        let s2 = bernoulli_seq(7, STREAM_BSC, 4_096, 0.5);
        assert_ne!(s1, s2);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(generate(&params(0, 0.5, 0.0, 0.0, 0.0, 1)).is_err());
        assert!(generate(&params(10, 1.5, 0.0, 0.0, 0.0, 1)).is_err());
        assert!(generate(&params(10, 0.5, 1.0, 0.0, 0.0, 1)).is_err());
        assert!(generate(&params(10, 0.5, 0.0, -0.1, 0.0, 1)).is_err());
    }
}
