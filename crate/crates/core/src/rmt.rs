//! Random-matrix and Poissonian reference values for the partial spectral
//! form factor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gates::haar_unitary;
use crate::linalg::{CMat, C64};

/// Dimensions of a bipartite Hilbert space `H = H_A ⊗ H_Ac`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleParams {
    subsystem: usize,
    complement: usize,
}

impl EnsembleParams {
    pub fn new(subsystem: usize, complement: usize) -> Result<Self> {
        if subsystem == 0 || complement == 0 {
            return Err(invalid("subsystem dimensions must be positive"));
        }
        subsystem.checked_mul(complement).ok_or_else(|| invalid("total dimension overflows"))?;
        Ok(EnsembleParams { subsystem, complement })
    }

    /// Chain of `sites` sites of dimension `d` with the first `sub_sites` in A.
    pub fn for_chain(d: usize, sites: usize, sub_sites: usize) -> Result<Self> {
        if sub_sites > sites {
            return Err(invalid("subsystem larger than the chain"));
        }
        let pow = |n: usize| crate::linalg::checked_pow(d, n);
        Self::new(pow(sub_sites)?, pow(sites - sub_sites)?)
    }

    pub fn total(&self) -> usize {
        self.subsystem * self.complement
    }

    pub fn subsystem(&self) -> usize {
        self.subsystem
    }

    pub fn complement(&self) -> usize {
        self.complement
    }
}

/// CUE spectral form factor, `min(t, D)`.
pub fn sff_cue(t: u64, dim: usize) -> f64 {
    t.min(dim as u64) as f64
}

/// CUE partial spectral form factor at finite dimension.
pub fn psff_cue_finite(t: u64, params: &EnsembleParams) -> Result<f64> {
    let dim = params.total() as f64;
    if params.total() < 2 {
        return Err(invalid("finite-dimension CUE value needs D >= 2"));
    }
    let da = params.subsystem() as f64;
    let norm = dim * dim - 1.0;
    let offset = dim * dim / norm * (da - 1.0 / da);
    let ramp = (dim * dim - 1.0 / (da * da)) / norm * sff_cue(t, params.total()) / da;
    Ok(offset + ramp)
}

/// CUE partial spectral form factor with the complement taken infinite.
pub fn psff_cue_tdl(t: u64, subsystem: usize) -> f64 {
    let da = subsystem as f64;
    da + (t as f64 - 1.0) / da
}

/// Uncorrelated phases on product eigenstates: `K = D` for every `t > 0`.
pub fn psff_poisson_product(dim: usize) -> f64 {
    dim as f64
}

/// Uncorrelated phases on Haar-random eigenstates, large-dimension limit.
pub fn psff_poisson_cue_states(subsystem: usize, complement: usize) -> f64 {
    (subsystem + complement) as f64
}

/// Uncorrelated phases on Haar-random eigenstates at finite dimension: the
/// CUE expression on its plateau.
pub fn psff_poisson_cue_states_finite(params: &EnsembleParams) -> Result<f64> {
    psff_cue_finite(params.total() as u64, params)
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, n_samples: n }
    }
}

fn random_phases<R: Rng + ?Sized>(n: usize, t: u64, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU * t as f64)).collect()
}

/// Samples the product model: eigenphases uniform, eigenstates `|a>|c>`.
pub fn poisson_product_monte_carlo<R: Rng + ?Sized>(
    params: &EnsembleParams,
    t: u64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let samples: Vec<f64> = (0..n_samples)
        .map(|_| {
            let z = random_phases(params.total(), t, rng);
            z.chunks(params.complement()).map(|row| row.iter().sum::<C64>().norm_sqr()).sum()
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Samples uniform eigenphases with Haar-random eigenstates.
pub fn poisson_cue_states_monte_carlo<R: Rng + ?Sized>(
    params: &EnsembleParams,
    t: u64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let dim = params.total();
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let v = haar_unitary(dim, rng);
        let z = random_phases(dim, t, rng);
        let mut scaled = v.clone();
        for (mut col, zn) in scaled.column_iter_mut().zip(&z) {
            col *= *zn;
        }
        let evolution: CMat = scaled * v.adjoint();
        let reduced = partial_trace_complement(&evolution, params);
        samples.push(reduced.iter().map(|x| x.norm_sqr()).sum());
    }
    Ok(Estimate::from_samples(&samples))
}

fn partial_trace_complement(op: &CMat, params: &EnsembleParams) -> CMat {
    let dc = params.complement();
    CMat::from_fn(params.subsystem(), params.subsystem(), |a, b| (0..dc).map(|c| op[(a * dc + c, b * dc + c)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn sff_examples() {
        assert_eq!(sff_cue(0, 16), 0.0);
        assert_eq!(sff_cue(8, 16), 8.0);
        assert_eq!(sff_cue(40, 16), 16.0);
    }

    #[test]
    fn finite_examples() {
        let p = EnsembleParams::new(4, 4).unwrap();
        let expected = 960.0 / 255.0 + 255.9375 / 255.0 * 2.0;
        assert!((psff_cue_finite(8, &p).unwrap() - expected).abs() < 1e-12);
        assert!((psff_cue_finite(8, &p).unwrap() - 5.77206).abs() < 1e-5);
        assert!(psff_cue_finite(3, &EnsembleParams::new(1, 1).unwrap()).is_err());
    }

    #[test]
    fn finite_reduces_to_sff_for_trivial_subsystem() {
        for exp in 1..=12 {
            let dim = 1usize << exp;
            let p = EnsembleParams::new(1, dim).unwrap();
            for t in [0, 1, 2, 7, dim as u64 - 1, dim as u64, dim as u64 + 5, 10 * dim as u64] {
                assert_eq!(psff_cue_finite(t, &p).unwrap(), sff_cue(t, dim), "D={dim} t={t}");
            }
        }
    }

    #[test]
    fn finite_approaches_thermodynamic_limit() {
        for t in [1, 3, 10] {
            let p = EnsembleParams::new(4, 1 << 20).unwrap();
            assert!((psff_cue_finite(t, &p).unwrap() - psff_cue_tdl(t, 4)).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_is_monotone_with_plateau() {
        let p = EnsembleParams::new(4, 16).unwrap();
        let mut last = f64::NEG_INFINITY;
        for t in 0..200 {
            let k = psff_cue_finite(t, &p).unwrap();
            assert!(k >= last);
            if t >= 64 {
                assert_eq!(k, psff_cue_finite(64, &p).unwrap());
            }
            last = k;
        }
    }

    #[test]
    fn thermodynamic_limit_examples() {
        assert_eq!(psff_cue_tdl(1, 4), 4.0);
        assert_eq!(psff_cue_tdl(5, 4), 5.0);
        assert_eq!(psff_cue_tdl(21, 2), 12.0);
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(psff_poisson_product(64), 64.0);
        assert_eq!(psff_poisson_product(1), 1.0);
        assert_eq!(psff_poisson_cue_states(4, 4), 8.0);
        assert_eq!(psff_poisson_cue_states(16, 1), 17.0);
        let plateau = psff_cue_finite(1000, &EnsembleParams::new(1, 256).unwrap()).unwrap();
        assert!((psff_poisson_cue_states(1, 256) - plateau).abs() <= 1.0);
        let p = EnsembleParams::new(4, 4).unwrap();
        assert_eq!(psff_poisson_cue_states_finite(&p).unwrap(), psff_cue_finite(16, &p).unwrap());
    }

    #[test]
    fn product_model_monte_carlo_shrinks_like_inverse_root() {
        let p = EnsembleParams::new(4, 4).unwrap();
        let small = poisson_product_monte_carlo(&p, 7, 1_000, &mut stream_rng(1, Stream::Poisson, 0)).unwrap();
        let large = poisson_product_monte_carlo(&p, 7, 10_000, &mut stream_rng(1, Stream::Poisson, 1)).unwrap();
        for est in [small, large] {
            assert!((est.mean - 16.0).abs() < 3.0 * est.stderr, "{est:?}");
        }
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 10f64.sqrt()).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn haar_state_model_matches_finite_plateau() {
        let p = EnsembleParams::new(4, 4).unwrap();
        let est = poisson_cue_states_monte_carlo(&p, 5, 2_000, &mut stream_rng(2, Stream::Poisson, 0)).unwrap();
        let expected = psff_poisson_cue_states_finite(&p).unwrap();
        assert!((est.mean - expected).abs() < 4.0 * est.stderr, "{est:?} vs {expected}");
    }
}
