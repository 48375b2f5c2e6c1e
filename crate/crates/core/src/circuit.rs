//! Exact finite-size PSFF of disordered dual-unitary brickwork circuits with
//! periodic boundaries.
//!
//! Sites are 0-indexed in code, site 0 being the most significant digit of
//! the product basis. The even layer acts on bonds `(2x, 2x+1)`, the odd
//! layer on `(2x+1, 2x+2 mod 2L)` with the left site as first tensor factor.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, PsffError, Result};
use crate::gates::{disorder_unitary, random_du_gate, DisorderSpec, LocalGate};
use crate::linalg::{apply_two_site, checked_pow, identity, Bipartition, CMat, MemoryBudget, UnitaryEigen, C64, ZERO};
use crate::rmt::Estimate;
use crate::rng::{stream_rng, Stream};
use crate::series::{Method, PsffSeries};

/// Quasi-energy gap below which a realization counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Full configuration of a finite-size experiment.
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub d: usize,
    /// Number of two-site cells; the chain has `2 * half_chain` sites.
    pub half_chain: usize,
    /// Subsystem A is the first `2 * half_subsystem` sites.
    pub half_subsystem: usize,
    pub coupling: f64,
    pub sigma: f64,
    pub base_gate: LocalGate,
    pub seed: u64,
    pub n_samples: usize,
    pub budget: MemoryBudget,
}

impl CircuitSpec {
    /// Draws the clean gate from the seed's base-gate stream.
    pub fn new(
        d: usize,
        half_chain: usize,
        half_subsystem: usize,
        coupling: f64,
        sigma: f64,
        seed: u64,
        n_samples: usize,
    ) -> Result<Self> {
        if d < 2 {
            return Err(invalid("local dimension must be at least 2"));
        }
        let base_gate = random_du_gate(d, coupling, &mut stream_rng(seed, Stream::BaseGate, 0))?;
        let spec = CircuitSpec {
            d,
            half_chain,
            half_subsystem,
            coupling,
            sigma,
            base_gate,
            seed,
            n_samples,
            budget: MemoryBudget::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.base_gate.d() != self.d {
            return Err(invalid("local dimension mismatch or below 2"));
        }
        if self.half_chain == 0 {
            return Err(invalid("chain needs at least two sites"));
        }
        if self.half_subsystem > self.half_chain {
            return Err(invalid(format!(
                "subsystem half-length {} exceeds chain half-length {}",
                self.half_subsystem, self.half_chain
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("disorder strength must be finite and non-negative"));
        }
        self.budget.check_dense(self.dim()?)
    }

    pub fn sites(&self) -> usize {
        2 * self.half_chain
    }

    pub fn dim(&self) -> Result<usize> {
        checked_pow(self.d, self.sites())
    }

    pub fn subsystem(&self) -> Subsystem {
        Subsystem::leading(2 * self.half_subsystem)
    }
}

/// A set of sites forming subsystem A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    sites: Vec<usize>,
}

impl Subsystem {
    /// Sites `0..len`.
    pub fn leading(len: usize) -> Self {
        Subsystem { sites: (0..len).collect() }
    }

    /// `len` consecutive sites from `first`, wrapping around a ring of `ring` sites.
    pub fn block(first: usize, len: usize, ring: usize) -> Self {
        Subsystem { sites: (0..len).map(|k| (first + k) % ring).collect() }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }
}

/// Disordered gates of one realization, indexed by bond within each layer.
#[derive(Debug, Clone)]
pub struct CircuitGates {
    pub d: usize,
    pub sites: usize,
    pub even: Vec<CMat>,
    pub odd: Vec<CMat>,
}

impl CircuitGates {
    /// Sites `(first, second)` of bond `x` in the even or odd layer.
    pub fn bond_sites(&self, odd: bool, x: usize) -> (usize, usize) {
        if odd {
            (2 * x + 1, (2 * x + 2) % self.sites)
        } else {
            (2 * x, 2 * x + 1)
        }
    }

    /// `U = U_odd U_even`.
    pub fn floquet(&self) -> Result<CMat> {
        let dim = checked_pow(self.d, self.sites)?;
        let mut u = identity(dim);
        self.apply_layer(&mut u, false);
        self.apply_layer(&mut u, true);
        Ok(u)
    }

    /// Left-multiplies `state` by one layer.
    pub fn apply_layer(&self, state: &mut CMat, odd: bool) {
        let gates = if odd { &self.odd } else { &self.even };
        for (x, g) in gates.iter().enumerate() {
            let (a, b) = self.bond_sites(odd, x);
            apply_two_site(state, g, self.d, self.sites, a, b);
        }
    }
}

/// Draws the gates of realization `index`: one on-site unitary per site and
/// layer, dressing the clean gate on every bond.
pub fn sample_gates(spec: &CircuitSpec, index: u64) -> Result<CircuitGates> {
    let disorder = DisorderSpec::new(spec.d, spec.sigma)?;
    let mut rng = stream_rng(spec.seed, Stream::Disorder, index);
    let n = spec.sites();
    let mut layer = |shift: usize| -> Vec<CMat> {
        let locals: Vec<CMat> = (0..n).map(|_| disorder_unitary(&disorder, &mut rng)).collect();
        (0..spec.half_chain)
            .map(|x| {
                let a = 2 * x + shift;
                spec.base_gate.dressed(&locals[a], &locals[(a + 1) % n])
            })
            .collect()
    };
    let even = layer(0);
    let odd = layer(1);
    Ok(CircuitGates { d: spec.d, sites: n, even, odd })
}

/// Floquet operator of one realization with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct FloquetRealization {
    pub d: usize,
    pub sites: usize,
    pub operator: CMat,
    pub eigen: UnitaryEigen,
}

impl FloquetRealization {
    pub fn from_gates(gates: &CircuitGates) -> Result<Self> {
        let operator = gates.floquet()?;
        let eigen = UnitaryEigen::new(&operator)?;
        Ok(FloquetRealization { d: gates.d, sites: gates.sites, operator, eigen })
    }

    pub fn dim(&self) -> usize {
        self.operator.nrows()
    }

    fn bipartition(&self, subsystem: &Subsystem) -> Result<Bipartition> {
        Bipartition::new(self.d, self.sites, subsystem.sites())
    }

    /// `U^t` assembled from the eigendecomposition.
    pub fn power(&self, t: u64) -> CMat {
        let v = &self.eigen.vectors;
        let mut scaled = v.clone();
        for (mut col, phi) in scaled.column_iter_mut().zip(&self.eigen.phases) {
            col *= C64::from_polar(1.0, phi * t as f64);
        }
        scaled * v.adjoint()
    }
}

pub fn build_floquet(spec: &CircuitSpec, index: u64) -> Result<FloquetRealization> {
    spec.validate()?;
    FloquetRealization::from_gates(&sample_gates(spec, index)?)
}

/// `tr_{A^c} U^t` from the eigendecomposition.
pub fn reduced_evolution(real: &FloquetRealization, subsystem: &Subsystem, t: u64) -> Result<CMat> {
    if subsystem.sites().len() > real.sites {
        return Err(invalid("subsystem larger than the chain"));
    }
    Ok(real.bipartition(subsystem)?.trace_out(&real.power(t)))
}

/// `tr_A[U_A(t) U_A(t)^†]` for one realization.
pub fn psff_sample(real: &FloquetRealization, subsystem: &Subsystem, t: u64) -> Result<f64> {
    let m = reduced_evolution(real, subsystem, t)?;
    Ok(m.iter().map(|z| z.norm_sqr()).sum())
}

/// Reduced eigenprojectors `ρ_n = tr_{A^c} |n><n|`, enabling `O(D D_A²)`
/// evaluation of the PSFF at each time.
#[derive(Debug, Clone)]
pub struct ReducedSpectrum {
    phases: Vec<f64>,
    kept_dim: usize,
    /// `ρ_n` row-major, concatenated over `n`.
    blocks: Vec<C64>,
}

impl ReducedSpectrum {
    pub fn new(real: &FloquetRealization, subsystem: &Subsystem, budget: MemoryBudget) -> Result<Self> {
        let bp = real.bipartition(subsystem)?;
        let (ka, kc) = (bp.kept_dim(), bp.rest_dim());
        let dim = real.dim();
        let bytes = (dim as u128) * (ka as u128) * (ka as u128) * 16;
        if bytes > budget.0 {
            return Err(PsffError::MemoryBudget { dim, bytes, budget: budget.0 });
        }
        let v = &real.eigen.vectors;
        let mut blocks = vec![ZERO; dim * ka * ka];
        for n in 0..dim {
            let col = v.column(n);
            let block = &mut blocks[n * ka * ka..(n + 1) * ka * ka];
            for a in 0..ka {
                for b in 0..ka {
                    block[a * ka + b] = (0..kc).map(|c| col[bp.index(a, c)] * col[bp.index(b, c)].conj()).sum();
                }
            }
        }
        Ok(ReducedSpectrum { phases: real.eigen.phases.clone(), kept_dim: ka, blocks })
    }

    pub fn psff(&self, t: u64) -> f64 {
        let k2 = self.kept_dim * self.kept_dim;
        let mut acc = vec![ZERO; k2];
        for (n, phi) in self.phases.iter().enumerate() {
            let z = C64::from_polar(1.0, phi * t as f64);
            for (a, r) in acc.iter_mut().zip(&self.blocks[n * k2..(n + 1) * k2]) {
                *a += z * r;
            }
        }
        acc.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(1/D) Σ_n tr ρ_n²`.
    pub fn mean_purity(&self) -> f64 {
        let k2 = self.kept_dim * self.kept_dim;
        let ka = self.kept_dim;
        let total: f64 = self
            .blocks
            .chunks(k2)
            .map(|rho| {
                let mut s = 0.0;
                for a in 0..ka {
                    for b in 0..ka {
                        s += (rho[a * ka + b] * rho[b * ka + a]).re;
                    }
                }
                s
            })
            .sum();
        total / self.phases.len() as f64
    }
}

/// PSFF values of one realization at the requested times.
pub fn realization_series(
    real: &FloquetRealization,
    subsystem: &Subsystem,
    times: &[u64],
    budget: MemoryBudget,
) -> Result<Vec<f64>> {
    match ReducedSpectrum::new(real, subsystem, budget) {
        Ok(rs) => Ok(times.iter().map(|&t| rs.psff(t)).collect()),
        Err(PsffError::MemoryBudget { .. }) => times.iter().map(|&t| psff_sample(real, subsystem, t)).collect(),
        Err(e) => Err(e),
    }
}

/// Per-realization PSFF values, indexed `[realization][time]`.
pub fn realization_samples(spec: &CircuitSpec, subsystem: &Subsystem, times: &[u64]) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if spec.n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let real = build_floquet(spec, i)?;
            realization_series(&real, subsystem, times, spec.budget)
        })
        .collect()
}

/// Mean and standard error per time from [`realization_samples`] output.
pub fn summarize(times: &[u64], per_sample: &[Vec<f64>]) -> PsffSeries {
    let mut series = PsffSeries::new(Method::Finite);
    for (k, &t) in times.iter().enumerate() {
        let column: Vec<f64> = per_sample.iter().map(|v| v[k]).collect();
        let est = Estimate::from_samples(&column);
        series.push(t, est.mean, est.stderr, est.n_samples);
    }
    series
}

/// Disorder average over `spec.n_samples` realizations for a given subsystem.
pub fn psff_ensemble_for(spec: &CircuitSpec, subsystem: &Subsystem, times: &[u64]) -> Result<PsffSeries> {
    Ok(summarize(times, &realization_samples(spec, subsystem, times)?))
}

pub fn psff_ensemble(spec: &CircuitSpec, times: &[u64]) -> Result<PsffSeries> {
    psff_ensemble_for(spec, &spec.subsystem(), times)
}

/// Long-time average of the PSFF against the mean eigenstate purity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityCheck {
    /// `(1/(D T)) Σ_{t=1}^{T} K(t)`.
    pub time_average: f64,
    /// `(1/D) Σ_n tr_A ρ_n²`.
    pub eigenstate_purity: f64,
    pub min_gap: f64,
    pub near_degenerate: bool,
}

pub fn purity_check(real: &FloquetRealization, subsystem: &Subsystem, window: u64) -> Result<PurityCheck> {
    if window == 0 {
        return Err(invalid("averaging window must be positive"));
    }
    let rs = ReducedSpectrum::new(real, subsystem, MemoryBudget::default())?;
    let dim = real.dim() as f64;
    let time_average = (1..=window).map(|t| rs.psff(t)).sum::<f64>() / (window as f64 * dim);
    let min_gap = real.eigen.min_gap();
    Ok(PurityCheck {
        time_average,
        eigenstate_purity: rs.mean_purity(),
        min_gap,
        near_degenerate: min_gap < DEGENERACY_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::is_unitary;
    use crate::linalg::{max_abs, ONE};

    fn spec(half_chain: usize, half_subsystem: usize, sigma: f64) -> CircuitSpec {
        CircuitSpec::new(2, half_chain, half_subsystem, 0.2, sigma, 11, 4).unwrap()
    }

    /// `Π |j_1 ... j_n> = |j_n j_1 ... j_{n-1}>`.
    fn cyclic_shift(d: usize, n: usize) -> CMat {
        let dim = d.pow(n as u32);
        let mut m = CMat::zeros(dim, dim);
        for i in 0..dim {
            let last = i % d;
            let image = last * d.pow(n as u32 - 1) + i / d;
            m[(image, i)] = ONE;
        }
        m
    }

    #[test]
    fn odd_layer_is_a_conjugated_even_layer() {
        for half_chain in 1..=3 {
            let s = spec(half_chain, 0, 1.0);
            let g = sample_gates(&s, 0).unwrap();
            let dim = 2usize.pow(2 * half_chain as u32);
            let mut direct = identity(dim);
            g.apply_layer(&mut direct, true);
            let mut shifted = identity(dim);
            for (x, gate) in g.odd.iter().enumerate() {
                apply_two_site(&mut shifted, gate, 2, g.sites, 2 * x, 2 * x + 1);
            }
            let pi = cyclic_shift(2, g.sites);
            let conj = &pi * shifted * pi.transpose();
            assert!(max_abs(&(conj - direct)) < 1e-14, "L={half_chain}");
        }
    }

    #[test]
    fn clean_two_site_chain() {
        let s = spec(1, 0, 0.0);
        let real = build_floquet(&s, 0).unwrap();
        let u0 = s.base_gate.matrix();
        let p = crate::gates::swap(2);
        let expected = &p * u0 * &p * u0;
        assert!(max_abs(&(&real.operator - expected)) < 1e-14);
        assert!(is_unitary(&real.operator, 1e-10));
    }

    #[test]
    fn spectra_are_unimodular_and_reconstruct() {
        let s = spec(3, 1, 1.0);
        for i in 0..50 {
            let real = build_floquet(&s, i).unwrap();
            assert!(real.eigen.reconstruction_residual(&real.operator) < 1e-10 * 64.0);
        }
    }

    #[test]
    fn realizations_are_deterministic() {
        let s = spec(2, 1, 1.0);
        let a = build_floquet(&s, 3).unwrap();
        let b = build_floquet(&s, 3).unwrap();
        assert_eq!(a.operator, b.operator);
        let c = build_floquet(&s, 4).unwrap();
        assert_ne!(a.operator, c.operator);
    }

    #[test]
    fn reduced_evolution_edge_cases() {
        let s = spec(2, 1, 1.0);
        let real = build_floquet(&s, 0).unwrap();
        let full = reduced_evolution(&real, &Subsystem::leading(4), 3).unwrap();
        assert!(max_abs(&(full - real.power(3))) < 1e-12);
        let scalar = reduced_evolution(&real, &Subsystem::leading(0), 3).unwrap();
        assert_eq!(scalar.nrows(), 1);
        assert!((scalar[(0, 0)] - real.power(3).trace()).norm() < 1e-12);
        let k = psff_sample(&real, &Subsystem::leading(0), 3).unwrap();
        assert!((k - real.power(3).trace().norm_sqr()).abs() < 1e-10);
        assert!((psff_sample(&real, &Subsystem::leading(4), 7).unwrap() - 16.0).abs() < 1e-10);
        assert!(reduced_evolution(&real, &Subsystem::leading(5), 1).is_err());
    }

    #[test]
    fn eigen_path_matches_repeated_multiplication() {
        let s = spec(3, 1, 1.0);
        let real = build_floquet(&s, 1).unwrap();
        let bp = Bipartition::new(2, 6, &[0, 1]).unwrap();
        let mut power = identity(64);
        for t in 1..=4 {
            power = &real.operator * power;
            let direct = bp.trace_out(&power);
            let via_eigen = reduced_evolution(&real, &s.subsystem(), t).unwrap();
            assert!(max_abs(&(direct - via_eigen)) < 1e-8);
        }
    }

    #[test]
    fn reduced_spectrum_matches_direct_psff() {
        let s = spec(3, 1, 1.0);
        let real = build_floquet(&s, 2).unwrap();
        let rs = ReducedSpectrum::new(&real, &s.subsystem(), MemoryBudget::default()).unwrap();
        for t in [1, 2, 5, 17, 300] {
            let a = rs.psff(t);
            let b = psff_sample(&real, &s.subsystem(), t).unwrap();
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
        let tiny = MemoryBudget(16);
        let fallback = realization_series(&real, &s.subsystem(), &[5], tiny).unwrap();
        assert!((fallback[0] - rs.psff(5)).abs() < 1e-9);
    }

    #[test]
    fn initial_times_are_constant() {
        for (half_chain, half_subsystem) in [(3, 1), (4, 1), (3, 2), (4, 2)] {
            let s = spec(half_chain, half_subsystem, 1.0);
            let da = 4f64.powi(half_subsystem as i32);
            for i in 0..5 {
                let real = build_floquet(&s, i).unwrap();
                for t in 1..=half_subsystem as u64 {
                    let k = psff_sample(&real, &s.subsystem(), t).unwrap();
                    assert!((k - da).abs() < 1e-8 * da, "t={t} K={k}");
                }
            }
        }
    }

    #[test]
    fn purity_examples() {
        let s = spec(3, 1, 1.0);
        let real = build_floquet(&s, 5).unwrap();
        let window = 640;
        let pc = purity_check(&real, &s.subsystem(), window).unwrap();
        assert!(!pc.near_degenerate);
        let scale = pc.eigenstate_purity;
        assert!((pc.time_average - pc.eigenstate_purity).abs() < 10.0 / (window as f64).sqrt() * scale);
        let pure = purity_check(&real, &Subsystem::leading(6), 50).unwrap();
        assert!((pure.time_average - 1.0).abs() < 1e-10);
        assert!((pure.eigenstate_purity - 1.0).abs() < 1e-10);
        let trivial = purity_check(&real, &Subsystem::leading(0), window).unwrap();
        assert!((trivial.eigenstate_purity - 1.0).abs() < 1e-12);
        assert!((trivial.time_average - 1.0).abs() < 10.0 / (window as f64).sqrt());
    }

    #[test]
    fn spec_validation() {
        assert!(CircuitSpec::new(2, 2, 3, 0.2, 1.0, 0, 1).is_err());
        assert!(CircuitSpec::new(2, 0, 0, 0.2, 1.0, 0, 1).is_err());
        assert!(CircuitSpec::new(2, 2, 1, 0.0, 1.0, 0, 1).is_err());
        assert!(CircuitSpec::new(2, 2, 1, 0.2, -1.0, 0, 1).is_err());
        assert!(matches!(CircuitSpec::new(2, 16, 1, 0.2, 1.0, 0, 1), Err(PsffError::MemoryBudget { .. })));
        let mut s = spec(2, 1, 1.0);
        s.n_samples = 0;
        assert!(psff_ensemble(&s, &[1]).is_err());
    }

    #[test]
    fn ensemble_is_reproducible() {
        let s = spec(2, 1, 1.0);
        let a = psff_ensemble(&s, &[1, 2, 3]).unwrap();
        let b = psff_ensemble(&s, &[1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert!((a.rows[0].value - 4.0).abs() < 1e-10);
        assert!(a.rows[0].stderr < 1e-6);
    }
}
