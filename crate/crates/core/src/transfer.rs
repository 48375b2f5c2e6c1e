//! Space transfer operators on the folded time lattice.
//!
//! A column of the space-time network is read sideways: the `2t` time slots
//! of one site form a chain of `2t` qudits, and the folded space holds
//! operators `X` on that chain, vectorized row-major (forward sheet first).
//! Slot `σ` carries time step `2t - 1 - σ`, so slot `2t - 1` is the leg
//! crossing the periodic time boundary.
//!
//! A bond gate `U` becomes the column unitary built from `G = dual(U)^T`,
//! which maps the right site to the left one; its channel acts as
//! `X -> B X B^†`. Even bonds place `G` on slot pairs `(0,1), (2,3), ...`,
//! odd bonds on `(1,2), ..., (2t-1, 0)`, first factor on the lower slot of
//! each pair. Sites of subsystem A close the boundary slot with
//! `|1><1|`, which acts as `X -> 1 ⊗ tr_σ X`.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{sample_gates, CircuitGates, CircuitSpec, Subsystem};
use crate::error::{invalid, PsffError, Result};
use crate::gates::{disordered_gate, dual, DisorderSpec, LocalGate};
use crate::linalg::{apply_two_site, checked_pow, identity, max_abs, Bipartition, CMat, CVec, MemoryBudget, C64, ONE};
use crate::perm::{LatticeSplit, Permutation};
use crate::rng::{stream_rng, Stream};

/// Tensor-factor order of folded vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SiteOrdering {
    /// All forward-sheet slots, then all backward-sheet slots.
    SheetMajor,
}

/// One elementary map on the folded space.
#[derive(Debug, Clone)]
pub enum ChannelStep {
    /// `X -> B X B^†`.
    Conjugate(CMat),
    /// `X -> scale · (1_σ ⊗ tr_σ X)`.
    Cap {
        slot: usize,
        scale: f64,
    },
    Scale(f64),
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(CMat),
    Channel(Vec<ChannelStep>),
}

/// Linear operator on the `d^{4t}`-dimensional folded space.
#[derive(Debug, Clone)]
pub struct FoldedOperator {
    t: usize,
    d: usize,
    ordering: SiteOrdering,
    repr: Repr,
}

fn chain_dim(t: usize, d: usize) -> Result<usize> {
    if t == 0 || d < 2 {
        return Err(invalid("folded lattice needs t >= 1 and d >= 2"));
    }
    checked_pow(d, 2 * t)
}

fn unvec(v: &CVec, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[i * n + j])
}

fn vec_of(x: &CMat) -> CVec {
    let n = x.nrows();
    CVec::from_fn(n * n, |k, _| x[(k / n, k % n)])
}

fn cap(x: &CMat, d: usize, slots: usize, slot: usize, scale: f64) -> CMat {
    let n = x.nrows();
    let stride = d.pow((slots - 1 - slot) as u32);
    let digit = |i: usize| (i / stride) % d;
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let bj = j - digit(j) * stride;
        for i in 0..n {
            if digit(i) != digit(j) {
                continue;
            }
            let bi = i - digit(i) * stride;
            let s: C64 = (0..d).map(|k| x[(bi + k * stride, bj + k * stride)]).sum();
            out[(i, j)] = s * scale;
        }
    }
    out
}

impl FoldedOperator {
    fn channel(t: usize, d: usize, steps: Vec<ChannelStep>) -> Self {
        FoldedOperator { t, d, ordering: SiteOrdering::SheetMajor, repr: Repr::Channel(steps) }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ordering(&self) -> SiteOrdering {
        self.ordering
    }

    /// Dimension of the time chain, `d^{2t}`.
    pub fn chain_dim(&self) -> usize {
        self.d.pow(2 * self.t as u32)
    }

    /// Dimension of the folded space, `d^{4t}`.
    pub fn dim(&self) -> usize {
        self.chain_dim() * self.chain_dim()
    }

    fn apply_matrix(&self, x: &CMat) -> CMat {
        match &self.repr {
            Repr::Dense(m) => unvec(&(m * vec_of(x)), x.nrows()),
            Repr::Channel(steps) => {
                let mut y = x.clone();
                for step in steps {
                    y = match step {
                        ChannelStep::Conjugate(b) => b * y * b.adjoint(),
                        ChannelStep::Cap { slot, scale } => cap(&y, self.d, 2 * self.t, *slot, *scale),
                        ChannelStep::Scale(s) => y * C64::new(*s, 0.0),
                    };
                }
                y
            }
        }
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if v.len() != self.dim() {
            return Err(PsffError::SizeMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(vec_of(&self.apply_matrix(&unvec(v, self.chain_dim()))))
    }

    /// Adjoint action `<v| O`, returned as the vector `O^† v`.
    pub fn apply_adjoint(&self, v: &CVec) -> Result<CVec> {
        if v.len() != self.dim() {
            return Err(PsffError::SizeMismatch { expected: self.dim(), found: v.len() });
        }
        match &self.repr {
            Repr::Dense(m) => Ok(m.adjoint() * v),
            Repr::Channel(steps) => {
                let mut y = unvec(v, self.chain_dim());
                for step in steps.iter().rev() {
                    y = match step {
                        ChannelStep::Conjugate(b) => b.adjoint() * y * b,
                        ChannelStep::Cap { slot, scale } => cap(&y, self.d, 2 * self.t, *slot, *scale),
                        ChannelStep::Scale(s) => y * C64::new(*s, 0.0),
                    };
                }
                Ok(vec_of(&y))
            }
        }
    }

    pub fn to_dense(&self, budget: MemoryBudget) -> Result<CMat> {
        budget.check_dense(self.dim())?;
        if let Repr::Dense(m) = &self.repr {
            return Ok(m.clone());
        }
        if let Repr::Channel(steps) = &self.repr {
            if let [ChannelStep::Conjugate(b)] = steps.as_slice() {
                return Ok(b.kronecker(&b.conjugate()));
            }
        }
        let n = self.chain_dim();
        let columns: Vec<CMat> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let mut e = CMat::zeros(n, n);
                e[(k / n, k % n)] = ONE;
                self.apply_matrix(&e)
            })
            .collect();
        let dim = n * n;
        let mut m = CMat::zeros(dim, dim);
        for (k, y) in columns.iter().enumerate() {
            for (row, z) in m.column_mut(k).iter_mut().enumerate() {
                *z = y[(row / n, row % n)];
            }
        }
        Ok(m)
    }

    /// Trace over the folded space.
    pub fn trace(&self) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m.trace(),
            Repr::Channel(steps) => {
                if let [ChannelStep::Conjugate(b)] = steps.as_slice() {
                    return C64::new(b.trace().norm_sqr(), 0.0);
                }
                let n = self.chain_dim();
                if let Some(tr) = self.kraus_trace(steps) {
                    return tr;
                }
                (0..n * n)
                    .into_par_iter()
                    .map(|k| {
                        let (i, j) = (k / n, k % n);
                        let mut e = CMat::zeros(n, n);
                        e[(i, j)] = ONE;
                        self.apply_matrix(&e)[(i, j)]
                    })
                    .sum()
            }
        }
    }

    /// Writes the channel as `X -> Σ_α A_α X A_α^†`, expanding each cap into
    /// its `d²` Kraus terms `|k'><k|_σ`, and returns `Σ_α |tr A_α|²`. Gives up
    /// when that needs more terms than a basis sweep.
    fn kraus_trace(&self, steps: &[ChannelStep]) -> Option<C64> {
        let n = self.chain_dim();
        let caps = steps.iter().filter(|s| matches!(s, ChannelStep::Cap { .. })).count() as u32;
        let scales_positive = steps.iter().all(|s| match s {
            ChannelStep::Cap { scale, .. } | ChannelStep::Scale(scale) => *scale > 0.0,
            ChannelStep::Conjugate(_) => true,
        });
        let terms = (self.d * self.d).checked_pow(caps)?;
        if !scales_positive || terms * 4 > n * n {
            return None;
        }
        let slots = 2 * self.t;
        let mut kraus = vec![identity(n)];
        for step in steps {
            kraus = match step {
                ChannelStep::Conjugate(b) => kraus.into_par_iter().map(|a| b * a).collect(),
                ChannelStep::Scale(s) => kraus.into_iter().map(|a| a * C64::new(s.sqrt(), 0.0)).collect(),
                ChannelStep::Cap { slot, scale } => {
                    let stride = self.d.pow((slots - 1 - slot) as u32);
                    let root = C64::new(scale.sqrt(), 0.0);
                    let mut next = Vec::with_capacity(kraus.len() * self.d * self.d);
                    for a in &kraus {
                        for from in 0..self.d {
                            for to in 0..self.d {
                                // Rows with digit `from` on the slot move to digit `to`.
                                let mut m = CMat::zeros(n, n);
                                for i in 0..n {
                                    if (i / stride) % self.d == from {
                                        let target = i - from * stride + to * stride;
                                        m.row_mut(target).copy_from(&(a.row(i) * root));
                                    }
                                }
                                next.push(m);
                            }
                        }
                    }
                    next
                }
            };
        }
        Some(C64::new(kraus.iter().map(|a| a.trace().norm_sqr()).sum(), 0.0))
    }

    /// `max |O O^† - 1|` entrywise.
    pub fn unitarity_residual(&self, budget: MemoryBudget) -> Result<f64> {
        if let Repr::Channel(steps) = &self.repr {
            if let [ChannelStep::Conjugate(b)] = steps.as_slice() {
                // (B ⊗ B̄)(B ⊗ B̄)^† = M ⊗ M̄ with M = B B^†.
                let m = b * b.adjoint();
                let n = m.nrows();
                let mut worst = 0.0_f64;
                for a in 0..n {
                    for c in 0..n {
                        for bb in 0..n {
                            for dd in 0..n {
                                let delta = if a == c && bb == dd { 1.0 } else { 0.0 };
                                worst = worst.max((m[(a, c)] * m[(bb, dd)].conj() - delta).norm());
                            }
                        }
                    }
                }
                return Ok(worst);
            }
        }
        let m = self.to_dense(budget)?;
        Ok(crate::gates::unitarity_residual(&m))
    }
}

/// Column unitary of one bond on the time chain.
fn column(t: usize, d: usize, gate: &CMat, odd: bool, wrap: bool) -> Result<CMat> {
    let slots = 2 * t;
    let mut b = identity(chain_dim(t, d)?);
    let g = dual(gate)?.transpose();
    let first_slots: Vec<usize> = if odd {
        let mut v: Vec<usize> = (0..t.saturating_sub(1)).map(|k| 2 * k + 1).collect();
        if wrap {
            v.push(slots - 1);
        }
        v
    } else {
        (0..t).map(|k| 2 * k).collect()
    };
    for a in first_slots {
        apply_two_site(&mut b, &g, d, slots, a, (a + 1) % slots);
    }
    Ok(b)
}

/// Clean subsystem operator
/// `d² (|∘><∘|_0 ⊗ odd inner pairs ⊗ |∘><∘|_{2t-1}) · even pairs`.
pub fn build_t_op(t: usize, d: usize, base_gate: &LocalGate, budget: MemoryBudget) -> Result<FoldedOperator> {
    let n = chain_dim(t, d)?;
    budget.check_dense(n)?;
    let gate = base_gate.matrix();
    let inv_d = 1.0 / d as f64;
    let steps = vec![
        ChannelStep::Conjugate(column(t, d, gate, false, false)?),
        ChannelStep::Conjugate(column(t, d, gate, true, false)?),
        ChannelStep::Cap { slot: 0, scale: inv_d },
        ChannelStep::Cap { slot: 2 * t - 1, scale: inv_d },
        ChannelStep::Scale((d * d) as f64),
    ];
    Ok(FoldedOperator::channel(t, d, steps))
}

/// One disorder draw of the complement operator: an even column followed by
/// an odd column, each repeating its gate on all `t` pairs.
pub fn build_s_op_sample<R: Rng + ?Sized>(
    t: usize,
    d: usize,
    base_gate: &LocalGate,
    sigma: f64,
    budget: MemoryBudget,
    rng: &mut R,
) -> Result<FoldedOperator> {
    let n = chain_dim(t, d)?;
    budget.check_dense(n)?;
    let disorder = DisorderSpec::new(d, sigma)?;
    let even_gate = disordered_gate(base_gate, &disorder, rng);
    let odd_gate = disordered_gate(base_gate, &disorder, rng);
    let b = column(t, d, &odd_gate, true, true)? * column(t, d, &even_gate, false, false)?;
    Ok(FoldedOperator::channel(t, d, vec![ChannelStep::Conjugate(b)]))
}

/// Dense Monte-Carlo mean of `n_samples` complement operators; sample `i`
/// uses the transfer stream `(seed, i)`.
pub fn averaged_s_op(
    t: usize,
    d: usize,
    base_gate: &LocalGate,
    sigma: f64,
    n_samples: usize,
    seed: u64,
    budget: MemoryBudget,
) -> Result<FoldedOperator> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be positive"));
    }
    let dim = chain_dim(t, d)?.pow(2);
    budget.check_dense(dim)?;
    let mut sum = CMat::zeros(dim, dim);
    for i in 0..n_samples as u64 {
        let sample = build_s_op_sample(t, d, base_gate, sigma, budget, &mut stream_rng(seed, Stream::Transfer, i))?;
        sum += sample.to_dense(budget)?;
    }
    sum /= C64::new(n_samples as f64, 0.0);
    Ok(FoldedOperator { t, d, ordering: SiteOrdering::SheetMajor, repr: Repr::Dense(sum) })
}

/// Normalized vectorized shift `d^{-t} |P_{η^{2r}}>`.
#[derive(Debug, Clone)]
pub struct ShiftVector {
    pub t: usize,
    pub d: usize,
    pub r: i64,
    pub vector: CVec,
}

/// Basis index of `P_p |i>`, which moves the digit of slot `k` to slot `p(k)`.
pub fn permuted_index(p: &Permutation, d: usize, index: usize) -> usize {
    let n = p.size();
    let mut out = 0;
    for k in 1..=n {
        let digit = (index / d.pow((n - k) as u32)) % d;
        out += digit * d.pow((n - p.apply(k)) as u32);
    }
    out
}

/// Explicit permutation operator on `p.size()` qudits.
pub fn permutation_operator(p: &Permutation, d: usize) -> Result<CMat> {
    let dim = checked_pow(d, p.size())?;
    let mut m = CMat::zeros(dim, dim);
    for j in 0..dim {
        m[(permuted_index(p, d, j), j)] = ONE;
    }
    Ok(m)
}

impl ShiftVector {
    pub fn new(t: usize, d: usize, r: i64) -> Result<Self> {
        let n = chain_dim(t, d)?;
        let p = Permutation::shift(t, r)?;
        let norm = (d as f64).powi(-(t as i32));
        let mut vector = CVec::zeros(n * n);
        for j in 0..n {
            vector[permuted_index(&p, d, j) * n + j] = C64::new(norm, 0.0);
        }
        Ok(ShiftVector { t, d, r, vector })
    }
}

/// `max |O|v> - λ|v>|`.
pub fn eigen_residual(op: &FoldedOperator, v: &CVec, lambda: C64) -> Result<f64> {
    Ok((op.apply(v)? - v * lambda).camax())
}

/// Residual of `Ũ^{⊗(t-k)} tr_M(P_{η^{2r}}) Ũ^{†⊗(t-k)} = tr_M(P_{η^{2r}})`
/// on the bulk slots, with the gates on consecutive bulk pairs.
pub fn conjugation_invariance_check(t: usize, k: usize, r: i64, d: usize, base_gate: &LocalGate) -> Result<f64> {
    if k >= t {
        return Err(invalid(format!("need k < t (k={k}, t={t})")));
    }
    let split = LatticeSplit::new(t, k)?;
    let p = permutation_operator(&Permutation::shift(t, r)?, d)?;
    let bulk: Vec<usize> = split.bulk().iter().map(|x| x - 1).collect();
    let reduced = Bipartition::new(d, 2 * t, &bulk)?.trace_out(&p);
    let sites = bulk.len();
    let gt = dual(base_gate.matrix())?;
    let mut u = identity(reduced.nrows());
    for a in (0..sites).step_by(2) {
        apply_two_site(&mut u, &gt, d, sites, a, a + 1);
    }
    Ok(max_abs(&(&u * &reduced * u.adjoint() - reduced)))
}

/// Both sides of the fixed-realization network identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferOracle {
    pub transfer: f64,
    pub direct: f64,
    pub residual: f64,
}

/// Ring of column channels for the chain `gates` with subsystem `0..2l`.
pub fn ring_operator(t: usize, gates: &CircuitGates, half_subsystem: usize) -> Result<FoldedOperator> {
    let d = gates.d;
    let n_sites = gates.sites;
    let slots = 2 * t;
    let mut steps = Vec::new();
    let site_op = |x: usize, steps: &mut Vec<ChannelStep>| {
        if x < 2 * half_subsystem {
            steps.push(ChannelStep::Cap { slot: slots - 1, scale: 1.0 });
        }
    };
    // Flow from right to left: bond (x, x+1), then site x.
    for x in (0..n_sites - 1).rev() {
        let odd = x % 2 == 1;
        let gate = if odd { &gates.odd[(x - 1) / 2] } else { &gates.even[x / 2] };
        steps.push(ChannelStep::Conjugate(column(t, d, gate, odd, true)?));
        site_op(x, &mut steps);
    }
    steps.push(ChannelStep::Conjugate(column(t, d, &gates.odd[n_sites / 2 - 1], true, true)?));
    site_op(n_sites - 1, &mut steps);
    Ok(FoldedOperator::channel(t, d, steps))
}

/// Evaluates one realization's PSFF as the trace of the folded column ring
/// and directly from powers of the Floquet operator.
pub fn psff_via_transfer(t: usize, half_subsystem: usize, spec: &CircuitSpec, index: u64) -> Result<TransferOracle> {
    spec.validate()?;
    if half_subsystem > spec.half_chain {
        return Err(invalid("subsystem larger than the chain"));
    }
    spec.budget.check_dense(chain_dim(t, spec.d)?)?;
    let gates = sample_gates(spec, index)?;
    let transfer = ring_operator(t, &gates, half_subsystem)?.trace().re;
    let floquet = gates.floquet()?;
    let mut power = identity(floquet.nrows());
    for _ in 0..t {
        power = &floquet * power;
    }
    let bp = Bipartition::new(spec.d, gates.sites, Subsystem::leading(2 * half_subsystem).sites())?;
    let direct: f64 = bp.trace_out(&power).iter().map(|z| z.norm_sqr()).sum();
    Ok(TransferOracle { transfer, direct, residual: (transfer - direct).abs() })
}

/// Complex Gaussian test vector.
pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    CVec::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im)
    })
}

/// Eigenvalues of a dense folded operator via the complex Schur form,
/// sorted by decreasing modulus.
pub fn eigenvalues(op: &FoldedOperator, budget: MemoryBudget) -> Result<Vec<C64>> {
    let m = op.to_dense(budget)?;
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| PsffError::Eigensolver("Schur iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    let mut ev: Vec<C64> = (0..tri.nrows()).map(|i| tri[(i, i)]).collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    Ok(ev)
}

/// `max |(O^power - scale |0><0|) e|` over basis vectors `e` (dense) or
/// Gaussian probes when the dense operator is too large.
pub fn rank_one_power_residual(op: &FoldedOperator, power: usize, scale: f64, budget: MemoryBudget) -> Result<f64> {
    let zero = ShiftVector::new(op.t, op.d, 0)?.vector;
    let dim = op.dim();
    let dense_ok = dim <= 256 && budget.check_dense(dim).is_ok();
    let probes: Vec<CVec> = if dense_ok {
        (0..dim).map(|k| CVec::from_fn(dim, |i, _| if i == k { ONE } else { C64::new(0.0, 0.0) })).collect()
    } else {
        let mut rng = stream_rng(0, Stream::Transfer, u64::MAX);
        (0..4).map(|_| random_vector(dim, &mut rng).normalize()).collect()
    };
    let mut worst = 0.0_f64;
    for v in probes {
        let mut w = v.clone();
        for _ in 0..power {
            w = op.apply(&w)?;
        }
        let expected = &zero * (zero.dotc(&v) * scale);
        worst = worst.max((w - expected).camax());
    }
    Ok(worst)
}

/// Spectral facts about the clean subsystem operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsystemSpectrum {
    /// `max |T|0> - d²|0>|`.
    pub fixed_point_residual: f64,
    /// Residual of `T^t = d^{2t} |0><0|`, which pins the spectrum to `{d², 0}`.
    pub nilpotent_residual: f64,
    /// `|T² v - d² T v| / |v|` on a Gaussian probe; zero for a scaled projector.
    pub projector_defect: f64,
    /// Moduli of the largest eigenvalues from a dense Schur form, when affordable.
    pub leading_moduli: Vec<f64>,
}

pub fn subsystem_spectrum(
    t: usize,
    d: usize,
    base_gate: &LocalGate,
    budget: MemoryBudget,
) -> Result<SubsystemSpectrum> {
    let op = build_t_op(t, d, base_gate, budget)?;
    let zero = ShiftVector::new(t, d, 0)?.vector;
    let d2 = (d * d) as f64;
    let fixed_point_residual = eigen_residual(&op, &zero, C64::new(d2, 0.0))?;
    let nilpotent_residual = rank_one_power_residual(&op, t, d2.powi(t as i32), budget)?;
    let mut rng = stream_rng(1, Stream::Transfer, u64::MAX);
    let v = random_vector(op.dim(), &mut rng);
    let tv = op.apply(&v)?;
    let ttv = op.apply(&tv)?;
    let projector_defect = (ttv - tv * C64::new(d2, 0.0)).norm() / v.norm();
    let leading_moduli =
        if op.dim() <= 256 { eigenvalues(&op, budget)?.iter().take(4).map(|z| z.norm()).collect() } else { Vec::new() };
    Ok(SubsystemSpectrum { fixed_point_residual, nilpotent_residual, projector_defect, leading_moduli })
}

/// Count of eigenvalues near the unit circle and the next modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnimodularSummary {
    pub unimodular: usize,
    pub next_modulus: f64,
    pub leading_moduli: Vec<f64>,
}

pub fn unimodular_summary(op: &FoldedOperator, tolerance: f64, budget: MemoryBudget) -> Result<UnimodularSummary> {
    let ev = eigenvalues(op, budget)?;
    let unimodular = ev.iter().filter(|z| (z.norm() - 1.0).abs() < tolerance).count();
    let next_modulus = ev.iter().map(|z| z.norm()).find(|m| (m - 1.0).abs() >= tolerance).unwrap_or(0.0);
    Ok(UnimodularSummary { unimodular, next_modulus, leading_moduli: ev.iter().take(6).map(|z| z.norm()).collect() })
}

/// Outcome of one numerical claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub claim: String,
    pub parameters: serde_json::Value,
    pub residual: f64,
    pub pass: bool,
}

impl Certificate {
    fn below(claim: &str, parameters: serde_json::Value, residual: f64, tolerance: f64) -> Self {
        Certificate { claim: claim.to_string(), parameters, residual, pass: residual < tolerance }
    }
}

/// Settings for [`certificates`].
#[derive(Debug, Clone)]
pub struct CertificateConfig {
    pub d: usize,
    pub t_max: usize,
    pub coupling: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Samples in the averaged complement operator; zero skips that check.
    pub n_samples: usize,
    /// Disorder realizations for the network identity.
    pub realizations: usize,
    pub budget: MemoryBudget,
}

/// Runs the transfer-operator checks and reports one certificate each.
pub fn certificates(cfg: &CertificateConfig) -> Result<Vec<Certificate>> {
    use serde_json::json;
    let d = cfg.d;
    let base_gate = crate::gates::random_du_gate(d, cfg.coupling, &mut stream_rng(cfg.seed, Stream::BaseGate, 0))?;
    let disorder = DisorderSpec::new(d, cfg.sigma)?;
    let mut out = Vec::new();

    let mut rng = stream_rng(cfg.seed, Stream::Transfer, 1 << 40);
    let worst = (0..20)
        .map(|_| crate::gates::unitality_residuals(&disordered_gate(&base_gate, &disorder, &mut rng)).map(|r| r.max()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(Certificate::below(
        "folded disordered gates satisfy the four unitality relations",
        json!({"d": d, "samples": 20}),
        worst,
        1e-12,
    ));

    for t in 1..=cfg.t_max {
        let s = build_s_op_sample(t, d, &base_gate, cfg.sigma, cfg.budget, &mut rng)?;
        let params = json!({"t": t, "d": d, "sigma": cfg.sigma});
        out.push(Certificate::below(
            "complement sample is unitary",
            params.clone(),
            s.unitarity_residual(cfg.budget)?,
            1e-10,
        ));
        let mut fix = 0.0_f64;
        let mut gram_err = 0.0_f64;
        let g = crate::tdl::gram(t, d)?;
        let shifts: Vec<CVec> =
            (0..t as i64).map(|r| ShiftVector::new(t, d, r).map(|v| v.vector)).collect::<Result<_>>()?;
        for (r, v) in shifts.iter().enumerate() {
            fix = fix.max(eigen_residual(&s, v, ONE)?);
            for (q, w) in shifts.iter().enumerate() {
                gram_err = gram_err.max((v.dotc(w) - g.entries[(r, q)]).norm());
            }
        }
        out.push(Certificate::below("complement sample fixes every shift state", params.clone(), fix, 1e-10));
        out.push(Certificate::below("shift-state overlaps equal the Gram matrix", params.clone(), gram_err, 1e-14));

        let spectrum = subsystem_spectrum(t, d, &base_gate, cfg.budget)?;
        out.push(Certificate::below(
            "subsystem operator maps |0> to d^2 |0>",
            params.clone(),
            spectrum.fixed_point_residual,
            1e-10,
        ));
        out.push(Certificate::below(
            "subsystem operator to the power t is d^{2t}|0><0|, so its spectrum is {d^2, 0}",
            json!({"t": t, "d": d, "leading_moduli": spectrum.leading_moduli}),
            spectrum.nilpotent_residual,
            1e-8,
        ));
        if t >= 2 {
            out.push(Certificate {
                claim: "subsystem operator is not a scaled projector (non-trivial Jordan blocks)".into(),
                parameters: params.clone(),
                residual: spectrum.projector_defect,
                pass: spectrum.projector_defect > 1e-6,
            });
        }
        let op = build_t_op(t, d, &base_gate, cfg.budget)?;
        for l in t..=t + 1 {
            let res = rank_one_power_residual(&op, l, (d as f64).powi(2 * l as i32), cfg.budget)?;
            out.push(Certificate::below(
                "subsystem operator to the power l is D_A |0><0| for t <= l",
                json!({"t": t, "l": l, "d": d}),
                res,
                1e-8,
            ));
        }
        for l in 1..t {
            let tm = crate::tdl::t_matrix(t, l, d)?;
            let mut worst = 0.0_f64;
            for (r, v) in shifts.iter().enumerate() {
                let mut w = v.clone();
                for _ in 0..l {
                    w = op.apply(&w)?;
                }
                for (q, u) in shifts.iter().enumerate() {
                    worst = worst.max((u.dotc(&w) - tm.value(q, r)).norm() / tm.value(q, r));
                }
            }
            out.push(Certificate::below(
                "<s|T^l|r> equals the permutation-calculus T matrix (relative)",
                json!({"t": t, "l": l, "d": d}),
                worst,
                1e-10,
            ));
        }
    }

    for (t, k, r) in [(3, 1, 1), (5, 2, 1), (4, 1, 0)] {
        let res = conjugation_invariance_check(t, k, r, d, &base_gate)?;
        out.push(Certificate::below(
            "partially traced shift commutes with the bulk dual gates",
            json!({"t": t, "k": k, "r": r, "d": d}),
            res,
            1e-12,
        ));
    }

    for (t, l, half_chain) in [(2, 1, 2), (2, 2, 3), (1, 1, 3)] {
        if t > cfg.t_max {
            continue;
        }
        let mut spec = CircuitSpec::new(d, half_chain, l, cfg.coupling, cfg.sigma, cfg.seed, cfg.realizations.max(1))?;
        spec.budget = cfg.budget;
        let mut worst = 0.0_f64;
        for i in 0..cfg.realizations.max(1) as u64 {
            let o = psff_via_transfer(t, l, &spec, i)?;
            worst = worst.max(o.residual / o.direct.max(1.0));
        }
        out.push(Certificate::below(
            "folded column ring reproduces the per-realization PSFF (relative)",
            json!({"t": t, "l": l, "L": half_chain, "d": d, "realizations": cfg.realizations.max(1)}),
            worst,
            1e-8,
        ));
    }

    if cfg.n_samples > 0 && cfg.t_max >= 2 {
        let avg = averaged_s_op(2, d, &base_gate, cfg.sigma, cfg.n_samples, cfg.seed, cfg.budget)?;
        let summary = unimodular_summary(&avg, 1e-3, cfg.budget)?;
        out.push(Certificate {
            claim: "averaged complement operator at t=2 has exactly 2 unimodular eigenvalues, the next below 0.99".into(),
            parameters: json!({"t": 2, "d": d, "n_samples": cfg.n_samples, "sigma": cfg.sigma, "unimodular": summary.unimodular, "leading_moduli": summary.leading_moduli}),
            residual: summary.next_modulus,
            pass: summary.unimodular == 2 && summary.next_modulus < 0.99,
        });
    }
    Ok(out)
}
