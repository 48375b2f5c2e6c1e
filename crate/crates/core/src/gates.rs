//! Local two-qudit gates: the dual-unitary family, space-time duals, folded
//! gates, Haar sampling and on-site disorder.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, PsffError, Result};
use crate::linalg::{identity, kron, max_abs, CMat, C64, ONE, ZERO};

/// Default tolerance for unitarity certificates.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// `diag(-(d-1)/2, ..., (d-1)/2)`.
pub fn spin_z(d: usize) -> Result<CMat> {
    if d < 2 {
        return Err(invalid("spin_z needs d >= 2"));
    }
    let half = (d as f64 - 1.0) / 2.0;
    Ok(CMat::from_fn(d, d, |i, j| if i == j { C64::new(i as f64 - half, 0.0) } else { ZERO }))
}

/// The swap `|ij> -> |ji>` on two qudits.
pub fn swap(d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (col / d, col % d);
        if row == j * d + i {
            ONE
        } else {
            ZERO
        }
    })
}

fn local_dim(m: &CMat) -> Result<usize> {
    if !m.is_square() {
        return Err(PsffError::SizeMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let n = m.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(invalid(format!("dimension {n} is not a perfect square")));
    }
    Ok(d)
}

/// Space-time dual: `<ij|dual(U)|kl> = <ki|U|lj>`.
pub fn dual(u: &CMat) -> Result<CMat> {
    let d = local_dim(u)?;
    Ok(CMat::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        u[(k * d + i, l * d + j)]
    }))
}

/// `max(|U U^† - 1|, |U^† U - 1|)` entrywise.
pub fn unitarity_residual(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let id = identity(m.nrows());
    let left = max_abs(&(m * m.adjoint() - &id));
    let right = max_abs(&(m.adjoint() * m - id));
    left.max(right)
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

pub fn dual_unitarity_residual(m: &CMat) -> f64 {
    match dual(m) {
        Ok(dm) => unitarity_residual(&dm),
        Err(_) => f64::INFINITY,
    }
}

pub fn is_dual_unitary(m: &CMat, tol: f64) -> bool {
    is_unitary(m, tol) && dual_unitarity_residual(m) <= tol
}

/// A certified two-qudit unitary.
#[derive(Debug, Clone)]
pub struct LocalGate {
    d: usize,
    matrix: CMat,
    dual_unitary: bool,
    tolerance: f64,
}

impl LocalGate {
    /// Certifies `matrix` as unitary and records whether it is dual-unitary.
    pub fn certify(matrix: CMat, tolerance: f64) -> Result<Self> {
        let d = local_dim(&matrix)?;
        let res = unitarity_residual(&matrix);
        if res > tolerance {
            return Err(PsffError::NotUnitary(res));
        }
        let dual_unitary = dual_unitarity_residual(&matrix) <= tolerance;
        Ok(LocalGate { d, matrix, dual_unitary, tolerance })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_dual_unitary(&self) -> bool {
        self.dual_unitary
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// `(left ⊗ right) U`.
    pub fn dressed(&self, left: &CMat, right: &CMat) -> CMat {
        kron(left, right) * &self.matrix
    }
}

/// `(u1 ⊗ u2) P exp(iJ σz⊗σz) (u3 ⊗ u4)`, certified dual-unitary.
pub fn du_gate(d: usize, coupling: f64, locals: [&CMat; 4]) -> Result<LocalGate> {
    if !(coupling > 0.0 && coupling <= std::f64::consts::PI) {
        return Err(invalid(format!("coupling J={coupling} outside (0, pi]")));
    }
    for u in locals {
        if u.nrows() != d {
            return Err(PsffError::SizeMismatch { expected: d, found: u.nrows() });
        }
        let res = unitarity_residual(u);
        if res > DEFAULT_TOLERANCE {
            return Err(PsffError::NotUnitary(res));
        }
    }
    let sz = spin_z(d)?;
    let phases = CMat::from_fn(d * d, d * d, |row, col| {
        if row != col {
            return ZERO;
        }
        let angle = coupling * sz[(row / d, row / d)].re * sz[(row % d, row % d)].re;
        C64::from_polar(1.0, angle)
    });
    let matrix = kron(locals[0], locals[1]) * swap(d) * phases * kron(locals[2], locals[3]);
    let gate = LocalGate::certify(matrix, DEFAULT_TOLERANCE)?;
    if !gate.dual_unitary {
        return Err(PsffError::NotUnitary(dual_unitarity_residual(&gate.matrix)));
    }
    Ok(gate)
}

/// `du_gate` with four fresh Haar-random single-qudit unitaries.
pub fn random_du_gate<R: Rng + ?Sized>(d: usize, coupling: f64, rng: &mut R) -> Result<LocalGate> {
    let u: Vec<CMat> = (0..4).map(|_| haar_unitary(d, rng)).collect();
    du_gate(d, coupling, [&u[0], &u[1], &u[2], &u[3]])
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random `d x d` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            col *= rjj / n;
        }
    }
    q
}

/// Generalized Gell-Mann matrices: symmetric, antisymmetric, then diagonal.
pub fn gellmann_basis(d: usize) -> Result<Vec<CMat>> {
    if d < 2 {
        return Err(invalid("su(d) basis needs d >= 2"));
    }
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = C64::new(0.0, -1.0);
            m[(k, j)] = C64::new(0.0, 1.0);
            basis.push(m);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = C64::new(norm, 0.0);
        }
        m[(l, l)] = C64::new(-norm * l as f64, 0.0);
        basis.push(m);
    }
    Ok(basis)
}

/// Gaussian on-site disorder `exp(i Σ θ_j h_j)` with `θ_j ~ N(0, σ²)`.
#[derive(Debug, Clone)]
pub struct DisorderSpec {
    d: usize,
    sigma: f64,
    basis: Vec<CMat>,
}

impl DisorderSpec {
    pub fn new(d: usize, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("disorder strength {sigma} must be finite and non-negative")));
        }
        Ok(DisorderSpec { d, sigma, basis: gellmann_basis(d)? })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// Checks hermiticity, tracelessness and linear independence.
    pub fn validate(&self) -> Result<()> {
        for h in &self.basis {
            if max_abs(&(h - h.adjoint())) > 1e-14 || h.trace().norm() > 1e-14 {
                return Err(invalid("basis element not Hermitian traceless"));
            }
        }
        let n = self.basis.len();
        let gram = DMatrix::from_fn(n, n, |a, b| (self.basis[a].adjoint() * &self.basis[b]).trace().re);
        if gram.determinant().abs() < 1e-12 {
            return Err(invalid("basis is linearly dependent"));
        }
        Ok(())
    }
}

/// One on-site disorder unitary, exponentiated via Hermitian eigendecomposition.
pub fn disorder_unitary<R: Rng + ?Sized>(spec: &DisorderSpec, rng: &mut R) -> CMat {
    let normal = Normal::new(0.0, spec.sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let angles: Vec<f64> = spec.basis.iter().map(|_| normal.sample(rng)).collect();
    if spec.sigma == 0.0 {
        return identity(spec.d);
    }
    let mut h = CMat::zeros(spec.d, spec.d);
    for (theta, b) in angles.iter().zip(&spec.basis) {
        h += b * C64::new(*theta, 0.0);
    }
    let eig = h.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, lambda) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= C64::from_polar(1.0, *lambda);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Folded gate `U^T ⊗ U^†`, acting as `vec(X) -> vec(U^T X conj(U))` on
/// row-major vectorizations.
/// `(v ⊗ w) U` with independent disorder draws `v`, `w`.
pub fn disordered_gate<R: Rng + ?Sized>(base_gate: &LocalGate, disorder: &DisorderSpec, rng: &mut R) -> CMat {
    let left = disorder_unitary(disorder, rng);
    let right = disorder_unitary(disorder, rng);
    base_gate.dressed(&left, &right)
}

pub fn folded(u: &CMat) -> CMat {
    kron(&u.transpose(), &u.adjoint())
}

/// Residuals of the four unitality and dual-unitality contractions of the
/// folded gate, in the order: both inputs capped, both outputs capped,
/// first site capped, second site capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitalityResiduals(pub [f64; 4]);

impl UnitalityResiduals {
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

pub fn unitality_residuals(u: &CMat) -> Result<UnitalityResiduals> {
    let d = local_dim(u)?;
    let w = folded(u);
    let d2 = d * d;
    // Folded index: forward pair (a, b) then backward pair (a', b').
    let idx = |af: usize, bf: usize, ab: usize, bb: usize| (af * d + bf) * d2 + ab * d + bb;
    let dm = d as f64;
    let mut res = [0.0_f64; 4];
    // W |∘∘> = |∘∘>
    for of in 0..d2 {
        for ob in 0..d2 {
            let s: C64 = (0..d2).map(|i| w[(of * d2 + ob, i * d2 + i)]).sum::<C64>() / dm;
            let expected = if of == ob { 1.0 / dm } else { 0.0 };
            res[0] = res[0].max((s - expected).norm());
        }
    }
    // <∘∘| W = <∘∘|
    for inf in 0..d2 {
        for inb in 0..d2 {
            let s: C64 = (0..d2).map(|o| w[(o * d2 + o, inf * d2 + inb)]).sum::<C64>() / dm;
            let expected = if inf == inb { 1.0 / dm } else { 0.0 };
            res[1] = res[1].max((s - expected).norm());
        }
    }
    // <∘|_out W |∘>_in on one site leaves |∘><∘| on the other.
    for (slot, r) in [(0usize, 2usize), (1, 3)] {
        for of in 0..d {
            for ob in 0..d {
                for inf in 0..d {
                    for inb in 0..d {
                        let mut s = ZERO;
                        for j in 0..d {
                            for i in 0..d {
                                let (row, col) = if slot == 0 {
                                    (idx(j, of, j, ob), idx(i, inf, i, inb))
                                } else {
                                    (idx(of, j, ob, j), idx(inf, i, inb, i))
                                };
                                s += w[(row, col)];
                            }
                        }
                        s /= dm;
                        let expected = if of == ob && inf == inb { 1.0 / dm } else { 0.0 };
                        res[r] = res[r].max((s - expected).norm());
                    }
                }
            }
        }
    }
    Ok(UnitalityResiduals(res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn rng(i: u64) -> rand_chacha::ChaCha8Rng {
        stream_rng(99, Stream::BaseGate, i)
    }

    #[test]
    fn spin_z_examples() {
        let s2 = spin_z(2).unwrap();
        assert_eq!(s2[(0, 0)].re, -0.5);
        assert_eq!(s2[(1, 1)].re, 0.5);
        let s3 = spin_z(3).unwrap();
        assert_eq!([s3[(0, 0)].re, s3[(1, 1)].re, s3[(2, 2)].re], [-1.0, 0.0, 1.0]);
        for d in 2..=10 {
            assert!(spin_z(d).unwrap().trace().norm() < 1e-15);
        }
        assert!(spin_z(1).is_err());
    }

    #[test]
    fn swap_examples() {
        let p = swap(2);
        assert!(max_abs(&(&p * &p - identity(4))) == 0.0);
        // |01> is index 1, |10> is index 2.
        assert_eq!(p[(2, 1)], ONE);
        assert_eq!(p[(1, 1)], ZERO);
    }

    #[test]
    fn swap_is_its_own_dual() {
        for d in 2..=3 {
            let p = swap(d);
            assert_eq!(dual(&p).unwrap(), p);
            assert!(is_dual_unitary(&p, 1e-12));
        }
    }

    #[test]
    fn identity_is_not_dual_unitary() {
        let dual_id = dual(&identity(4)).unwrap();
        assert!(!is_unitary(&dual_id, 1e-3));
        // A single rank-one block: |00> + |11> columns.
        assert_eq!(dual_id.rank(1e-12), 1);
        assert_eq!(dual_id[(0, 0)], ONE);
        assert_eq!(dual_id[(3, 3)], ONE);
        assert_eq!(dual_id[(0, 3)], ONE);
    }

    #[test]
    fn du_gate_examples() {
        let mut r = rng(0);
        for d in [2, 3] {
            for _ in 0..20 {
                let g = random_du_gate(d, 0.2, &mut r).unwrap();
                assert!(is_unitary(g.matrix(), 1e-12));
                assert!(is_dual_unitary(g.matrix(), 1e-12));
                assert!(max_abs(&(g.matrix().transpose() - g.matrix())) > 1e-3);
            }
        }
        let id = identity(2);
        let g = du_gate(2, std::f64::consts::FRAC_PI_2, [&id, &id, &id, &id]).unwrap();
        assert!(g.is_dual_unitary());
        assert!(du_gate(2, 0.0, [&id, &id, &id, &id]).is_err());
        let bad = CMat::from_element(2, 2, ONE);
        assert!(matches!(du_gate(2, 0.2, [&bad, &id, &id, &id]), Err(PsffError::NotUnitary(_))));
    }

    #[test]
    fn interacting_swap_is_dual_unitary() {
        let sz = spin_z(2).unwrap();
        let zz = kron(&sz, &sz);
        let phase = CMat::from_fn(4, 4, |i, j| if i == j { C64::from_polar(1.0, 0.2 * zz[(i, i)].re) } else { ZERO });
        assert!(is_dual_unitary(&(swap(2) * phase), 1e-12));
        assert!(!is_unitary(&CMat::zeros(4, 4), 1e-3));
    }

    #[test]
    fn dual_squared_is_swapped_transpose() {
        let mut r = rng(1);
        let p = swap(2);
        for _ in 0..100 {
            let m = CMat::from_fn(4, 4, |_, _| complex_gaussian(&mut r));
            let twice = dual(&dual(&m).unwrap()).unwrap();
            assert_eq!(twice, &p * m.transpose() * &p);
            assert_eq!(dual(&dual(&twice).unwrap()).unwrap(), m);
        }
        assert!(dual(&CMat::zeros(3, 3)).is_err());
        assert!(dual(&CMat::zeros(4, 2)).is_err());
    }

    #[test]
    fn haar_examples() {
        let mut r = rng(2);
        let n = 10_000;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let u = haar_unitary(2, &mut r);
            assert!(is_unitary(&u, 1e-12));
            samples.push(u[(0, 1)].norm_sqr());
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd / (n as f64).sqrt(), "mean {mean}");
        let u1 = haar_unitary(1, &mut r);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gellmann_examples() {
        let b2 = gellmann_basis(2).unwrap();
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let y = CMat::from_row_slice(2, 2, &[ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]);
        let z = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        assert_eq!(b2, vec![x, y, z]);
        assert_eq!(gellmann_basis(3).unwrap().len(), 8);
        for d in 2..=5 {
            let b = gellmann_basis(d).unwrap();
            for (i, hi) in b.iter().enumerate() {
                for (j, hj) in b.iter().enumerate() {
                    let ip = (hi.adjoint() * hj).trace();
                    let expected = if i == j { 2.0 } else { 0.0 };
                    assert!((ip - expected).norm() < 1e-13);
                }
            }
            DisorderSpec::new(d, 1.0).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn disorder_examples() {
        let mut r = rng(3);
        let clean = DisorderSpec::new(2, 0.0).unwrap();
        assert_eq!(disorder_unitary(&clean, &mut r), identity(2));
        for d in [2, 3] {
            let spec = DisorderSpec::new(d, 1.0).unwrap();
            for _ in 0..200 {
                let v = disorder_unitary(&spec, &mut r);
                assert!(is_unitary(&v, 1e-12));
                assert!((v.determinant() - ONE).norm() < 1e-12);
            }
        }
        assert!(DisorderSpec::new(2, -1.0).is_err());
    }

    #[test]
    fn weak_disorder_is_close_to_identity() {
        // Mean distance from the identity scales linearly with sigma.
        let mut r = rng(4);
        let mean_dist = |sigma: f64, r: &mut rand_chacha::ChaCha8Rng| {
            let spec = DisorderSpec::new(2, sigma).unwrap();
            (0..2000).map(|_| (disorder_unitary(&spec, r) - identity(2)).norm()).sum::<f64>() / 2000.0
        };
        let a = mean_dist(1e-3, &mut r);
        let b = mean_dist(1e-2, &mut r);
        assert!((b / a - 10.0).abs() < 0.5, "ratio {}", b / a);
        // E|θ| ‖h‖ bound with ‖h‖_F = √2 per direction.
        assert!(a < 1e-3 * 3.0 * 2f64.sqrt() * 2.0);
    }

    #[test]
    fn dressing_preserves_dual_unitarity() {
        let mut r = rng(5);
        for d in [2, 3] {
            let g = random_du_gate(d, 0.7, &mut r).unwrap();
            for _ in 0..20 {
                let m = g.dressed(&haar_unitary(d, &mut r), &haar_unitary(d, &mut r));
                assert!(is_dual_unitary(&m, 1e-12));
            }
        }
    }

    #[test]
    fn folded_composition_and_vectorization() {
        let mut r = rng(6);
        assert_eq!(folded(&identity(4)), identity(16));
        let u = haar_unitary(4, &mut r);
        let v = haar_unitary(4, &mut r);
        assert!(max_abs(&(folded(&u) * folded(&v) - folded(&(&v * &u)))) < 1e-13);
        let x = CMat::from_fn(4, 4, |_, _| complex_gaussian(&mut r));
        let vec = |m: &CMat| crate::linalg::CVec::from_iterator(16, m.transpose().iter().copied());
        let lhs = folded(&u) * vec(&x);
        let rhs = vec(&(u.transpose() * &x * u.conjugate()));
        assert!((lhs - rhs).camax() < 1e-13);
    }

    #[test]
    fn unitality_holds_for_disordered_du_gates() {
        let mut r = rng(7);
        for d in [2, 3] {
            let g = random_du_gate(d, 0.2, &mut r).unwrap();
            let spec = DisorderSpec::new(d, 1.0).unwrap();
            for _ in 0..20 {
                let m = g.dressed(&disorder_unitary(&spec, &mut r), &disorder_unitary(&spec, &mut r));
                assert!(unitality_residuals(&m).unwrap().max() < 1e-12);
            }
        }
        // A generic unitary fails the dual-unitality contractions.
        let h = haar_unitary(4, &mut r);
        let res = unitality_residuals(&h).unwrap();
        assert!(res.0[0] < 1e-12 && res.0[1] < 1e-12);
        assert!(res.0[2] > 1e-3 && res.0[3] > 1e-3);
    }
}
