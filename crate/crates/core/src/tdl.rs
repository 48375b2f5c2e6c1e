//! Thermodynamic-limit PSFF from the cyclic-shift calculus.
//!
//! The unit-eigenvalue space of the averaged transfer operator is spanned by
//! the `t` vectorized even shifts `|r>`. With Gram matrix `G` of these states,
//! its inverse `W` and the overlaps `T` of `|r>` through the subsystem
//! columns, the PSFF is `tr(T W)`.

use nalgebra::DMatrix;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{invalid, PsffError, Result};
use crate::perm::{induced, LatticeSplit, Permutation};

/// Constant of the deviation bound, `1 + 1/(e ln 2 - 1)`.
pub fn bound_constant() -> f64 {
    1.0 + 1.0 / (std::f64::consts::E * std::f64::consts::LN_2 - 1.0)
}

fn check_dims(t: usize, d: usize) -> Result<()> {
    if t == 0 {
        return Err(invalid("t must be at least 1"));
    }
    if d < 2 {
        return Err(invalid("local dimension must be at least 2"));
    }
    Ok(())
}

fn int_pow(d: usize, exponent: i64) -> f64 {
    (d as f64).powi(exponent as i32)
}

/// Overlaps `<r|s> = d^{-2(t - gcd(|r-s|, t))}` of normalized shift states.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub t: usize,
    pub d: usize,
    pub entries: DMatrix<f64>,
}

pub fn gram(t: usize, d: usize) -> Result<GramMatrix> {
    check_dims(t, d)?;
    let entries = DMatrix::from_fn(t, t, |r, s| {
        let g = r.abs_diff(s).gcd(&t);
        int_pow(d, -2 * (t - g) as i64)
    });
    Ok(GramMatrix { t, d, entries })
}

/// Inverse of the Gram matrix, stored together with `W - 1`, which is
/// computed without cancellation against the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct WeingartenMatrix {
    pub t: usize,
    pub d: usize,
    pub entries: DMatrix<f64>,
    pub minus_identity: DMatrix<f64>,
}

impl WeingartenMatrix {
    /// `max |W G - 1|` entrywise.
    pub fn residual(&self, g: &GramMatrix) -> f64 {
        let prod = &self.entries * &g.entries - DMatrix::identity(self.t, self.t);
        prod.amax()
    }
}

/// Numerical inverse of `gram(t, d)`, certified by `W G = 1`.
pub fn weingarten(t: usize, d: usize) -> Result<WeingartenMatrix> {
    let g = gram(t, d)?;
    let lu = g.entries.clone().lu();
    let entries =
        lu.try_inverse().ok_or_else(|| PsffError::IllConditioned(format!("Gram matrix singular at t={t}, d={d}")))?;
    let off = DMatrix::identity(t, t) - &g.entries;
    let minus_identity = &entries * off;
    let w = WeingartenMatrix { t, d, entries, minus_identity };
    let res = w.residual(&g);
    if res.is_nan() || res >= 1e-12 {
        return Err(PsffError::IllConditioned(format!("W G - 1 residual {res:e} at t={t}, d={d}")));
    }
    Ok(w)
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
}

/// Closed-form inverse for prime `t`, where all off-diagonal overlaps equal
/// `α = d^{-2(t-1)}`: `W = (1 - γ/(1 + γ t) E) / (1 - α)` with `γ = α/(1 - α)`.
pub fn weingarten_prime_t(t: usize, d: usize) -> Result<WeingartenMatrix> {
    check_dims(t, d)?;
    if !is_prime(t) {
        return Err(invalid(format!("t={t} is not prime")));
    }
    let alpha = int_pow(d, -2 * (t as i64 - 1));
    let gamma = alpha / (1.0 - alpha);
    let c = gamma / (1.0 + gamma * t as f64);
    let scale = 1.0 / (1.0 - alpha);
    let diag = scale * (1.0 - c);
    let off = -scale * c;
    let entries = DMatrix::from_fn(t, t, |r, s| if r == s { diag } else { off });
    let minus_identity = DMatrix::from_fn(t, t, |r, s| if r == s { (alpha - c) * scale } else { off });
    Ok(WeingartenMatrix { t, d, entries, minus_identity })
}

/// Overlaps of shift states through `l` subsystem columns, stored as integer
/// exponents of `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TMatrix {
    pub t: usize,
    pub l: usize,
    pub d: usize,
    pub exponents: DMatrix<i64>,
}

impl TMatrix {
    pub fn value(&self, r: usize, s: usize) -> f64 {
        int_pow(self.d, self.exponents[(r, s)])
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.t, self.t, |r, s| self.value(r, s))
    }
}

/// `T_{r,s} = d^{-2t + |η^{2r}|_M + |η^{2s}|_M + |(η^{-2s})'(η^{2r})'|}` with
/// boundary width `l`.
pub fn t_matrix(t: usize, l: usize, d: usize) -> Result<TMatrix> {
    check_dims(t, d)?;
    if t <= l {
        return Err(invalid(format!("T matrix needs t > l (t={t}, l={l})")));
    }
    let split = LatticeSplit::new(t, l)?;
    let mut forward = Vec::with_capacity(t);
    let mut backward = Vec::with_capacity(t);
    for r in 0..t as i64 {
        forward.push(induced(&Permutation::shift(t, r)?, &split)?);
        backward.push(induced(&Permutation::shift(t, -r)?, &split)?);
    }
    let base = -2 * t as i64;
    let mut exponents = DMatrix::zeros(t, t);
    for r in 0..t {
        for s in 0..t {
            let inner = backward[s].reduced.compose(&forward[r].reduced)?.cycle_count();
            exponents[(r, s)] =
                base + forward[r].cycles_in_boundary as i64 + forward[s].cycles_in_boundary as i64 + inner as i64;
        }
    }
    Ok(TMatrix { t, l, d, exponents })
}

/// `d^{-n + |p^{-1} q|}`: normalized Hilbert-Schmidt overlap of the
/// permutation operators of `p` and `q` on `n` qudits.
pub fn permutation_overlap(p: &Permutation, q: &Permutation, d: usize) -> Result<f64> {
    let cycles = p.inverse().compose(q)?.cycle_count();
    Ok(int_pow(d, cycles as i64 - p.size() as i64))
}

/// PSFF value at one time together with its distance to the CUE curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TdlPoint {
    pub t: usize,
    pub value: f64,
    pub cue: f64,
    pub deviation: f64,
}

impl TdlPoint {
    /// `(K - D_A + 1/D_A) D_A / t - 1`, which vanishes on the CUE curve.
    pub fn rescaled_deviation(&self, subsystem: f64) -> f64 {
        self.deviation * subsystem / self.t as f64
    }
}

/// Thermodynamic-limit PSFF for subsystem `2l` sites at time `t`.
pub fn psff_tdl_point(t: usize, l: usize, d: usize) -> Result<TdlPoint> {
    check_dims(t, d)?;
    let da_exp = 2 * l as i64;
    let da = int_pow(d, da_exp);
    let cue = da + (t as f64 - 1.0) / da;
    if t <= l {
        return Ok(TdlPoint { t, value: da, cue, deviation: -(t as f64 - 1.0) / da });
    }
    let tm = t_matrix(t, l, d)?;
    let w = weingarten(t, d)?;
    // tr(T W) = tr T + tr(T (W - 1)); the CUE value is subtracted term by term.
    let mut diag_dev = 0.0;
    let mut trace = 0.0;
    for r in 0..t {
        let expected = if r == 0 { da } else { 1.0 / da };
        let v = tm.value(r, r);
        trace += v;
        diag_dev += v - expected;
    }
    let mut correction = 0.0;
    for r in 0..t {
        for s in 0..t {
            correction += tm.value(r, s) * w.minus_identity[(s, r)];
        }
    }
    Ok(TdlPoint { t, value: trace + correction, cue, deviation: diag_dev + correction })
}

pub fn psff_tdl(t: usize, l: usize, d: usize) -> Result<f64> {
    Ok(psff_tdl_point(t, l, d)?.value)
}

/// Hilbert-Schmidt distance to the identity.
pub fn hs_distance_from_identity(m: &DMatrix<f64>) -> f64 {
    (m - DMatrix::identity(m.nrows(), m.ncols())).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    pub t: usize,
    pub value: f64,
    pub cue: f64,
    pub abs_deviation: f64,
    pub bound: f64,
    /// The bound is only claimed for `t > 2l`.
    pub bound_applies: bool,
    pub violation: bool,
}

/// Deviation from the CUE curve against `c D_A t² d^{-t}` for `t = 1..=t_max`.
pub fn deviation_report(t_max: usize, l: usize, d: usize) -> Result<Vec<DeviationRow>> {
    if t_max == 0 {
        return Err(invalid("t_max must be at least 1"));
    }
    let da = int_pow(d, 2 * l as i64);
    let c = bound_constant();
    (1..=t_max)
        .map(|t| {
            let p = psff_tdl_point(t, l, d)?;
            let bound = c * da * (t * t) as f64 * int_pow(d, -(t as i64));
            let abs_deviation = p.deviation.abs();
            let bound_applies = t > 2 * l;
            Ok(DeviationRow {
                t,
                value: p.value,
                cue: p.cue,
                abs_deviation,
                bound,
                bound_applies,
                violation: bound_applies && abs_deviation >= bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::psff_cue_tdl;

    #[test]
    fn gram_examples() {
        let g = gram(4, 2).unwrap();
        assert!((0..4).all(|r| g.entries[(r, r)] == 1.0));
        assert_eq!(g.entries[(0, 2)], 1.0 / 16.0);
        assert_eq!(g.entries[(0, 1)], 1.0 / 64.0);
        for t in 1..=12 {
            for d in [2, 3] {
                let g = gram(t, d).unwrap();
                let cap = int_pow(d, -(t as i64));
                for r in 0..t {
                    for s in 0..t {
                        assert_eq!(g.entries[(r, s)], g.entries[(s, r)]);
                        if r != s {
                            assert!(g.entries[(r, s)] > 0.0 && g.entries[(r, s)] <= cap);
                        }
                    }
                }
            }
        }
        assert!(gram(0, 2).is_err());
        assert!(gram(3, 1).is_err());
    }

    #[test]
    fn weingarten_examples() {
        assert_eq!(weingarten(1, 2).unwrap().entries, DMatrix::from_element(1, 1, 1.0));
        let w = weingarten(3, 2).unwrap();
        for r in 0..3 {
            for s in 0..3 {
                let expected = if r == s { 136.0 / 135.0 } else { -8.0 / 135.0 };
                assert!((w.entries[(r, s)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weingarten_off_diagonal_is_negative() {
        for t in 2..=30 {
            let w = weingarten(t, 2).unwrap();
            for r in 0..t {
                for s in 0..t {
                    if r != s {
                        assert!(w.entries[(r, s)] <= 0.0, "t={t} ({r},{s})");
                    }
                }
            }
        }
    }

    #[test]
    fn prime_closed_form() {
        let w = weingarten_prime_t(3, 2).unwrap();
        assert!((w.entries[(0, 0)] - 136.0 / 135.0).abs() < 1e-15);
        assert!((w.entries[(0, 1)] + 8.0 / 135.0).abs() < 1e-15);
        assert!(w.residual(&gram(3, 2).unwrap()) < 1e-15);
        let num = weingarten(3, 2).unwrap();
        assert!((w.entries - num.entries).amax() < 1e-14);
        assert!(weingarten_prime_t(4, 2).is_err());
        assert!(weingarten_prime_t(1, 2).is_err());
    }

    #[test]
    fn primes() {
        let ps: Vec<usize> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn t_matrix_small_example() {
        let tm = t_matrix(3, 1, 2).unwrap();
        assert_eq!(tm.value(0, 0), 4.0);
        assert_eq!(tm.value(1, 1), 0.25);
        assert_eq!(tm.value(2, 2), 0.25);
        assert_eq!(tm.exponents[(1, 0)], -2);
        assert_eq!(tm.exponents[(1, 2)], -2);
        assert!(t_matrix(2, 2, 2).is_err());
    }

    #[test]
    fn t_matrix_diagonal_and_maximum() {
        for l in 0..=3 {
            for t in (2 * l + 1)..=30 {
                let tm = t_matrix(t, l, 2).unwrap();
                assert_eq!(tm.exponents[(0, 0)], 2 * l as i64);
                for r in 1..t {
                    assert_eq!(tm.exponents[(r, r)], -2 * l as i64);
                }
                assert_eq!(tm.exponents.max(), 2 * l as i64);
                let trace: f64 = (0..t).map(|r| tm.value(r, r)).sum();
                assert!((trace - psff_cue_tdl(t as u64, 1 << (2 * l))).abs() < 1e-12);
                assert_eq!(tm.exponents, tm.exponents.transpose());
            }
        }
    }

    #[test]
    fn trivial_subsystem_gives_the_form_factor() {
        for t in 1..=20 {
            let p = psff_tdl_point(t, 0, 2).unwrap();
            assert!((p.value - t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn psff_examples() {
        assert_eq!(psff_tdl(1, 3, 2).unwrap(), 64.0);
        let p = psff_tdl_point(5, 1, 2).unwrap();
        assert_eq!(p.cue, 5.0);
        assert!(p.deviation.abs() < bound_constant() * 4.0 * 25.0 / 32.0);
        let p = psff_tdl_point(40, 10, 2).unwrap();
        assert!((p.value - psff_cue_tdl(40, 1 << 20)).abs() < 1e-8 * p.value);
    }

    #[test]
    fn initial_time_rows() {
        for row in deviation_report(3, 3, 2).unwrap() {
            let t = row.t as f64;
            assert_eq!(row.value, 64.0);
            assert_eq!(row.value - row.cue, -(t - 1.0) / 64.0);
            assert!(!row.bound_applies && !row.violation);
        }
    }

    #[test]
    fn half_period_shift_sets_the_deviation_at_twice_l() {
        // T_{0,t/2} = 1 and G_{0,t/2} = d^{-t} = 1/D_A give K - K_CUE = -1/D_A.
        for l in [2usize, 5, 10] {
            let t = 2 * l;
            let da = 4f64.powi(l as i32);
            let tm = t_matrix(t, l, 2).unwrap();
            assert_eq!(tm.exponents[(0, l)], 0);
            let p = psff_tdl_point(t, l, 2).unwrap();
            assert!((p.deviation * da + 1.0).abs() < 0.25, "l={l}: {}", p.deviation * da);
            assert!((p.rescaled_deviation(da) * t as f64 + 1.0).abs() < 0.25);
        }
    }

    #[test]
    fn report_has_no_violations() {
        for (l, d) in [(1, 2), (2, 2), (1, 3)] {
            let rows = deviation_report(60, l, d).unwrap();
            assert_eq!(rows.len(), 60);
            assert!(rows.iter().all(|r| !r.violation), "l={l} d={d}");
        }
    }

    #[test]
    fn constant_value() {
        assert!((bound_constant() - 2.131).abs() < 1e-3);
    }
}
