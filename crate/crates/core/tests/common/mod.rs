//! Brute-force permutation operators on `(C^d)^{⊗n}`, shared by the test targets.
#![allow(dead_code)]

use std::collections::HashMap;

use psff::perm::{induced, LatticeSplit, Permutation};

/// Digits of `index` in base `d`, site 0 most significant.
pub fn digits(index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    out
}

pub fn undigits(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

/// Sparse permutation operator moving the content of site `x` to site `p(x)`,
/// as a map from input basis index to output basis index.
pub fn perm_operator(p: &Permutation, d: usize) -> Vec<usize> {
    let n = p.size();
    (0..d.pow(n as u32))
        .map(|i| {
            let input = digits(i, d, n);
            let mut output = vec![0; n];
            for x in 1..=n {
                output[p.apply(x) - 1] = input[x - 1];
            }
            undigits(&output, d)
        })
        .collect()
}

/// Partial trace over all sites outside `kept` (0-indexed, increasing) of a
/// sparse permutation operator, as integer entries `(row, col) -> count`.
pub fn trace_out(op: &[usize], d: usize, n: usize, kept: &[usize]) -> HashMap<(usize, usize), i64> {
    let traced: Vec<usize> = (0..n).filter(|x| !kept.contains(x)).collect();
    let mut out = HashMap::new();
    for (i, &j) in op.iter().enumerate() {
        let (di, dj) = (digits(i, d, n), digits(j, d, n));
        if traced.iter().all(|&m| di[m] == dj[m]) {
            let col = undigits(&kept.iter().map(|&k| di[k]).collect::<Vec<_>>(), d);
            let row = undigits(&kept.iter().map(|&k| dj[k]).collect::<Vec<_>>(), d);
            *out.entry((row, col)).or_insert(0) += 1;
        }
    }
    out
}

pub fn dense(sparse: &HashMap<(usize, usize), i64>, dim: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0; dim]; dim];
    for (&(r, c), &v) in sparse {
        m[r][c] = v;
    }
    m
}

pub fn all_perms(n: usize) -> Vec<Permutation> {
    pub fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Permutation>) {
        if left.is_empty() {
            out.push(Permutation::from_images(prefix.clone()).unwrap());
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (1..=n).collect(), &mut out);
    out
}

/// `d^{-2t} tr[(tr_M P_s)^† tr_M P_r]` from explicit operators.
pub fn brute_t_entry(t: usize, l: usize, d: usize, r: usize, s: usize) -> f64 {
    let n = 2 * t;
    let split = LatticeSplit::new(t, l).unwrap();
    let kept: Vec<usize> = split.bulk().iter().map(|x| x - 1).collect();
    let reduce =
        |shift: usize| trace_out(&perm_operator(&Permutation::shift(t, shift as i64).unwrap(), d), d, n, &kept);
    let (a, b) = (reduce(s), reduce(r));
    let inner: i64 = b.iter().map(|(key, &v)| v * a.get(key).copied().unwrap_or(0)).sum();
    inner as f64 / (d as f64).powi(n as i32)
}

/// Checks `tr_M P_p = d^{|p|_M} P_{p'}` entrywise for every permutation on
/// `2t` points and every `k < t`. Returns the number of cases checked.
pub fn check_partial_traces(t: usize, d: usize) -> std::result::Result<usize, String> {
    let n = 2 * t;
    let mut cases = 0;
    for p in all_perms(n) {
        let op = perm_operator(&p, d);
        for k in 0..t {
            let split = LatticeSplit::new(t, k).unwrap();
            let kept: Vec<usize> = split.bulk().iter().map(|x| x - 1).collect();
            let dim = d.pow(kept.len() as u32);
            let lhs = dense(&trace_out(&op, d, n, &kept), dim);
            let result = induced(&p, &split).unwrap();
            let scale = (d as i64).pow(result.cycles_in_boundary as u32);
            let mut rhs = vec![vec![0; dim]; dim];
            for (i, &j) in perm_operator(&result.reduced, d).iter().enumerate() {
                rhs[j][i] = scale;
            }
            if lhs != rhs {
                return Err(format!("p={p} t={t} k={k}"));
            }
            cases += 1;
        }
    }
    Ok(cases)
}
