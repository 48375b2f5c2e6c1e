//! Permutations of the lattice `{1..n}` and the map induced on a sublattice
//! by tracing out its boundary.
//!
//! Points are 1-indexed throughout. The lattice of `2t` points splits into a
//! boundary `M = {1..k} ∪ {2t-k+1..2t}` and a bulk `K = {k+1..2t-k}`.

use std::fmt;

use num_integer::Integer;

use crate::error::{invalid, PsffError, Result};

/// A bijection of `{1..n}`, stored as the list of images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (1..=n).collect() }
    }

    /// Builds a permutation from 1-indexed images, rejecting non-bijections.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &x in &images {
            if x == 0 || x > n || seen[x] {
                return Err(invalid(format!("{images:?} is not a bijection of 1..{n}")));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    /// The shift `x -> x + 2r (mod 2t)` on `2t` points.
    pub fn shift(t: usize, r: i64) -> Result<Self> {
        if t == 0 {
            return Err(invalid("shift needs t >= 1"));
        }
        let n = 2 * t as i64;
        let images = (0..n).map(|x| ((x + 2 * r).rem_euclid(n) + 1) as usize).collect();
        Ok(Permutation { images })
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// Image of the 1-indexed point `x`.
    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x - 1]
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.size() != other.size() {
            return Err(PsffError::SizeMismatch { expected: self.size(), found: other.size() });
        }
        Ok(Permutation { images: other.images.iter().map(|&x| self.apply(x)).collect() })
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.size()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x - 1] = i + 1;
        }
        Permutation { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| x == i + 1)
    }

    /// Disjoint cycles, each starting at its minimum, sorted by minimum.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut visited = vec![false; self.size() + 1];
        let mut out = Vec::new();
        for start in 1..=self.size() {
            if visited[start] {
                continue;
            }
            let mut cycle = vec![start];
            visited[start] = true;
            let mut x = self.apply(start);
            while x != start {
                visited[x] = true;
                cycle.push(x);
                x = self.apply(x);
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_count(&self) -> usize {
        let mut visited = vec![false; self.size() + 1];
        let mut count = 0;
        for start in 1..=self.size() {
            if visited[start] {
                continue;
            }
            count += 1;
            let mut x = start;
            while !visited[x] {
                visited[x] = true;
                x = self.apply(x);
            }
        }
        count
    }

    /// Number of cycles lying entirely inside the points where `inside` holds.
    pub fn cycles_within_by(&self, inside: impl Fn(usize) -> bool) -> usize {
        self.cycles().iter().filter(|c| c.iter().all(|&x| inside(x))).count()
    }

    /// Number of cycles lying entirely inside `subset`.
    pub fn cycles_within(&self, subset: &[usize]) -> Result<usize> {
        let mut mask = vec![false; self.size() + 1];
        for &x in subset {
            if x == 0 || x > self.size() {
                return Err(invalid(format!("point {x} outside 1..{}", self.size())));
            }
            mask[x] = true;
        }
        Ok(self.cycles_within_by(|x| mask[x]))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cycles() {
            let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

/// Cycle count of the shift by `2r` on `2t` points, `2 gcd(r, t)`.
pub fn shift_cycle_count(t: usize, r: i64) -> usize {
    2 * (r.rem_euclid(t as i64) as usize).gcd(&t)
}

/// Boundary/bulk split of the lattice `{1..2t}` with boundary width `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSplit {
    t: usize,
    k: usize,
}

impl LatticeSplit {
    pub fn new(t: usize, k: usize) -> Result<Self> {
        if t == 0 {
            return Err(invalid("lattice split needs t >= 1"));
        }
        if k > t {
            return Err(invalid(format!("boundary width k={k} exceeds t={t}")));
        }
        Ok(LatticeSplit { t, k })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lattice_size(&self) -> usize {
        2 * self.t
    }

    #[inline]
    pub fn in_bulk(&self, x: usize) -> bool {
        x > self.k && x <= 2 * self.t - self.k
    }

    #[inline]
    pub fn in_boundary(&self, x: usize) -> bool {
        !self.in_bulk(x)
    }

    /// `M` in increasing order.
    pub fn boundary(&self) -> Vec<usize> {
        (1..=self.lattice_size()).filter(|&x| self.in_boundary(x)).collect()
    }

    /// `K` in increasing order.
    pub fn bulk(&self) -> Vec<usize> {
        (self.k + 1..=2 * self.t - self.k).collect()
    }

    pub fn bulk_size(&self) -> usize {
        2 * (self.t - self.k)
    }

    /// Relabels a bulk point to its 1-indexed rank within `K`.
    #[inline]
    pub fn bulk_rank(&self, x: usize) -> usize {
        x - self.k
    }
}

/// The permutation induced on the bulk and the count of boundary cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedResult {
    /// Permutation of `1..|K|`; rank `i` stands for lattice point `bulk_points[i-1]`.
    pub reduced: Permutation,
    pub cycles_in_boundary: usize,
    pub bulk_points: Vec<usize>,
}

fn check_size(p: &Permutation, split: &LatticeSplit) -> Result<()> {
    if p.size() != split.lattice_size() {
        return Err(PsffError::SizeMismatch { expected: split.lattice_size(), found: p.size() });
    }
    Ok(())
}

/// Smallest `n >= 1` with `p^n(x)` in the bulk.
pub fn return_time(p: &Permutation, split: &LatticeSplit, x: usize) -> Result<usize> {
    check_size(p, split)?;
    if x == 0 || !split.in_bulk(x) || x > p.size() {
        return Err(invalid(format!("point {x} is not in the bulk")));
    }
    let mut y = p.apply(x);
    let mut n = 1;
    while !split.in_bulk(y) {
        y = p.apply(y);
        n += 1;
    }
    Ok(n)
}

/// First return map on the bulk, relabeled to `1..|K|`, together with the
/// number of cycles of `p` contained in the boundary.
pub fn induced(p: &Permutation, split: &LatticeSplit) -> Result<InducedResult> {
    check_size(p, split)?;
    let bulk_points = split.bulk();
    let images = bulk_points
        .iter()
        .map(|&x| {
            let mut y = p.apply(x);
            while !split.in_bulk(y) {
                y = p.apply(y);
            }
            split.bulk_rank(y)
        })
        .collect();
    Ok(InducedResult {
        reduced: Permutation { images },
        cycles_in_boundary: p.cycles_within_by(|x| split.in_boundary(x)),
        bulk_points,
    })
}
