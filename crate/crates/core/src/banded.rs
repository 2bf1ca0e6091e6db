//! Banded matrices and LU factorization with partial pivoting.
//!
//! Storage is row-major over the band: row `i` keeps columns
//! `i - kl ..= i + ku`. The factorization widens the upper band to `kl + ku`
//! to hold pivoting fill, following the usual LINPACK/LAPACK layout.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` at `(i, j)`. Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.n);
        for (i, d) in diag.iter().enumerate() {
            self.add(i, i, *d);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.offset(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = BandedMatrix::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n.saturating_sub(1));
            for j in lo..=hi {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn factor(&self) -> Result<BandedLu> {
        BandedLu::new(self)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factor()?.solve(b))
    }
}

/// `P A = L U` for a banded `A`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn new(a: &BandedMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                data[at(i, j)] = a.get(i, j);
            }
        }

        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = data[at(k, k)].abs();
            for r in k + 1..=last_row {
                let v = data[at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    data.swap(at(k, j), at(p, j));
                }
            }

            let pivot = data[at(k, k)];
            for r in k + 1..=last_row {
                let l = data[at(r, k)] / pivot;
                data[at(r, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        data[at(r, j)] -= l * data[at(k, j)];
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            width,
            data,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, kl, width) = (self.n, self.kl, self.width);
        let at = |i: usize, j: usize| i * width + (j + kl - i);

        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    x[r] -= self.data[at(r, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + width - 1 - kl).min(n - 1) {
                s -= self.data[at(i, j)] * x[j];
            }
            x[i] = s / self.data[at(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(a: &BandedMatrix) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
    }

    fn pentadiagonal(n: usize, seed: u64) -> BandedMatrix {
        // small LCG so the test does not depend on a RNG crate
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                a.set(i, j, next());
            }
        }
        a
    }

    #[test]
    fn solves_random_pentadiagonal_against_dense_lu() {
        for seed in 1..20 {
            let a = pentadiagonal(23, seed);
            let b: Vec<f64> = (0..23).map(|i| (i as f64).sin()).collect();
            let x = a.solve(&b).unwrap();
            let r = a.matvec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-9, "seed {seed}: {ri} vs {bi}");
            }
            let xd = dense(&a)
                .lu()
                .solve(&nalgebra::DVector::from_vec(b.clone()))
                .unwrap();
            for (u, v) in x.iter().zip(xd.iter()) {
                assert_relative_eq!(*u, *v, epsilon = 1e-8, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.set(0, 0, 0.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 2.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.set(2, 2, 2.0);
        let x = a.solve(&[2.0, 8.0, 8.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = BandedMatrix::zeros(4, 1, 1);
        assert!(matches!(a.factor(), Err(Error::Singular(0))));
    }

    #[test]
    fn transpose_matches_dense() {
        let a = pentadiagonal(9, 7);
        let mut b = BandedMatrix::zeros(9, 1, 3);
        for i in 0..9usize {
            for j in i.saturating_sub(1)..=(i + 3).min(8) {
                b.set(i, j, a.get(i, j.min(i + 2)) + j as f64);
            }
        }
        assert_eq!(dense(&b.transpose()), dense(&b).transpose());
        let x: Vec<f64> = (0..9).map(|i| 1.0 + i as f64).collect();
        let y = b.transpose().solve(&x).unwrap();
        let back = b.transpose().matvec(&y);
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
