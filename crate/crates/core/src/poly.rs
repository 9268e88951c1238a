//! Polynomials and matrix polynomials in the delay variable `u = z^{-1}`.
//!
//! A matrix polynomial `M(u) = Σ_k M_k u^k` has a scalar determinant
//! `det M(u) = Σ_k c_k u^k`. With `d` the degree of that determinant,
//! `z^d det M(z^{-1}) = c_0 z^d + c_1 z^{d-1} + ... + c_d`, so the roots in `z`
//! are the eigenvalues of the companion matrix of the reversed coefficient list.

use nalgebra::Schur;

use crate::linalg::{CMat, C64};

/// Dense polynomial `Σ coeffs[k] u^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<C64>,
}

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![C64::new(0.0, 0.0)] }
    }

    pub fn eval(&self, u: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly { coeffs: out }
    }

    pub fn add_scaled(&mut self, other: &Poly, scale: f64) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), C64::new(0.0, 0.0));
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * scale;
        }
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops trailing coefficients below `rel_tol` times the largest magnitude.
    pub fn trimmed(&self, rel_tol: f64) -> Poly {
        let cut = self.scale() * rel_tol;
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() <= cut) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Roots in `z` of `z^d p(z^{-1})`, i.e. the reciprocals of the nonzero
    /// roots in `u`. Requires `coeffs[0] != 0`.
    pub fn z_roots(&self) -> Vec<C64> {
        let p = self.trimmed(1e-13);
        let d = p.degree();
        if d == 0 {
            return Vec::new();
        }
        let lead = p.coeffs[0];
        // monic in z: z^d + (c_1/c_0) z^{d-1} + ... + c_d/c_0
        let mut companion = CMat::zeros(d, d);
        for k in 0..d {
            companion[(0, k)] = -p.coeffs[k + 1] / lead;
        }
        for k in 1..d {
            companion[(k, k - 1)] = C64::new(1.0, 0.0);
        }
        match Schur::try_new(companion.clone(), 1e-14, 10_000) {
            Some(schur) => schur.unpack().1.diagonal().iter().cloned().collect(),
            None => companion.eigenvalues().map(|v| v.iter().cloned().collect()).unwrap_or_default(),
        }
    }
}

/// Matrix polynomial `Σ_k blocks[k] u^k`.
#[derive(Clone, Debug)]
pub struct MatrixPoly {
    pub blocks: Vec<CMat>,
}

impl MatrixPoly {
    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Poly {
        Poly { coeffs: self.blocks.iter().map(|b| b[(i, j)]).collect() }
    }

    pub fn eval(&self, u: C64) -> CMat {
        let n = self.dim();
        let mut acc = CMat::zeros(n, n);
        for b in self.blocks.iter().rev() {
            acc = acc * u + b;
        }
        acc
    }

    /// Determinant as a scalar polynomial.
    ///
    /// Up to six channels the Leibniz expansion runs in exact polynomial
    /// arithmetic; above that the determinant is sampled on enough roots of
    /// unity and interpolated back with an inverse DFT.
    pub fn determinant(&self) -> Poly {
        let n = self.dim();
        if n <= 6 {
            self.leibniz_determinant()
        } else {
            self.interpolated_determinant()
        }
    }

    fn leibniz_determinant(&self) -> Poly {
        let n = self.dim();
        let entries: Vec<Vec<Poly>> = (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect();
        let mut det = Poly::zero();
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p, sign| {
            let mut term = Poly::constant(C64::new(1.0, 0.0));
            for (row, &col) in p.iter().enumerate() {
                term = term.mul(&entries[row][col]);
            }
            det.add_scaled(&term, sign);
        });
        det
    }

    fn interpolated_determinant(&self) -> Poly {
        let n = self.dim();
        let degree = n * (self.blocks.len() - 1);
        let m = degree + 1;
        let samples: Vec<C64> = (0..m)
            .map(|k| {
                let u = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
                self.eval(u).determinant()
            })
            .collect();
        let coeffs = (0..m)
            .map(|l| {
                samples.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (k, s)| {
                    acc + s * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (k * l) as f64 / m as f64)
                }) / m as f64
            })
            .collect();
        Poly { coeffs }
    }
}

/// Heap-free recursive permutation walk, passing each permutation with its sign.
fn permutations(perm: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize], f64)) {
    fn sign_of(p: &[usize]) -> f64 {
        let mut inversions = 0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
    if start == perm.len() {
        visit(perm, sign_of(perm));
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        permutations(perm, start + 1, visit);
        perm.swap(start, i);
    }
}
