use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedOperator {
    pub n: usize,
    /// `sub[i] = A[i+1][i]`.
    pub sub: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    /// `sup[i] = A[i][i+1]`.
    pub sup: Vec<Complex64>,
    pub h: f64,
    /// Mesh nodes the rows belong to (empty for abstract matrices).
    #[serde(default)]
    pub nodes: Vec<f64>,
}

impl BandedOperator {
    pub fn new(sub: Vec<Complex64>, diag: Vec<Complex64>, sup: Vec<Complex64>, h: f64) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::InvalidParameter(format!(
                "band lengths {}/{}/{} inconsistent",
                sub.len(),
                n,
                sup.len()
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh width {h} must be positive")));
        }
        Ok(BandedOperator { n, sub, diag, sup, h, nodes: Vec::new() })
    }

    pub fn from_diagonal(diag: Vec<Complex64>) -> Result<Self> {
        let m = diag.len().saturating_sub(1);
        BandedOperator::new(vec![Complex64::default(); m], diag, vec![Complex64::default(); m], 1.0)
    }

    /// `A + c I`.
    pub fn shifted(&self, c: Complex64) -> Self {
        let mut a = self.clone();
        a.diag.iter_mut().for_each(|d| *d += c);
        a
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.n;
        let mut a = vec![vec![Complex64::default(); n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.sup[i];
                a[i + 1][i] = self.sub[i];
            }
        }
        a
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s += self.sub[i - 1].norm();
                }
                if i + 1 < self.n {
                    s += self.sup[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

/// LU factorisation of `A − σI` with partial pivoting (row interchanges),
/// stored like LAPACK's `gttrf`: `U` has two super-diagonals.
#[derive(Debug, Clone)]
pub struct TriLu {
    n: usize,
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TriLu {
    pub fn factor(a: &BandedOperator, shift: Complex64) -> Result<Self> {
        let n = a.n;
        let mut d: Vec<Complex64> = a.diag.iter().map(|x| x - shift).collect();
        let mut dl = a.sub.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![Complex64::default(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] == Complex64::default() {
                    return Err(Error::PivotBreakdown(shift));
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                // swap rows i and i+1
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == Complex64::default() {
            return Err(Error::PivotBreakdown(shift));
        }
        Ok(TriLu { n, dl, d, du, du2, swapped })
    }

    /// Unit complex number with the phase of `det(A − σI)`.
    pub fn det_phase(&self) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for di in &self.d {
            p *= di / di.norm();
            // keep |p| = 1 against drift
            p /= p.norm();
        }
        let swaps = self.swapped.iter().filter(|&&s| s).count();
        if swaps % 2 == 1 {
            -p
        } else {
            p
        }
    }

    /// `ln |det(A − σI)|`.
    pub fn log_abs_det(&self) -> f64 {
        self.d.iter().map(|d| d.norm().ln()).sum()
    }

    /// Smallest pivot modulus relative to the largest.
    pub fn pivot_ratio(&self) -> f64 {
        let (mn, mx) = self.d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(d.norm()), b.max(d.norm())));
        mn / mx
    }

    /// Solves `(A − σI) x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let t = b[i];
            b[i + 1] -= self.dl[i] * t;
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// Solves `(A − σI)^* x = b` in place, reusing the same factors.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let n = self.n;
        if n == 0 {
            return;
        }
        // U^* y = b (forward)
        b[0] /= self.d[0].conj();
        if n > 1 {
            b[1] = (b[1] - self.du[0].conj() * b[0]) / self.d[1].conj();
        }
        for i in 2..n {
            b[i] = (b[i] - self.du[i - 1].conj() * b[i - 1] - self.du2[i - 2].conj() * b[i - 2]) / self.d[i].conj();
        }
        // L^* P^T x = y (backward)
        for i in (0..n - 1).rev() {
            let t = b[i + 1];
            b[i] -= self.dl[i].conj() * t;
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
        }
    }
}
