//! Tridiagonal storage and the direct solvers shared by the spectral and
//! dynamics kernels.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real tridiagonal matrix. `sub[i] = A[i+1][i]`, `sup[i] = A[i][i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { sub: vec![0.0; n.saturating_sub(1)], diag: vec![0.0; n], sup: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            0.0
        }
    }

    /// Iterator over the stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let d = self.diag.iter().enumerate().map(|(i, &v)| (i, i, v));
        let u = self.sup.iter().enumerate().map(|(i, &v)| (i, i + 1, v));
        let l = self.sub.iter().enumerate().map(|(i, &v)| (i + 1, i, v));
        d.chain(u).chain(l)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0, |m, (_, _, v)| m.max(v.abs()))
    }

    /// Multiply row `i` by `s[i]`.
    pub fn scale_rows(&mut self, s: &[f64]) {
        for (i, d) in self.diag.iter_mut().enumerate() {
            *d *= s[i];
        }
        for (i, u) in self.sup.iter_mut().enumerate() {
            *u *= s[i];
        }
        for (i, l) in self.sub.iter_mut().enumerate() {
            *l *= s[i + 1];
        }
    }

    pub fn transpose(&self) -> Self {
        Self { sub: self.sup.clone(), diag: self.diag.clone(), sup: self.sub.clone() }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            y[i] = acc;
        }
        y
    }

    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.len();
        for i in 0..n {
            let mut acc = x[i] * self.diag[i];
            if i + 1 < n {
                acc += x[i + 1] * self.sup[i];
            }
            if i > 0 {
                acc += x[i - 1] * self.sub[i - 1];
            }
            y[i] = acc;
        }
    }
}

/// LU factorization with partial pivoting of a real tridiagonal matrix
/// (the LAPACK `gttrf` layout, with one extra superdiagonal of fill).
pub struct PivotedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl PivotedLu {
    /// Factor `a`. Exactly singular pivots are replaced by `tiny` so that the
    /// factorization stays usable for inverse iteration at a converged shift.
    pub fn new(a: &Tridiagonal, tiny: f64) -> Self {
        let n = a.len();
        let mut dl = a.sub.clone();
        let mut d = a.diag.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swapped }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.du2[i] * b[i + 2];
            }
            b[i] = acc / self.d[i];
        }
    }
}

/// Pre-factored Crank–Nicolson (Cayley) step for one tridiagonal block:
/// solves `(1 + i a H) x = (1 - i a H) y` with `a = dt / 2ħ`.
#[derive(Clone, Debug)]
pub struct CayleyStep {
    h: Tridiagonal,
    a: f64,
    upper: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl CayleyStep {
    pub fn new(h: &Tridiagonal, a: f64) -> Result<Self> {
        let n = h.len();
        let ia = Complex64::new(0.0, a);
        let mut upper = vec![Complex64::default(); n.saturating_sub(1)];
        let mut inv_pivot = vec![Complex64::default(); n];
        for i in 0..n {
            let mut piv = Complex64::new(1.0, 0.0) + ia * h.diag[i];
            if i > 0 {
                piv -= ia * h.sub[i - 1] * upper[i - 1];
            }
            if piv.norm() < 1e-300 || !piv.is_finite() {
                return Err(Error::numeric(
                    "crank-nicolson factorization",
                    format!("pivot {piv} at row {i} of {n}"),
                ));
            }
            inv_pivot[i] = piv.inv();
            if i + 1 < n {
                upper[i] = ia * h.sup[i] * inv_pivot[i];
            }
        }
        Ok(Self { h: h.clone(), a, upper, inv_pivot })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Advance `psi` in place; `scratch` must have the same length.
    pub fn apply(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.len();
        let ia = Complex64::new(0.0, self.a);
        self.h.matvec_complex(psi, scratch);
        for i in 0..n {
            scratch[i] = psi[i] - ia * scratch[i];
        }
        // forward sweep
        for i in 0..n {
            let mut v = scratch[i];
            if i > 0 {
                v -= ia * self.h.sub[i - 1] * psi[i - 1];
            }
            psi[i] = v * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = psi[i + 1];
            psi[i] -= self.upper[i] * next;
        }
    }
}
