//! Lowest eigenpairs of a symmetric tridiagonal pencil `K v = E W v`, `W > 0` diagonal.
//!
//! Eigenvalues come from bisection on Sturm counts of `K − σW`, which keeps
//! small eigenvalues accurate relative to their own size even when the
//! matrix entries span many orders of magnitude (as they do near the
//! puncture). Eigenvectors come from a twisted factorization at the
//! converged shift.

use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    /// Normalized so that `vᵀ W v = 1`, first significant component positive.
    pub vector: Vec<f64>,
    /// `‖W^{-1/2}(K v − E W v)‖₂`.
    pub residual: f64,
    /// Smallest residual a floating-point `v` can have, see [`Pencil::rounding_floor`].
    pub rounding_floor: f64,
}

/// Accepted residual relative to |E|, unless the rounding floor is higher.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Headroom over the rounding floor before a residual counts as a failure.
const FLOOR_FACTOR: f64 = 16.0;
const MAX_BISECTIONS: usize = 2200;

/// Symmetric tridiagonal pencil with positive diagonal weight.
#[derive(Clone, Debug)]
pub struct Pencil {
    diag: Vec<f64>,
    off: Vec<f64>,
    weight: Vec<f64>,
}

impl Pencil {
    /// `k` must be symmetric up to rounding; its two off-diagonals are averaged.
    pub fn new(k: &Tridiagonal, weight: &[f64]) -> Result<Self> {
        if k.len() != weight.len() || k.is_empty() {
            return Err(Error::invalid("weight", "must match the matrix size and be non-empty"));
        }
        if weight.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("weight", "entries must be finite and > 0"));
        }
        let off = k.sub.iter().zip(&k.sup).map(|(a, b)| 0.5 * (a + b)).collect();
        Ok(Self { diag: k.diag.clone(), off, weight: weight.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.len() {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / d } else { 0.0 };
            d = self.diag[i] - sigma * self.weight[i] - coupling;
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + sigma.abs() * self.weight[i]).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval of `W^{-1/2} K W^{-1/2}`.
    fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs() / (self.weight[i - 1] * self.weight[i]).sqrt();
            }
            if i + 1 < n {
                r += self.off[i].abs() / (self.weight[i] * self.weight[i + 1]).sqrt();
            }
            let c = self.diag[i] / self.weight[i];
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        (lo, hi)
    }

    /// Eigenvalue with zero-based index `idx`, by bisection to full precision.
    pub fn eigenvalue(&self, idx: usize) -> Result<f64> {
        let (mut lo, mut hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::numeric("eigensolver", "non-finite Gershgorin bounds"));
        }
        let pad = 1e-12 * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        // Tighten the upper end by probing powers of two, which saves most of
        // the iterations when the spectrum is strongly graded.
        let mut probe = 1.0;
        while probe < hi {
            if probe > lo {
                if self.count_below(probe) > idx {
                    hi = probe;
                    break;
                }
                lo = probe;
            }
            probe *= 2.0;
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(hi);
            }
            if self.count_below(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::numeric(
            "eigensolver",
            format!("bisection for eigenvalue {idx} stalled in [{lo:e}, {hi:e}]"),
        ))
    }

    /// `‖W^{-1/2}(K v − E W v)‖₂`.
    pub fn residual(&self, e: f64, v: &[f64]) -> f64 {
        let n = self.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut r = (self.diag[i] - e * self.weight[i]) * v[i];
            if i > 0 {
                r += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += self.off[i] * v[i + 1];
            }
            sum += r * r / self.weight[i];
        }
        sum.sqrt()
    }

    fn normalize(&self, v: &mut [f64]) -> Result<()> {
        let norm2: f64 = v.iter().zip(&self.weight).map(|(x, w)| w * x * x).sum();
        if !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::numeric("eigensolver", format!("inverse iteration produced norm² = {norm2:e}")));
        }
        let s = 1.0 / norm2.sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        Ok(())
    }

    /// Eigenvector at a converged eigenvalue `e`, from the twisted
    /// factorization of `K − eW`: top-down and bottom-up LDLᵀ sweeps meet at
    /// the index where the twist pivot is smallest, and the vector is
    /// propagated outward from there. Every row except the twist row is then
    /// satisfied to rounding.
    pub fn eigenvector(&self, e: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let a: Vec<f64> = (0..n).map(|i| self.diag[i] - e * self.weight[i]).collect();
        let b = &self.off;
        let guard = |d: f64, i: usize| {
            if d == 0.0 {
                f64::EPSILON * (self.diag[i].abs() + (e * self.weight[i]).abs()).max(f64::MIN_POSITIVE)
            } else {
                d
            }
        };
        let mut down = vec![0.0; n];
        down[0] = guard(a[0], 0);
        for i in 1..n {
            down[i] = guard(a[i] - b[i - 1] * b[i - 1] / down[i - 1], i);
        }
        let mut up = vec![0.0; n];
        up[n - 1] = guard(a[n - 1], n - 1);
        for i in (0..n - 1).rev() {
            up[i] = guard(a[i] - b[i] * b[i] / up[i + 1], i);
        }
        let twist = (0..n)
            .min_by(|&i, &j| {
                let gi = ((down[i] + up[i] - a[i]) / self.weight[i]).abs();
                let gj = ((down[j] + up[j] - a[j]) / self.weight[j]).abs();
                gi.total_cmp(&gj)
            })
            .ok_or_else(|| Error::numeric("eigensolver", "empty pencil"))?;

        let mut v = vec![0.0; n];
        v[twist] = 1.0;
        for i in (0..twist).rev() {
            v[i] = -b[i] / down[i] * v[i + 1];
        }
        for i in twist + 1..n {
            v[i] = -b[i - 1] / up[i] * v[i - 1];
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::numeric("eigensolver", format!("twisted solve overflowed at E = {e:e}")));
        }
        self.normalize(&mut v)?;
        fix_sign(&mut v);
        Ok(v)
    }

    /// Residual level set by representing `v` in floating point:
    /// `ε ‖ |W^{-1/2}| |K| |v| ‖₂`.
    pub fn rounding_floor(&self, e: f64, v: &[f64]) -> f64 {
        let n = self.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut r = (self.diag[i].abs() + (e * self.weight[i]).abs()) * v[i].abs();
            if i > 0 {
                r += self.off[i - 1].abs() * v[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs() * v[i + 1].abs();
            }
            sum += r * r / self.weight[i];
        }
        f64::EPSILON * sum.sqrt()
    }

    /// The `k` lowest eigenpairs, ascending.
    pub fn lowest(&self, k: usize) -> Result<Vec<Eigenpair>> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid("k", format!("must lie in [1, {}], got {k}", self.len())));
        }
        (0..k)
            .map(|idx| {
                let energy = self.eigenvalue(idx)?;
                let vector = self.eigenvector(energy)?;
                let residual = self.residual(energy, &vector);
                let rounding_floor = self.rounding_floor(energy, &vector);
                let accepted = (RESIDUAL_TOL * energy.abs()).max(FLOOR_FACTOR * rounding_floor);
                if !(residual <= accepted) {
                    return Err(Error::numeric(
                        "eigensolver",
                        format!(
                            "eigenvalue {idx} = {energy:e}: residual {residual:e} exceeds {accepted:e} \
                             (rounding floor {rounding_floor:e})"
                        ),
                    ));
                }
                Ok(Eigenpair { energy, vector, residual, rounding_floor })
            })
            .collect()
    }
}

/// Make the first component above 1e−8 of the largest one positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * big) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
