//! Truncated β-representation of the algebra on `{e^{imφ}} ⊗ radial nodes`.
//!
//! Works in λ = ln ρ with the uniform measure dλ dφ, where π̂_ρ = −i∂_λ is a
//! symmetrized central difference. Natural units (ħ = 1). Radial unknowns are
//! the interior nodes of the grid; both radial ends are Dirichlet. Couplings
//! of ĉ, ŝ that leave the window |m| ≤ m_max are dropped.

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use super::{Generator, LieElement, StructureTable};
use crate::error::{Error, Result};
use crate::grid::{RadialGrid, Spacing};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Nodes at either radial end where a test vector must vanish: products of two
/// nearest-neighbour stencils reach two nodes deep.
const RADIAL_MARGIN: usize = 2;

#[derive(Clone, Debug)]
pub struct TruncatedRep {
    beta: f64,
    m_max: i32,
    grid: RadialGrid,
    n_radial: usize,
    rho: Vec<f64>,
    ops: [CsMat<Complex64>; 4],
}

impl TruncatedRep {
    /// Assemble π̂_φ, π̂_ρ, ĉ, ŝ for representation label `beta`.
    pub fn build(beta: f64, m_max: i32, grid: &RadialGrid) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if m_max < 1 {
            return Err(Error::invalid("m_max", format!("must be >= 1, got {m_max}")));
        }
        if grid.spacing() != Spacing::Log {
            return Err(Error::invalid("grid", "the dλ representation needs log spacing"));
        }
        let n_radial = grid.n_points() - 2;
        let rho: Vec<f64> = (1..=n_radial).map(|j| grid.node(j)).collect();
        let n_sectors = (2 * m_max + 1) as usize;
        let dim = n_sectors * n_radial;
        let h = grid.step();
        let idx = |m: i32, j: usize| ((m + m_max) as usize) * n_radial + j;

        let mut pi_phi = TriMat::new((dim, dim));
        let mut pi_rho = TriMat::new((dim, dim));
        let mut c = TriMat::new((dim, dim));
        let mut s = TriMat::new((dim, dim));
        let half_inv_h = 0.5 / h;
        for m in -m_max..=m_max {
            for j in 0..n_radial {
                let row = idx(m, j);
                pi_phi.add_triplet(row, row, Complex64::new(m as f64 + beta, 0.0));
                if j + 1 < n_radial {
                    pi_rho.add_triplet(row, idx(m, j + 1), -I * half_inv_h);
                }
                if j > 0 {
                    pi_rho.add_triplet(row, idx(m, j - 1), I * half_inv_h);
                }
                let half_rho = 0.5 * rho[j];
                // cos φ e^{imφ} = (e^{i(m+1)φ} + e^{i(m−1)φ}) / 2
                // sin φ e^{imφ} = (e^{i(m+1)φ} − e^{i(m−1)φ}) / 2i
                if m < m_max {
                    c.add_triplet(idx(m + 1, j), row, Complex64::new(half_rho, 0.0));
                    s.add_triplet(idx(m + 1, j), row, -I * half_rho);
                }
                if m > -m_max {
                    c.add_triplet(idx(m - 1, j), row, Complex64::new(half_rho, 0.0));
                    s.add_triplet(idx(m - 1, j), row, I * half_rho);
                }
            }
        }
        Ok(Self {
            beta,
            m_max,
            grid: grid.clone(),
            n_radial,
            rho,
            ops: [pi_phi.to_csr(), pi_rho.to_csr(), c.to_csr(), s.to_csr()],
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m_max(&self) -> i32 {
        self.m_max
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    /// Radii of the interior nodes carried by the representation.
    pub fn radii(&self) -> &[f64] {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.ops[0].rows()
    }

    /// Flat index of sector `m`, interior radial node `j`.
    pub fn index(&self, m: i32, j: usize) -> usize {
        ((m + self.m_max) as usize) * self.n_radial + j
    }

    pub fn operator(&self, g: Generator) -> &CsMat<Complex64> {
        &self.ops[g.index()]
    }

    pub fn apply(&self, g: Generator, v: &[Complex64]) -> Vec<Complex64> {
        matvec(self.operator(g), v)
    }

    /// Representation of an algebra element; the central part acts as a multiple of 1.
    pub fn apply_element(&self, e: &LieElement, v: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = v.iter().map(|x| x * e.coeff_center).collect();
        for &g in &Generator::ALL {
            let coeff = e.coeff(g);
            if coeff != 0.0 {
                for (o, w) in out.iter_mut().zip(self.apply(g, v)) {
                    *o += w * coeff;
                }
            }
        }
        out
    }

    /// `max |X_ij − conj(X_ji)|`.
    pub fn hermiticity_residual(&self, g: Generator) -> f64 {
        let op = self.operator(g);
        let mut worst: f64 = 0.0;
        for (i, row) in op.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                let mirror = op.get(j, i).copied().unwrap_or_default();
                worst = worst.max((v - mirror.conj()).norm());
            }
        }
        worst
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn norm_bound(&self, g: Generator) -> f64 {
        self.operator(g)
            .outer_iterator()
            .map(|row| row.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the diagonal π̂_φ, one per sector, ascending.
    pub fn pi_phi_levels(&self) -> Vec<f64> {
        (-self.m_max..=self.m_max).map(|m| m as f64 + self.beta).collect()
    }

    pub fn label(&self) -> f64 {
        rep_label(self.beta)
    }

    fn check_support(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::invalid("test_vector", format!("length {} != dim {}", v.len(), self.dim())));
        }
        for m in -self.m_max..=self.m_max {
            for j in 0..self.n_radial {
                let edge_sector = m.abs() == self.m_max;
                let edge_node = j < RADIAL_MARGIN || j + RADIAL_MARGIN >= self.n_radial;
                if (edge_sector || edge_node) && v[self.index(m, j)] != Complex64::default() {
                    return Err(Error::BoundarySupport(format!("nonzero amplitude at sector {m}, interior node {j}")));
                }
            }
        }
        Ok(())
    }
}

fn matvec(op: &CsMat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    op.outer_iterator()
        .map(|row| row.iter().fold(Complex64::default(), |acc, (j, &a)| acc + a * v[j]))
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖([X̂,Ŷ] − iẐ) v‖ / ‖v‖` with `Z = [X, Y]` from the punctured-plane table.
pub fn commutator_residual(rep: &TruncatedRep, x: Generator, y: Generator, v: &[Complex64]) -> Result<f64> {
    rep.check_support(v)?;
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Err(Error::invalid("test_vector", "zero vector"));
    }
    let xy = rep.apply(x, &rep.apply(y, v));
    let yx = rep.apply(y, &rep.apply(x, v));
    let z = StructureTable::punctured_plane().bracket(&LieElement::basis(x), &LieElement::basis(y));
    let zv = rep.apply_element(&z, v);
    let r: Vec<Complex64> = xy.iter().zip(&yx).zip(&zv).map(|((a, b), c)| a - b - I * c).collect();
    Ok(norm(&r) / v_norm)
}

/// Rounding-level bound for [`commutator_residual`] on a pair whose exact
/// discrete commutator vanishes: `64 ε ‖X̂‖ ‖Ŷ‖`.
pub fn roundoff_bound(rep: &TruncatedRep, x: Generator, y: Generator) -> f64 {
    64.0 * f64::EPSILON * rep.norm_bound(x) * rep.norm_bound(y)
}

/// Compact C^∞ bump `exp(−1/(1−u²))` in λ centred on the grid, times a
/// per-sector amplitude. Sectors |m| = m_max and the radial margins are zero.
pub fn bump_test_vector(
    rep: &TruncatedRep,
    half_width_frac: f64,
    amplitude: impl Fn(i32) -> Complex64,
) -> Vec<Complex64> {
    let grid = rep.grid();
    let (lo, hi) = (grid.native_min(), grid.native_max());
    let centre = 0.5 * (lo + hi);
    let half = half_width_frac.clamp(1e-3, 0.49) * (hi - lo);
    let mut v = vec![Complex64::default(); rep.dim()];
    for m in -(rep.m_max() - 1)..rep.m_max() {
        let a = amplitude(m);
        for j in RADIAL_MARGIN..rep.n_radial() - RADIAL_MARGIN {
            let u = (grid.lambda(j + 1) - centre) / half;
            if u.abs() < 1.0 {
                v[rep.index(m, j)] = a * (-1.0 / (1.0 - u * u)).exp();
            }
        }
    }
    v
}

/// Representation label β mod 1 in [0, 1).
pub fn rep_label(beta: f64) -> f64 {
    let r = beta.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Generator::*;

    fn small_rep(beta: f64) -> TruncatedRep {
        TruncatedRep::build(beta, 3, &RadialGrid::log(1e-2, 1.0, 64).unwrap()).unwrap()
    }

    #[test]
    fn pi_phi_is_diagonal_with_shifted_integers() {
        let rep = small_rep(0.0);
        let k = rep.index(3, 10);
        assert_eq!(rep.operator(PiPhi).get(k, k).copied(), Some(Complex64::new(3.0, 0.0)));
        let rep = small_rep(0.25);
        let k = rep.index(0, 5);
        assert_eq!(rep.operator(PiPhi).get(k, k).copied(), Some(Complex64::new(0.25, 0.0)));
        assert_eq!(rep.operator(PiPhi).nnz(), rep.dim());
    }

    #[test]
    fn c_splits_a_pure_mode_into_neighbouring_sectors() {
        let rep = small_rep(0.1);
        let j = 17;
        let mut v = vec![Complex64::default(); rep.dim()];
        v[rep.index(1, j)] = Complex64::new(1.0, 0.0);
        let out = rep.apply(C, &v);
        let half_rho = 0.5 * rep.radii()[j];
        assert_eq!(out[rep.index(2, j)], Complex64::new(half_rho, 0.0));
        assert_eq!(out[rep.index(0, j)], Complex64::new(half_rho, 0.0));
        let others: f64 = out.iter().map(|z| z.norm()).sum::<f64>() - 2.0 * half_rho;
        assert!(others.abs() < 1e-15);
    }

    #[test]
    fn all_generators_are_hermitian() {
        for beta in [0.0, 0.3, -1.7] {
            let rep = small_rep(beta);
            for &g in &Generator::ALL {
                assert!(rep.hermiticity_residual(g) < 1e-14, "{g} at beta {beta}");
            }
        }
    }

    #[test]
    fn commuting_pairs_are_exact() {
        let rep = small_rep(0.4);
        let v = bump_test_vector(&rep, 0.4, |m| Complex64::new(1.0, 0.3 * m as f64));
        assert!(commutator_residual(&rep, PiPhi, PiRho, &v).unwrap() < 1e-13);
        assert!(commutator_residual(&rep, C, S, &v).unwrap() < 1e-15);
        assert!(commutator_residual(&rep, S, PiPhi, &v).unwrap() < 1e-13);
        assert!(commutator_residual(&rep, C, PiPhi, &v).unwrap() < 1e-13);
        assert!(commutator_residual(&rep, PiPhi, PiRho, &v).unwrap() < roundoff_bound(&rep, PiPhi, PiRho));
    }

    #[test]
    fn norm_bounds() {
        let rep = small_rep(0.25);
        assert_eq!(rep.norm_bound(PiPhi), 3.25);
        assert!((rep.norm_bound(PiRho) - 1.0 / rep.grid().step()).abs() < 1e-9);
        assert!(rep.norm_bound(C) <= *rep.radii().last().unwrap() + 1e-15);
    }

    #[test]
    fn rejects_vectors_on_the_truncation_edge() {
        let rep = small_rep(0.0);
        let mut v = bump_test_vector(&rep, 0.4, |_| Complex64::new(1.0, 0.0));
        v[rep.index(3, 20)] = Complex64::new(1.0, 0.0);
        assert!(matches!(commutator_residual(&rep, S, PiRho, &v), Err(Error::BoundarySupport(_))));
        let mut v = bump_test_vector(&rep, 0.4, |_| Complex64::new(1.0, 0.0));
        v[rep.index(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(commutator_residual(&rep, S, PiRho, &v), Err(Error::BoundarySupport(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = RadialGrid::log(1e-2, 1.0, 64).unwrap();
        assert!(TruncatedRep::build(0.0, 0, &g).is_err());
        assert!(TruncatedRep::build(0.0, 2, &RadialGrid::linear(0.1, 1.0, 64).unwrap()).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(rep_label(1.25), 0.25);
        assert_eq!(rep_label(0.0), 0.0);
        assert_eq!(rep_label(-0.75), 0.25);
        assert_eq!(rep_label(-1e-18), 0.0);
    }

    #[test]
    fn equal_labels_share_the_pi_phi_spectrum() {
        let a = small_rep(0.25).pi_phi_levels();
        let b = small_rep(1.25).pi_phi_levels();
        // b is a relabeled by m -> m + 1
        assert_eq!(&a[1..], &b[..b.len() - 1]);
        let c = small_rep(0.5).pi_phi_levels();
        assert!(a.iter().all(|x| c.iter().all(|y| (x - y).abs() > 0.2)));
    }
}
