//! Lie algebra of the punctured-plane canonical group.
//!
//! Basis {π_φ, π_ρ, c, s} plus an optional central generator. Brackets are
//! stored in the convention `[X, Y]_algebra = (1/i)[X̂, Ŷ]` (ħ = 1), so the
//! operator relation `[ŝ, π̂_φ] = iĉ` becomes the table entry `[s, π_φ] = c`.

mod momentum;
mod rep;

pub use momentum::{
    central_extension_check, poisson_bracket, BracketMethod, Gradient, MomentumMap, Observable,
    PhaseSpacePoint,
};
pub use rep::{bump_test_vector, commutator_residual, rep_label, roundoff_bound, TruncatedRep};

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    PiPhi,
    PiRho,
    C,
    S,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::PiPhi, Generator::PiRho, Generator::C, Generator::S];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::PiPhi => "pi_phi",
            Generator::PiRho => "pi_rho",
            Generator::C => "c",
            Generator::S => "s",
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Element of the (optionally centrally extended) algebra.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LieElement {
    pub coeff_pi_phi: f64,
    pub coeff_pi_rho: f64,
    pub coeff_c: f64,
    pub coeff_s: f64,
    pub coeff_center: f64,
}

impl LieElement {
    pub const ZERO: LieElement = LieElement {
        coeff_pi_phi: 0.0,
        coeff_pi_rho: 0.0,
        coeff_c: 0.0,
        coeff_s: 0.0,
        coeff_center: 0.0,
    };

    pub fn new(pi_phi: f64, pi_rho: f64, c: f64, s: f64, center: f64) -> Result<Self> {
        let e = Self { coeff_pi_phi: pi_phi, coeff_pi_rho: pi_rho, coeff_c: c, coeff_s: s, coeff_center: center };
        if e.basis_coeffs().iter().chain([center].iter()).all(|v| v.is_finite()) {
            Ok(e)
        } else {
            Err(Error::invalid("LieElement", "coefficients must be finite"))
        }
    }

    pub fn basis(g: Generator) -> Self {
        Self::ZERO.with_coeff(g, 1.0)
    }

    pub fn central(value: f64) -> Self {
        Self { coeff_center: value, ..Self::ZERO }
    }

    pub fn coeff(&self, g: Generator) -> f64 {
        self.basis_coeffs()[g.index()]
    }

    pub fn with_coeff(mut self, g: Generator, value: f64) -> Self {
        match g {
            Generator::PiPhi => self.coeff_pi_phi = value,
            Generator::PiRho => self.coeff_pi_rho = value,
            Generator::C => self.coeff_c = value,
            Generator::S => self.coeff_s = value,
        }
        self
    }

    pub fn basis_coeffs(&self) -> [f64; 4] {
        [self.coeff_pi_phi, self.coeff_pi_rho, self.coeff_c, self.coeff_s]
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.basis_coeffs().iter().fold(self.coeff_center.abs(), |m, v| m.max(v.abs()))
    }
}

impl Add for LieElement {
    type Output = LieElement;
    fn add(self, o: LieElement) -> LieElement {
        LieElement {
            coeff_pi_phi: self.coeff_pi_phi + o.coeff_pi_phi,
            coeff_pi_rho: self.coeff_pi_rho + o.coeff_pi_rho,
            coeff_c: self.coeff_c + o.coeff_c,
            coeff_s: self.coeff_s + o.coeff_s,
            coeff_center: self.coeff_center + o.coeff_center,
        }
    }
}

impl Neg for LieElement {
    type Output = LieElement;
    fn neg(self) -> LieElement {
        -1.0 * self
    }
}

impl Sub for LieElement {
    type Output = LieElement;
    fn sub(self, o: LieElement) -> LieElement {
        self + (-o)
    }
}

impl Mul<LieElement> for f64 {
    type Output = LieElement;
    fn mul(self, e: LieElement) -> LieElement {
        LieElement {
            coeff_pi_phi: self * e.coeff_pi_phi,
            coeff_pi_rho: self * e.coeff_pi_rho,
            coeff_c: self * e.coeff_c,
            coeff_s: self * e.coeff_s,
            coeff_center: self * e.coeff_center,
        }
    }
}

/// Antisymmetric bracket table over the four basis generators.
///
/// Central components of table entries carry the extension cocycle z(A, B);
/// the central generator itself commutes with everything.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTable {
    table: [[LieElement; 4]; 4],
}

impl StructureTable {
    /// The six relations of the punctured-plane representation:
    /// `[s,π_φ]=c, [c,π_φ]=−s, [s,π_ρ]=s, [c,π_ρ]=c, [π_φ,π_ρ]=0, [c,s]=0`.
    pub fn punctured_plane() -> Self {
        use Generator::*;
        let mut t = Self { table: [[LieElement::ZERO; 4]; 4] };
        t.set(S, PiPhi, LieElement::basis(C));
        t.set(C, PiPhi, -LieElement::basis(S));
        t.set(S, PiRho, LieElement::basis(S));
        t.set(C, PiRho, LieElement::basis(C));
        t.set(PiPhi, PiRho, LieElement::ZERO);
        t.set(C, S, LieElement::ZERO);
        t
    }

    fn set(&mut self, a: Generator, b: Generator, value: LieElement) {
        self.table[a.index()][b.index()] = value;
        self.table[b.index()][a.index()] = -value;
    }

    /// Add a central term `z[a][b]` to every basis bracket. `z` must be
    /// antisymmetric and finite.
    pub fn with_central_extension(mut self, z: [[f64; 4]; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                if !z[i][j].is_finite() || z[i][j] != -z[j][i] {
                    return Err(Error::invalid("central_extension", format!("z[{i}][{j}] breaks antisymmetry")));
                }
            }
        }
        for (i, row) in self.table.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                entry.coeff_center = z[i][j];
            }
        }
        Ok(self)
    }

    pub fn entry(&self, a: Generator, b: Generator) -> LieElement {
        self.table[a.index()][b.index()]
    }

    pub fn is_antisymmetric(&self) -> bool {
        Generator::ALL
            .iter()
            .all(|&a| Generator::ALL.iter().all(|&b| self.entry(a, b) == -self.entry(b, a)))
    }

    /// Bilinear extension of the table.
    pub fn bracket(&self, a: &LieElement, b: &LieElement) -> LieElement {
        let (ca, cb) = (a.basis_coeffs(), b.basis_coeffs());
        let mut out = LieElement::ZERO;
        for i in 0..4 {
            if ca[i] == 0.0 {
                continue;
            }
            for j in 0..4 {
                if cb[j] != 0.0 {
                    out = out + (ca[i] * cb[j]) * self.table[i][j];
                }
            }
        }
        out
    }

    /// `[A,[B,C]] + [B,[C,A]] + [C,[A,B]]`.
    pub fn jacobi_residual(&self, a: &LieElement, b: &LieElement, c: &LieElement) -> LieElement {
        self.bracket(a, &self.bracket(b, c)) + self.bracket(b, &self.bracket(c, a)) + self.bracket(c, &self.bracket(a, b))
    }

    /// Largest Jacobi residual over all 4³ basis triples. The table entries
    /// are small integers, so the f64 arithmetic here is exact.
    pub fn max_basis_jacobi_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &a in &Generator::ALL {
            for &b in &Generator::ALL {
                for &c in &Generator::ALL {
                    let r = self.jacobi_residual(&LieElement::basis(a), &LieElement::basis(b), &LieElement::basis(c));
                    worst = worst.max(r.max_abs());
                }
            }
        }
        worst
    }
}

impl Default for StructureTable {
    fn default() -> Self {
        Self::punctured_plane()
    }
}
