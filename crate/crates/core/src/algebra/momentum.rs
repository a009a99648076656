//! Classical momentum map P: algebra → observables on the punctured phase
//! space, and the central-extension residual `P_[A,B] − {P_A, P_B}`.

use super::{Generator, LieElement, StructureTable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSpacePoint {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
}

impl PhaseSpacePoint {
    pub fn new(x: f64, y: f64, px: f64, py: f64) -> Self {
        Self { x, y, px, py }
    }

    fn coords(&self) -> [f64; 4] {
        [self.x, self.y, self.px, self.py]
    }

    fn from_coords(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

/// ∂f/∂(x, y, p_x, p_y).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Gradient {
    pub dx: f64,
    pub dy: f64,
    pub dpx: f64,
    pub dpy: f64,
}

impl Gradient {
    fn axpy(self, a: f64, o: Gradient) -> Gradient {
        Gradient { dx: self.dx + a * o.dx, dy: self.dy + a * o.dy, dpx: self.dpx + a * o.dpx, dpy: self.dpy + a * o.dpy }
    }
}

/// Canonical bracket `{f, g} = ∂_x f ∂_px g − ∂_px f ∂_x g + ∂_y f ∂_py g − ∂_py f ∂_y g`.
pub fn poisson_bracket(f: &Gradient, g: &Gradient) -> f64 {
    f.dx * g.dpx - f.dpx * g.dx + f.dy * g.dpy - f.dpy * g.dy
}

/// A classical observable with its hand-derived gradient.
#[derive(Clone, Copy)]
pub struct Observable {
    pub name: &'static str,
    pub value: fn(&PhaseSpacePoint) -> f64,
    pub gradient: fn(&PhaseSpacePoint) -> Gradient,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BracketMethod {
    /// Gradients from the closed forms.
    Analytic,
    /// Central differences with step `rel_step · max(|coord|, 1)`.
    FiniteDifference { rel_step: f64 },
}

#[derive(Clone, Debug)]
pub struct MomentumMap {
    observables: [Observable; 4],
}

impl MomentumMap {
    /// π_φ ↦ x p_y − y p_x, π_ρ ↦ x p_x + y p_y, c ↦ x, s ↦ y.
    pub fn punctured_plane() -> Self {
        let angular = Observable {
            name: "x*py - y*px",
            value: |p| p.x * p.py - p.y * p.px,
            gradient: |p| Gradient { dx: p.py, dy: -p.px, dpx: -p.y, dpy: p.x },
        };
        let dilation = Observable {
            name: "x*px + y*py",
            value: |p| p.x * p.px + p.y * p.py,
            gradient: |p| Gradient { dx: p.px, dy: p.py, dpx: p.x, dpy: p.y },
        };
        let cx = Observable { name: "x", value: |p| p.x, gradient: |_| Gradient { dx: 1.0, ..Gradient::default() } };
        let sy = Observable { name: "y", value: |p| p.y, gradient: |_| Gradient { dy: 1.0, ..Gradient::default() } };
        Self { observables: [angular, dilation, cx, sy] }
    }

    pub fn observable(&self, g: Generator) -> &Observable {
        &self.observables[g.index()]
    }

    /// `P'_(A, r) = Σ a_i P_i + r`.
    pub fn eval(&self, a: &LieElement, p: &PhaseSpacePoint) -> f64 {
        Generator::ALL
            .iter()
            .fold(a.coeff_center, |acc, &g| acc + a.coeff(g) * (self.observable(g).value)(p))
    }

    pub fn gradient(&self, a: &LieElement, p: &PhaseSpacePoint, method: BracketMethod) -> Gradient {
        Generator::ALL.iter().fold(Gradient::default(), |acc, &g| {
            let coeff = a.coeff(g);
            if coeff == 0.0 {
                return acc;
            }
            let obs = self.observable(g);
            let grad = match method {
                BracketMethod::Analytic => (obs.gradient)(p),
                BracketMethod::FiniteDifference { rel_step } => fd_gradient(obs.value, p, rel_step),
            };
            acc.axpy(coeff, grad)
        })
    }
}

fn fd_gradient(f: fn(&PhaseSpacePoint) -> f64, p: &PhaseSpacePoint, rel_step: f64) -> Gradient {
    let base = p.coords();
    let mut d = [0.0; 4];
    for k in 0..4 {
        let h = rel_step * base[k].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[k] += h;
        minus[k] -= h;
        let f_plus = f(&PhaseSpacePoint::from_coords(plus));
        let f_minus = f(&PhaseSpacePoint::from_coords(minus));
        d[k] = (f_plus - f_minus) / (plus[k] - minus[k]);
    }
    Gradient { dx: d[0], dy: d[1], dpx: d[2], dpy: d[3] }
}

/// `max |P_[A,B] − {P_A, P_B}|` over basis pairs and sample points.
///
/// A nonzero value that is constant across samples would be the cocycle
/// z(A, B); for the punctured plane the residual vanishes.
pub fn central_extension_check(
    table: &StructureTable,
    map: &MomentumMap,
    samples: &[PhaseSpacePoint],
    method: BracketMethod,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "need at least one phase-space point"));
    }
    if let Some(p) = samples.iter().find(|p| p.x == 0.0 && p.y == 0.0) {
        return Err(Error::Puncture(format!("sample point {p:?} sits on the origin")));
    }
    let mut worst: f64 = 0.0;
    for (i, &a) in Generator::ALL.iter().enumerate() {
        for &b in &Generator::ALL[i + 1..] {
            let (ea, eb) = (LieElement::basis(a), LieElement::basis(b));
            let commutator = table.bracket(&ea, &eb);
            for p in samples {
                let pb = poisson_bracket(&map.gradient(&ea, p, method), &map.gradient(&eb, p, method));
                worst = worst.max((map.eval(&commutator, p) - pb).abs());
            }
        }
    }
    Ok(worst)
}
