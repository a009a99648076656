//! Vector potential of a thin solenoid and its line integral.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::FluxConfig;

/// Closest a loop may come to the solenoid.
const PUNCTURE_TOL: f64 = 1e-9;
/// Quadrature pieces are kept shorter than this fraction of their distance to the origin.
const PIECE_RATIO: f64 = 0.25;
const GL_ORDER: usize = 10;

/// `A(x, y) = (Φ/2π) (−y, x)/r²`. Undefined on the solenoid itself.
pub fn vector_potential(x: f64, y: f64, flux: &FluxConfig) -> Result<(f64, f64)> {
    let r2 = x * x + y * y;
    if !(r2.sqrt() > PUNCTURE_TOL) {
        return Err(Error::Puncture(format!("vector potential evaluated at ({x}, {y})")));
    }
    let c = flux.flux() / (2.0 * PI * r2);
    Ok((-y * c, x * c))
}

/// `q ∮ A·dx` along a closed polygon whose first and last vertices coincide.
pub fn holonomy(path: &[(f64, f64)], flux: &FluxConfig) -> Result<f64> {
    check_loop(path)?;
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let mut total = 0.0;
    for seg in path.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let d = distance_to_origin(p, q);
        if d < PUNCTURE_TOL {
            return Err(Error::Puncture(format!(
                "segment {p:?} -> {q:?} passes within {d:e} of the solenoid"
            )));
        }
        let len = (q.0 - p.0).hypot(q.1 - p.1);
        let pieces = (len / (PIECE_RATIO * d)).ceil().max(1.0) as usize;
        let (dx, dy) = ((q.0 - p.0) / pieces as f64, (q.1 - p.1) / pieces as f64);
        for k in 0..pieces {
            let (x0, y0) = (p.0 + k as f64 * dx, p.1 + k as f64 * dy);
            for (t, w) in nodes.iter().zip(&weights) {
                let s = 0.5 * (t + 1.0);
                let (x, y) = (x0 + s * dx, y0 + s * dy);
                // A·dx for the unit-flux potential; scaled once at the end.
                total += 0.5 * w * (x * dy - y * dx) / (x * x + y * y);
            }
        }
    }
    Ok(flux.charge() * flux.flux() * total / (2.0 * PI))
}

/// Number of times a closed polygon winds counter-clockwise about the origin.
pub fn winding_number(path: &[(f64, f64)]) -> Result<i64> {
    check_loop(path)?;
    let mut turn = 0.0;
    for seg in path.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        if distance_to_origin(p, q) < PUNCTURE_TOL {
            return Err(Error::Puncture(format!("segment {p:?} -> {q:?} touches the origin")));
        }
        let cross = p.0 * q.1 - p.1 * q.0;
        let dot = p.0 * q.0 + p.1 * q.1;
        turn += cross.atan2(dot);
    }
    Ok((turn / (2.0 * PI)).round() as i64)
}

fn check_loop(path: &[(f64, f64)]) -> Result<()> {
    if path.len() < 4 {
        return Err(Error::invalid("path", "a closed loop needs at least three vertices plus the closing one"));
    }
    if path.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::invalid("path", "vertices must be finite"));
    }
    if path[0] != path[path.len() - 1] {
        return Err(Error::invalid("path", "first and last vertices must coincide"));
    }
    Ok(())
}

fn distance_to_origin(p: (f64, f64), q: (f64, f64)) -> f64 {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (-(p.0 * dx + p.1 * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 + t * dx).hypot(p.1 + t * dy)
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
