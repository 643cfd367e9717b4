//! The extremal family `e^{-a|y| + b·y + c}` and least-squares orbit fits.

use crate::cone::{ConeFunction, RadialAngularGrid};
use crate::error::{LabError, Result};
use crate::symmetry::{orbit_element, SymmetryElement};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremizerParams {
    pub a: Complex64,
    pub b: [Complex64; 2],
    pub c: Complex64,
}

impl ExtremizerParams {
    pub fn new(a: Complex64, b: [Complex64; 2], c: Complex64) -> Result<Self> {
        let p = ExtremizerParams { a, b, c };
        if !p.is_admissible() {
            return Err(LabError::Inadmissible(format!("need |Re b| < Re a, got a={a}, b=({}, {})", b[0], b[1])));
        }
        Ok(p)
    }

    pub fn real(a: f64, b1: f64, b2: f64, c: f64) -> Result<Self> {
        let r = |x: f64| Complex64::new(x, 0.0);
        Self::new(r(a), [r(b1), r(b2)], r(c))
    }

    /// `g₀ = π^{-1/2} e^{-|y|}`, the normalized radial extremizer.
    pub fn ground_state() -> Self {
        Self::real(1.0, 0.0, 0.0, -0.5 * PI.ln()).expect("admissible")
    }

    pub fn is_admissible(&self) -> bool {
        self.a.re > 0.0 && self.b[0].re.hypot(self.b[1].re) < self.a.re
    }

    pub fn value(&self, r: f64, theta: f64) -> Complex64 {
        let (s, c) = theta.sin_cos();
        (-self.a * r + self.b[0] * (r * c) + self.b[1] * (r * s) + self.c).exp()
    }

    /// `‖f‖₂` on the whole cone: `e^{2Re c}·π/√((Re a)² − |Re b|²)`, square-rooted.
    pub fn exact_l2_norm(&self) -> f64 {
        let a = self.a.re;
        let b2 = self.b[0].re.powi(2) + self.b[1].re.powi(2);
        (self.c.re.exp().powi(2) * PI / (a * a - b2).sqrt()).sqrt()
    }

    /// `(c0, a)` when the member is `c0·e^{-a|y|}` with real `a`.
    pub fn radial_profile(&self) -> Option<(f64, f64)> {
        let zero = |z: Complex64| z.norm() == 0.0;
        (zero(self.b[0]) && zero(self.b[1]) && self.a.im == 0.0).then(|| (self.c.re.exp(), self.a.re))
    }
}

/// Samples of `e^{-a|y| + b·y + c}`.
pub fn make_extremizer(p: &ExtremizerParams, grid: Arc<RadialAngularGrid>) -> Result<ConeFunction> {
    if !p.is_admissible() {
        return Err(LabError::Inadmissible("|Re b| must be below Re a".into()));
    }
    Ok(ConeFunction::from_fn(grid, |r, t| p.value(r, t)))
}

/// Real extremizer fitted to a nonnegative function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitFit {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    /// `e^c`.
    pub amplitude: f64,
    /// `‖f − fit‖₂ / ‖f‖₂`, or 1 when the fit is inadmissible.
    pub residual: f64,
    pub admissible: bool,
    /// `h` with `act(h, g₀) ∝ fit`.
    pub symmetry: Option<SymmetryElement>,
    /// `(s, t, r)` of the boost/dilation chain behind `symmetry`.
    pub orbit: Option<(f64, f64, f64)>,
}

impl OrbitFit {
    pub fn params(&self) -> ExtremizerParams {
        ExtremizerParams {
            a: Complex64::new(self.a, 0.0),
            b: [Complex64::new(self.b1, 0.0), Complex64::new(self.b2, 0.0)],
            c: Complex64::new(self.amplitude.ln(), 0.0),
        }
    }
}

/// Log-linear least squares `log f ≈ −a r + b1 y1 + b2 y2 + c` over nodes
/// with `f > 1e−6·max f`, each residual weighted by `w·f²` (the local `L²`
/// share of the node).
pub fn fit_extremizer(f: &ConeFunction) -> Result<OrbitFit> {
    let grid = f.grid();
    let vals: Vec<f64> = f.samples().iter().map(|z| z.re).collect();
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(LabError::InvalidParameter("fit needs a positive function".into()));
    }
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    let mut used = 0usize;
    for (i, &v) in vals.iter().enumerate() {
        if v <= 1e-6 * peak {
            continue;
        }
        let (r, t) = grid.node(i);
        let w = grid.weight(i) * v * v;
        let row = Vector4::new(-r, r * t.cos(), r * t.sin(), 1.0);
        ata += row * row.transpose() * w;
        atb += row * (w * v.ln());
        used += 1;
    }
    if used < 4 {
        return Err(LabError::InvalidParameter("too few positive samples to fit".into()));
    }
    let sol =
        ata.svd(true, true).solve(&atb, 1e-14).map_err(|e| LabError::InvalidParameter(format!("singular fit: {e}")))?;
    let (a, b1, b2, c) = (sol[0], sol[1], sol[2], sol[3]);
    let admissible = a > 0.0 && b1.hypot(b2) < a;
    let mut fit = OrbitFit { a, b1, b2, amplitude: c.exp(), residual: 1.0, admissible, symmetry: None, orbit: None };
    if admissible {
        let model =
            ConeFunction::from_real_fn(grid.clone(), |r, t| (-a * r + b1 * r * t.cos() + b2 * r * t.sin() + c).exp());
        fit.residual = model.sub(f)?.l2_norm() / f.l2_norm();
        let (h, orbit) = orbit_element(a, b1, b2)?;
        fit.symmetry = Some(h);
        fit.orbit = Some(orbit);
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{l2_norm, GridSpec};
    use crate::symmetry::act_on_cone_function;

    fn grid() -> Arc<RadialAngularGrid> {
        RadialAngularGrid::shared(GridSpec::default()).unwrap()
    }

    #[test]
    fn ground_state_norm() {
        let g = grid();
        let f = make_extremizer(&ExtremizerParams::ground_state(), g.clone()).unwrap();
        assert!((l2_norm(&f) - 1.0).abs() < 1e-6);
        assert!((ExtremizerParams::ground_state().exact_l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn admissibility_boundary_is_rejected() {
        assert!(ExtremizerParams::real(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn tilted_member_norm_matches_angular_oracle() {
        let p = ExtremizerParams::real(2.0, 1.0, 0.0, 0.0).unwrap();
        let f = make_extremizer(&p, grid()).unwrap();
        let exact = 2.0 * PI / 12f64.sqrt();
        // The grid misses the tip disc r < 2^{k_min-1}, worth about 2π·2^{k_min-1}.
        let tip = 2.0 * PI * grid().inner_radius();
        assert!((l2_norm(&f).powi(2) + tip - exact).abs() < 1e-9);
        assert!((p.exact_l2_norm().powi(2) - exact).abs() < 1e-14);
    }

    #[test]
    fn fit_recovers_member() {
        let p = ExtremizerParams::real(2.0, 1.0, 0.0, 0.0).unwrap();
        let f = make_extremizer(&p, grid()).unwrap();
        let fit = fit_extremizer(&f).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-6 && (fit.b1 - 1.0).abs() < 1e-6 && fit.b2.abs() < 1e-6);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn orbit_element_reproduces_fit() {
        let g = grid();
        let p = ExtremizerParams::real(2.0, 0.4, -0.7, 0.0).unwrap();
        let f = make_extremizer(&p, g.clone()).unwrap();
        let fit = fit_extremizer(&f).unwrap();
        let g0 = make_extremizer(&ExtremizerParams::ground_state(), g).unwrap();
        let moved = act_on_cone_function(&fit.symmetry.unwrap(), &g0);
        let ratio = f.l2_norm() / moved.l2_norm();
        let err = moved.scaled(ratio).sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(err < 1e-6, "orbit mismatch {err}");
    }
}
