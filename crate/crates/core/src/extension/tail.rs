//! Estimates of `∭ |Tf|⁶` outside a box.

use super::{closed_form_extension, SpaceTimeBox, SpaceTimeField};
use crate::cone::ConeFunction;
use crate::family::{fit_extremizer, ExtremizerParams};
use crate::quadrature::adaptive_gauss_kronrod;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How a tail estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// No estimate attached; the tail is reported as zero.
    None,
    /// Exact exterior integral of the radial closed form.
    ExactRadial,
    /// Total mass of the family member minus its box quadrature.
    FamilyComplement,
    /// Exterior share of a fitted family member, transferred to the field.
    FittedExtremizer,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub sixth_power_mass: f64,
    pub policy: TailPolicy,
}

impl TailEstimate {
    pub fn none() -> Self {
        TailEstimate { sixth_power_mass: 0.0, policy: TailPolicy::None }
    }
}

/// `∫_{v0}^∞ dv / (v² + a²)^{3/2}` with `v0 = X² + 1 − t²`, `a = 2|t|`: the
/// radial exterior of one time slice of `|K|⁶`, `K = 1/√((1−it)² + ρ²)`,
/// after `u = ρ²`.
fn slice_exterior(x: f64, t: f64) -> f64 {
    let v0 = x * x + 1.0 - t * t;
    let a = 2.0 * t.abs();
    let s = (v0 * v0 + a * a).sqrt();
    if v0 >= 0.0 {
        1.0 / (s * (s + v0))
    } else {
        (s - v0) / (a * a * s)
    }
}

/// Exact `∭_{outside} |Tf|⁶` for `f = c0·e^{-a|y|}` and the cylinder `(X, T)`.
pub fn radial_exterior_sixth_power(c0: f64, a: f64, radius: f64, half_time: f64) -> f64 {
    // Tf = (2πc0/a)·K(x/a, t/a).
    let xr = radius / a;
    let tr = half_time / a;
    let time_tail = PI * (0.5 * PI - tr.atan());
    let (side, _) = adaptive_gauss_kronrod(|t| slice_exterior(xr, t), 0.0, tr, 1e-16, 1e-12);
    let k6 = time_tail + 2.0 * PI * side;
    (2.0 * PI * c0 / a).powi(6) * a.powi(3) * k6
}

/// `(2π)⁵‖f‖₂⁶`, the full-space sixth-power mass of a family member.
pub fn family_total_sixth_power(p: &ExtremizerParams) -> f64 {
    (2.0 * PI).powi(5) * p.exact_l2_norm().powi(6)
}

/// Exterior mass of a family member on a box.
pub fn family_exterior_sixth_power(p: &ExtremizerParams, bx: &std::sync::Arc<SpaceTimeBox>) -> TailEstimate {
    if let Some((c0, a)) = p.radial_profile() {
        let spec = bx.spec();
        return TailEstimate {
            sixth_power_mass: radial_exterior_sixth_power(c0, a, spec.radius, spec.half_time),
            policy: TailPolicy::ExactRadial,
        };
    }
    let field = SpaceTimeField::from_fn(bx.clone(), |q| closed_form_extension(p.a, p.b, p.c, [q[0], q[1]], q[2]));
    let inside = field.power_integral(6.0);
    TailEstimate {
        sixth_power_mass: (family_total_sixth_power(p) - inside).max(0.0),
        policy: TailPolicy::FamilyComplement,
    }
}

/// Tail for a computed field of `f`: the exterior share `τ` of the family
/// member fitted to `|f|` is applied to the field's own box mass,
/// `tail = inside·τ/(1−τ)`.
pub fn fitted_tail(f: &ConeFunction, field: &SpaceTimeField) -> TailEstimate {
    let inside = field.power_integral(6.0);
    let fit = fit_extremizer(&f.abs());
    let params = match fit {
        Ok(fit) if fit.admissible => fit.params(),
        _ => return TailEstimate::none(),
    };
    let ext = family_exterior_sixth_power(&params, field.space_time_box());
    let total = family_total_sixth_power(&params);
    let tau = (ext.sixth_power_mass / total).clamp(0.0, 0.999);
    TailEstimate { sixth_power_mass: inside * tau / (1.0 - tau), policy: TailPolicy::FittedExtremizer }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_exterior_from_zero_radius_is_the_full_slice() {
        for &t in &[0.0, 0.3, 1.0, 4.0, 30.0] {
            let v = slice_exterior(0.0, t);
            assert!((v - 0.5 / (1.0 + t * t)).abs() < 1e-14 * (1.0 + v));
        }
    }

    #[test]
    fn whole_space_mass_of_the_ground_state() {
        // A vanishing cylinder leaves everything outside.
        let c0 = PI.powf(-0.5);
        let v = radial_exterior_sixth_power(c0, 1.0, 1e-9, 1e-9);
        assert!((v - (2.0 * PI).powi(5)).abs() < 1e-6 * v);
    }

    #[test]
    fn exterior_matches_brute_force_quadrature() {
        let c0 = 1.0;
        let (x, t) = (3.0, 2.0);
        let inside = {
            let k6 = |rho: f64, s: f64| ((1.0 - s * s + rho * rho).powi(2) + 4.0 * s * s).powf(-1.5);
            let (v, _) = adaptive_gauss_kronrod(
                |s| adaptive_gauss_kronrod(|r| 2.0 * PI * r * k6(r, s), 0.0, x, 1e-15, 1e-12).0,
                -t,
                t,
                1e-14,
                1e-11,
            );
            (2.0 * PI * c0).powi(6) * v
        };
        let total = (2.0 * PI * c0).powi(6) * PI * PI / 2.0;
        let ext = radial_exterior_sixth_power(c0, 1.0, x, t);
        assert!((inside + ext - total).abs() < 1e-8 * total);
    }
}
