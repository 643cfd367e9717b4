//! Single-cap extraction, the greedy multi-cap decomposition and the
//! rescale–rotate–boost renormalization.

use crate::caps::{cap_functional, cap_value};
use crate::cone::{annulus_bounds, cone_integral, Cap, ConeFunction};
use crate::error::{invalid, LabError, Result};
use crate::extension::{l6_norm, ExtensionPlan};
use crate::symmetry::{act_on_cone_function, dyadic_rescale_to_unit, widen_cap, SymmetryElement, WidenedCap};
use serde::{Deserialize, Serialize};

/// Pipeline entry-level δ.
pub const DEFAULT_ENTRY_DELTA: f64 = 0.5;
pub const DEFAULT_STOP_TOL: f64 = 1e-2;
/// Relative slack for grid assertions that hold exactly in exact arithmetic.
const ROUNDOFF: f64 = 1e-12;

/// The four properties of a single extraction, recomputed from the pieces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionConditions {
    /// `|g|, |h| <= |f|` at every node.
    pub dominated: bool,
    /// `g·h = 0` at every node.
    pub disjoint: bool,
    /// `|g| <= C‖f‖₂|cap|^{-1/2}χ_cap`.
    pub bounded_on_cap: bool,
    /// `‖g‖₂ >= η‖f‖₂`.
    pub mass_lower_bound: bool,
    /// `∫_cap g^{3/2} >= ¼ c |cap|^{1/4} ‖f‖₂^{3/2}`.
    pub cap_mass: bool,
    /// `‖g‖₂ >= |cap|^{-1/6} (∫ g^{3/2})^{2/3}`.
    pub holder: bool,
    pub big_c: f64,
    pub eta: f64,
}

impl ExtractionConditions {
    pub fn all(&self) -> bool {
        self.dominated && self.disjoint && self.bounded_on_cap && self.mass_lower_bound && self.cap_mass && self.holder
    }
}

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    pub g: ConeFunction,
    pub h: ConeFunction,
    pub cap: Cap,
    /// Threshold `R`; `g = f` on `{x ∈ cap : f(x) <= R}`.
    pub threshold: f64,
    /// `S(f/‖f‖₂)`.
    pub c_meas: f64,
    pub delta: f64,
    pub conditions: ExtractionConditions,
}

fn require_nonnegative(f: &ConeFunction) -> Result<f64> {
    if f.samples().iter().any(|z| z.im != 0.0 || z.re < 0.0 || !z.re.is_finite()) {
        return invalid("cap extraction needs a nonnegative real function");
    }
    let n = f.l2_norm();
    if n == 0.0 {
        return invalid("cap extraction needs a nonzero function");
    }
    Ok(n)
}

/// `f = g + h` with `g` the part of `f` on the maximizing cap below the
/// threshold `R = 16‖f‖₂ / (c²|cap|^{1/2})`.
pub fn extract_cap(f: &ConeFunction, delta: f64) -> Result<ExtractionResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("δ = {delta} must lie in (0, 1)"));
    }
    let norm = require_nonnegative(f)?;
    let grid = f.grid();
    let best = cap_functional(&f.scaled(1.0 / norm));
    let (cap, c) = (best.argmax_cap, best.value);
    let measure = cap.measure();
    let threshold = norm * 16.0 / (c * c * measure.sqrt());
    let in_cap = cap.mask(grid);
    let e: Vec<bool> = (0..grid.len()).map(|i| in_cap[i] && f.samples()[i].re <= threshold).collect();
    let mut g = f.masked(&e);
    let not_e: Vec<bool> = e.iter().map(|b| !b).collect();
    let mut h = f.masked(&not_e);
    g.set_nonnegative_flag();
    h.set_nonnegative_flag();

    let big_c = 16.0 / (c * c);
    let eta = (0.25 * c).powf(2.0 / 3.0);
    let conditions = check_conditions(f, &g, &h, &cap, c, big_c, eta);
    Ok(ExtractionResult { g, h, cap, threshold, c_meas: c, delta, conditions })
}

fn check_conditions(
    f: &ConeFunction,
    g: &ConeFunction,
    h: &ConeFunction,
    cap: &Cap,
    c: f64,
    big_c: f64,
    eta: f64,
) -> ExtractionConditions {
    let grid = f.grid();
    let norm = f.l2_norm();
    let measure = cap.measure();
    let in_cap = cap.mask(grid);
    let (fs, gs, hs) = (f.samples(), g.samples(), h.samples());
    let dominated = (0..grid.len()).all(|i| gs[i].norm() <= fs[i].norm() && hs[i].norm() <= fs[i].norm());
    let disjoint = (0..grid.len()).all(|i| gs[i].norm() * hs[i].norm() == 0.0);
    let bound = big_c * norm * measure.powf(-0.5) * (1.0 + ROUNDOFF);
    let bounded_on_cap = (0..grid.len()).all(|i| gs[i].norm() <= if in_cap[i] { bound } else { 0.0 });
    let g_norm = g.l2_norm();
    let mass_lower_bound = g_norm >= eta * norm * (1.0 - ROUNDOFF);
    let cap_integral = cap_value(g, cap) * measure.powf(0.25);
    let cap_mass = cap_integral >= 0.25 * c * measure.powf(0.25) * norm.powf(1.5) * (1.0 - ROUNDOFF);
    let holder = g_norm >= measure.powf(-1.0 / 6.0) * cap_integral.powf(2.0 / 3.0) * (1.0 - ROUNDOFF);
    ExtractionConditions { dominated, disjoint, bounded_on_cap, mass_lower_bound, cap_mass, holder, big_c, eta }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Check {
    pub holds: bool,
    pub l1: f64,
    pub bound: f64,
    /// `‖g‖₁ − a^{-1}b²|cap|^{1/2}`.
    pub margin: f64,
}

/// `‖g‖₁ >= a^{-1}b²|cap|^{1/2}` given `|g| <= a|cap|^{-1/2}χ_cap` and `‖g‖₂ >= b`.
pub fn l1_lower_bound_check(g: &ConeFunction, cap: &Cap, a: f64, b: f64) -> Result<L1Check> {
    if !(a > 0.0 && b >= 0.0) {
        return invalid("need a > 0 and b >= 0");
    }
    let grid = g.grid();
    let measure = cap.measure();
    let mask = cap.mask(grid);
    let sup = a * measure.powf(-0.5) * (1.0 + ROUNDOFF);
    for (i, z) in g.samples().iter().enumerate() {
        if z.norm() > if mask[i] { sup } else { 0.0 } {
            return invalid("g exceeds a|cap|^{-1/2} χ_cap");
        }
    }
    let g2 = g.l2_norm();
    if g2 < b * (1.0 - ROUNDOFF) {
        return invalid(format!("‖g‖₂ = {g2} is below b = {b}"));
    }
    let l1: f64 = g.samples().iter().enumerate().map(|(i, z)| z.norm() * grid.weight(i)).sum();
    let bound = b * b * measure.sqrt() / a;
    let margin = l1 - bound;
    Ok(L1Check { holds: margin >= -ROUNDOFF * bound, l1, bound, margin })
}

/// One step of the greedy decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub nu: usize,
    pub cap: Cap,
    pub threshold: f64,
    pub piece_norm: f64,
    /// `‖G_{ν+1}‖₂`, the remainder after this step.
    pub remainder_norm: f64,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub pieces: Vec<ConeFunction>,
    /// `G_0 = f, G_1, …, G_N`.
    pub remainders: Vec<ConeFunction>,
    pub caps: Vec<Cap>,
    pub thresholds: Vec<f64>,
    pub records: Vec<DecompositionRecord>,
    pub extractions: Vec<ExtractionConditions>,
}

impl DecompositionResult {
    /// `Σ ‖f_ν‖₂² + ‖G_N‖₂²`.
    pub fn energy(&self) -> f64 {
        let last = self.remainders.last().map_or(0.0, |g| g.l2_norm().powi(2));
        self.pieces.iter().map(|p| p.l2_norm().powi(2)).sum::<f64>() + last
    }
}

/// Repeated extraction on the remainder until `N_max` pieces or
/// `‖G_ν‖₂ < stop_tol·‖f‖₂`.
pub fn decompose(f: &ConeFunction, n_max: usize, stop_tol: f64) -> Result<DecompositionResult> {
    let norm = require_nonnegative(f)?;
    let mut out = DecompositionResult {
        pieces: vec![],
        remainders: vec![f.clone()],
        caps: vec![],
        thresholds: vec![],
        records: vec![],
        extractions: vec![],
    };
    for nu in 0..n_max {
        let rem = out.remainders.last().expect("nonempty");
        if rem.l2_norm() < stop_tol * norm || rem.l2_norm() == 0.0 {
            break;
        }
        let ex = extract_cap(rem, DEFAULT_ENTRY_DELTA)?;
        out.records.push(DecompositionRecord {
            nu,
            cap: ex.cap,
            threshold: ex.threshold,
            piece_norm: ex.g.l2_norm(),
            remainder_norm: ex.h.l2_norm(),
        });
        out.caps.push(ex.cap);
        out.thresholds.push(ex.threshold);
        out.extractions.push(ex.conditions);
        out.pieces.push(ex.g);
        out.remainders.push(ex.h);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenormalizationReport {
    pub cap: Cap,
    pub lambda: f64,
    pub widened: WidenedCap,
    /// `‖f̃ χ_{1/4 <= |y| <= 1}‖₂`.
    pub annulus_l2_mass: f64,
    /// `∫_{1/4 <= |y| <= 1} f̃ dσ`.
    pub annulus_integral: f64,
    /// `annulus_l2_mass / ‖f̃‖₂`.
    pub c_prime: f64,
}

#[derive(Clone, Debug)]
pub struct Renormalization {
    pub f_tilde: ConeFunction,
    pub element: SymmetryElement,
    pub report: RenormalizationReport,
}

/// `f̃ = L_t^* R_θ^* D_λ^* f` with `λ` and `(t, θ)` taken from the extracted cap.
/// Factors equal to the identity are dropped, so an already centered `f`
/// comes back unchanged.
pub fn renormalize(f: &ConeFunction) -> Result<Renormalization> {
    let ex = extract_cap(f, DEFAULT_ENTRY_DELTA)?;
    let cap = ex.cap;
    if !(cap.width() > 0.0) {
        return Err(LabError::InvalidParameter("degenerate cap".into()));
    }
    let lambda = dyadic_rescale_to_unit(&cap);
    let unit_cap = Cap { k: 0, ..cap };
    let widened = widen_cap(&unit_cap)?;
    // Without a boost the rotation only relabels angles; skip it.
    let widening = if widened.t == 0.0 { SymmetryElement::identity() } else { widened.element };
    let dilation = if lambda == 1.0 { SymmetryElement::identity() } else { SymmetryElement::dilation(lambda)? };
    let element = widening.compose(&dilation);
    let f_tilde = act_on_cone_function(&element, f);
    let grid = f.grid();
    let (lo, hi) = (annulus_bounds(-1).0, annulus_bounds(0).1);
    let mask: Vec<bool> = (0..grid.len()).map(|i| (lo..hi).contains(&grid.node(i).0)).collect();
    let inside = f_tilde.masked(&mask);
    let annulus_l2_mass = inside.l2_norm();
    let annulus_integral = cone_integral(&inside).re;
    let total = f_tilde.l2_norm();
    let c_prime = if total > 0.0 { annulus_l2_mass / total } else { 0.0 };
    Ok(Renormalization {
        f_tilde,
        element,
        report: RenormalizationReport { cap, lambda, widened, annulus_l2_mass, annulus_integral, c_prime },
    })
}

/// `δ = 1 − Φ(f)/(2π)^{5/6}`, with `Φ` from the tail-corrected `L⁶` norm. May be
/// slightly negative from quadrature error.
pub fn nearly_extremal_level(f: &ConeFunction, plan: &ExtensionPlan) -> Result<f64> {
    let n = f.l2_norm();
    if n == 0.0 {
        return invalid("δ is undefined for f = 0");
    }
    let t6 = l6_norm(&plan.extend_with_tail(f)?).corrected();
    Ok(1.0 - t6 / n / crate::sharp_constant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caps::window_cap;
    use crate::cone::{restrict_to_cap, GridSpec, RadialAngularGrid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<RadialAngularGrid> {
        RadialAngularGrid::shared(GridSpec { k_min: -12, k_max: 6, n_r: 12, n_theta: 64 }).unwrap()
    }

    fn g0(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
        ConeFunction::from_real_fn(grid.clone(), |r, _| (-r).exp() / PI.sqrt())
    }

    fn two_bump(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
        let one = ConeFunction::from_real_fn(grid.clone(), |_, _| 1.0);
        let bump = |k: i32| restrict_to_cap(&one, &window_cap(grid, k, 0, 8));
        let (a, b) = (bump(0), bump(5));
        let a = a.scaled(0.5f64.sqrt() / a.l2_norm());
        let b = b.scaled(0.5f64.sqrt() / b.l2_norm());
        let mut s = a.add(&b).unwrap();
        s.set_nonnegative_flag();
        s
    }

    #[test]
    fn normalized_indicator_is_taken_whole() {
        let grid = grid();
        let cap = window_cap(&grid, 0, 5, 8);
        let f = restrict_to_cap(&ConeFunction::from_real_fn(grid.clone(), |_, _| 1.0), &cap);
        let f = f.scaled(1.0 / f.l2_norm());
        let ex = extract_cap(&f, 0.5).unwrap();
        assert_eq!(ex.cap, cap);
        assert_eq!(ex.h.l2_norm(), 0.0);
        assert!(ex.conditions.all());
    }

    #[test]
    fn ground_state_extraction_keeps_a_large_piece() {
        let grid = grid();
        let f = g0(&grid);
        let ex = extract_cap(&f, 0.5).unwrap();
        assert!(ex.conditions.all(), "{:?}", ex.conditions);
        let spike = ex.h.samples().iter().zip(f.samples()).filter(|(h, _)| h.re > 0.0);
        assert!(spike.clone().count() > 0);
        // Away from the cap, or inside it with f above the threshold.
        let in_cap = ex.cap.mask(&grid);
        for (i, (h, fv)) in ex.h.samples().iter().zip(f.samples()).enumerate() {
            if h.re > 0.0 && in_cap[i] {
                assert!(fv.re > ex.threshold);
            }
        }
        assert!(ex.g.l2_norm() > 0.45, "{}", ex.g.l2_norm());
    }

    #[test]
    fn extraction_rejects_bad_input() {
        let grid = grid();
        assert!(extract_cap(&ConeFunction::zeros(grid.clone()), 0.5).is_err());
        assert!(extract_cap(&g0(&grid).scaled(-1.0), 0.5).is_err());
        assert!(extract_cap(&g0(&grid), 1.5).is_err());
    }

    #[test]
    fn two_bumps_split_into_distant_caps() {
        let grid = grid();
        let f = two_bump(&grid);
        let ex = extract_cap(&f, 0.5).unwrap();
        assert!([0, 5].contains(&ex.cap.k));
        assert!((ex.g.l2_norm().powi(2) - 0.5).abs() < 0.05);
        let dec = decompose(&f, 4, DEFAULT_STOP_TOL).unwrap();
        assert_eq!(crate::caps::cap_distance(&dec.caps[0], &dec.caps[1]), 5);
    }

    #[test]
    fn indicator_decomposition_stops_after_one_step() {
        let grid = grid();
        let cap = window_cap(&grid, 1, 0, 4);
        let f = restrict_to_cap(&ConeFunction::from_real_fn(grid.clone(), |_, _| 2.0), &cap);
        let dec = decompose(&f, 8, DEFAULT_STOP_TOL).unwrap();
        assert_eq!(dec.pieces.len(), 1);
        assert_eq!(dec.remainders[1].l2_norm(), 0.0);
    }

    #[test]
    fn ground_state_decomposition_conserves_energy() {
        let grid = grid();
        let f = g0(&grid);
        let dec = decompose(&f, 8, 0.0).unwrap();
        assert_eq!(dec.pieces.len(), 8);
        let norms: Vec<f64> = dec.remainders.iter().map(|g| g.l2_norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
        let e = f.l2_norm().powi(2);
        assert!((dec.energy() - e).abs() < 1e-12 * e);
        let mut sum = dec.remainders.last().unwrap().clone();
        for p in &dec.pieces {
            sum = sum.add(p).unwrap();
        }
        assert!(sum.sub(&f).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn l1_bound_is_sharp_for_flat_caps() {
        let grid = grid();
        let cap = window_cap(&grid, 0, 0, 16);
        let a = 1.7;
        let g = restrict_to_cap(&ConeFunction::from_real_fn(grid.clone(), |_, _| a * cap.measure().powf(-0.5)), &cap);
        let chk = l1_lower_bound_check(&g, &cap, a, g.l2_norm()).unwrap();
        assert!(chk.holds);
        assert!(chk.margin.abs() < 1e-12 * chk.bound);
        let half = g.scaled(0.5);
        let chk = l1_lower_bound_check(&half, &cap, a, half.l2_norm()).unwrap();
        assert!(chk.holds && chk.margin > 0.1 * chk.bound);
        assert!(l1_lower_bound_check(&g, &cap, 0.5 * a, 0.0).is_err());
    }

    #[test]
    fn renormalized_ground_state_stays_near_the_unit_annulus() {
        let grid = grid();
        let r = renormalize(&g0(&grid)).unwrap();
        assert!([0.5, 1.0, 2.0].contains(&r.report.lambda));
        assert!(r.report.widened.t < 0.5);
        assert!(r.report.annulus_l2_mass > 0.3);
    }

    #[test]
    fn renormalization_undoes_dilation() {
        let grid = grid();
        let f = g0(&grid);
        let far = act_on_cone_function(&SymmetryElement::dilation(1.0 / 16.0).unwrap(), &f);
        let (a, b) = (renormalize(&f).unwrap(), renormalize(&far).unwrap());
        let ratio = b.report.lambda / a.report.lambda;
        assert!((8.0..=32.0).contains(&ratio), "{ratio}");
        let m = (b.report.annulus_l2_mass - a.report.annulus_l2_mass).abs();
        assert!(m < 0.05 * a.report.annulus_l2_mass);
    }

    #[test]
    fn thin_caps_get_boosted() {
        let grid = grid();
        let f = ConeFunction::from_real_fn(grid.clone(), |r, t| {
            let a = t.sin().atan2(t.cos());
            if (0.5..1.0).contains(&r) && a.abs() <= 0.05 {
                1.0
            } else {
                0.0
            }
        });
        let r = renormalize(&f).unwrap();
        assert!(r.report.widened.t >= (1.0f64 - 0.01).sqrt());
        assert!((r.report.widened.transformed_measure - 1.0).abs() < 1e-12);
    }
}
