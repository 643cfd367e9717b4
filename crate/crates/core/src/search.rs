//! Ascent on `Φ(f) = ‖Tf‖₆/‖f‖₂` over nonnegative cone functions, and
//! alignment of the result with the orbit of `g₀`.

use crate::cone::{annulus_bounds, ConeFunction};
use crate::decomposition::renormalize;
use crate::error::{invalid, LabError, Result};
use crate::extension::{l6_norm, BoxSpec, ExtensionPlan, SpaceTimeField};
use crate::family::{fit_extremizer, OrbitFit};
use crate::symmetry::{act_on_cone_function, SymmetryElement};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub max_iter: usize,
    /// Initial mixing weight of the ascent direction.
    pub step: f64,
    pub renorm_every: usize,
    /// Stop once `renorm_every` steps raise the corrected `Φ` by less than
    /// `tol·Φ`; also the allowed drop of the box `Φ` in backtracking.
    pub tol: f64,
    pub space_time_box: BoxSpec,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iter: 500,
            step: 1.0,
            renorm_every: 10,
            tol: 1e-4,
            space_time_box: BoxSpec::default(),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.renorm_every == 0 {
            return invalid("max_iter and renorm_every must be at least 1");
        }
        if !(self.step >= 0.0 && self.step <= 1.0) {
            return invalid(format!("step {} must lie in [0, 1]", self.step));
        }
        if !(self.tol > 0.0) {
            return invalid("tol must be positive");
        }
        Ok(())
    }
}

/// `Φ` measured two ways: on the box alone, and with the estimated exterior
/// `L⁶` mass added back.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rayleigh {
    pub in_box: f64,
    pub corrected: f64,
}

fn nonzero_norm(f: &ConeFunction) -> Result<f64> {
    let n = f.l2_norm();
    if n == 0.0 || !n.is_finite() {
        return invalid("Φ is undefined for f = 0");
    }
    Ok(n)
}

pub fn rayleigh_quotient(f: &ConeFunction, plan: &ExtensionPlan) -> Result<Rayleigh> {
    let n = nonzero_norm(f)?;
    let rep = l6_norm(&plan.extend_with_tail(f)?);
    Ok(Rayleigh { in_box: rep.value / n, corrected: rep.corrected() / n })
}

#[derive(Clone, Debug)]
pub struct AscentStep {
    /// Unit-norm iterate.
    pub f: ConeFunction,
    pub phi_before: f64,
    /// Box value of `Φ` at the new iterate.
    pub phi_after: f64,
    pub step_used: f64,
    pub stagnated: bool,
    field: SpaceTimeField,
}

/// Largest radius kept by the ascent: `0.75π` over the widest box gap.
/// Content beyond it aliases on the box and would let the discrete `Φ`
/// exceed the continuum one.
pub fn band_limit(plan: &ExtensionPlan) -> f64 {
    0.75 * PI / plan.space_time_box().max_spacing()
}

fn band_limited(f: &ConeFunction, r_cut: f64) -> ConeFunction {
    let grid = f.grid();
    let mask: Vec<bool> = (0..grid.len()).map(|i| grid.node(i).0 <= r_cut).collect();
    let mut out = f.masked(&mask);
    if f.is_nonnegative() {
        out.set_nonnegative_flag();
    }
    out
}

fn box_phi(field: &SpaceTimeField) -> f64 {
    field.power_integral(6.0).powf(1.0 / 6.0)
}

fn ascent_from(
    u: ConeFunction,
    field: SpaceTimeField,
    plan: &ExtensionPlan,
    step: f64,
    tol: f64,
) -> Result<AscentStep> {
    let phi0 = box_phi(&field);
    let unchanged = |u: ConeFunction, field: SpaceTimeField, stagnated| AscentStep {
        f: u,
        phi_before: phi0,
        phi_after: phi0,
        step_used: 0.0,
        stagnated,
        field,
    };
    if step == 0.0 {
        return Ok(unchanged(u, field, false));
    }
    let g: Vec<Complex64> = field.samples().iter().map(|z| z * z.norm_sqr() * z.norm_sqr()).collect();
    let gf = SpaceTimeField::new(field.space_time_box().clone(), g)?;
    let w = band_limited(&plan.adjoint(&gf)?.map(|z| Complex64::new(z.re, 0.0)), band_limit(plan));
    let wn = w.l2_norm();
    if wn == 0.0 {
        return Ok(unchanged(u, field, true));
    }
    let mut s = step;
    for _ in 0..=20 {
        let cand = u.linear_combination(1.0 - s, &w, s / wn)?.positive_part();
        let cn = cand.l2_norm();
        if cn > 0.0 {
            let cand = cand.scaled(1.0 / cn);
            let cf = plan.extend_unchecked(&cand);
            let phi1 = box_phi(&cf);
            if phi1 >= phi0 * (1.0 - tol) {
                return Ok(AscentStep {
                    f: cand,
                    phi_before: phi0,
                    phi_after: phi1,
                    step_used: s,
                    stagnated: false,
                    field: cf,
                });
            }
        }
        s *= 0.5;
    }
    Ok(unchanged(u, field, true))
}

/// `f' = ((1−s)f/‖f‖₂ + s W/‖W‖₂)₊` with `W = T*(|Tf|⁴Tf)` cut to
/// [`band_limit`], halving `s` (at most 20 times) until the box value of `Φ`
/// does not drop by more than `tol`.
pub fn ascent_step(f: &ConeFunction, plan: &ExtensionPlan, step: f64, tol: f64) -> Result<AscentStep> {
    if !(0.0..=1.0).contains(&step) {
        return invalid(format!("step {step} must lie in [0, 1]"));
    }
    let n = nonzero_norm(f)?;
    let u = f.scaled(1.0 / n);
    let field = plan.extend(&u)?;
    ascent_from(u, field, plan, step, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    /// Tail-corrected `Φ`.
    pub phi: f64,
    pub phi_box: f64,
    pub step: f64,
    pub renormalized: bool,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub f_star: ConeFunction,
    pub phi: Rayleigh,
    pub history: Vec<HistoryRow>,
    pub converged: bool,
    pub stagnated: bool,
    pub iterations: usize,
}

/// Repeated [`ascent_step`], renormalizing every `renorm_every` iterations.
/// Convergence is judged per window of `renorm_every` steps on the corrected
/// `Φ`: the box value alone keeps creeping through scale drift that each
/// renormalization undoes. Stagnation is reported in the result.
pub fn search(f0: &ConeFunction, plan: &ExtensionPlan, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    if f0.samples().iter().any(|z| z.im != 0.0 || z.re < 0.0) {
        return invalid("search starts from a nonnegative real function");
    }
    let n = nonzero_norm(f0)?;
    let mut u = band_limited(f0, band_limit(plan));
    let un = u.l2_norm();
    if un < 1e-3 * n {
        return invalid("initial function has no content the box resolves");
    }
    u = u.scaled(1.0 / un);
    u.set_nonnegative_flag();
    let mut field = plan.extend(&u)?;
    let mut history = Vec::new();
    let corrected = |u: &ConeFunction, field: &SpaceTimeField| {
        let tail = crate::extension::tail::fitted_tail(u, field);
        (field.power_integral(6.0) + tail.sixth_power_mass).powf(1.0 / 6.0)
    };
    history.push(HistoryRow {
        iter: 0,
        phi: corrected(&u, &field),
        phi_box: box_phi(&field),
        step: 0.0,
        renormalized: false,
    });
    let (mut converged, mut stagnated) = (false, false);
    let mut step = config.step;
    let mut iterations = 0;
    let mut window_start = history[0].phi;
    for iter in 1..=config.max_iter {
        iterations = iter;
        let out = ascent_from(u, field, plan, step, config.tol)?;
        u = out.f;
        field = out.field;
        if out.stagnated {
            stagnated = true;
            history.push(HistoryRow {
                iter,
                phi: corrected(&u, &field),
                phi_box: out.phi_after,
                step: 0.0,
                renormalized: false,
            });
            break;
        }
        // Resume from a doubled step so backtracking does not ratchet it down.
        step = (2.0 * out.step_used).min(config.step);
        let mut renormalized = false;
        if iter % config.renorm_every == 0 {
            let r = renormalize(&u)?;
            if r.element != SymmetryElement::identity() {
                let fu = band_limited(&r.f_tilde, band_limit(plan));
                let fu = fu.scaled(1.0 / fu.l2_norm());
                if let Ok(ff) = plan.extend(&fu) {
                    u = fu;
                    field = ff;
                    renormalized = true;
                }
            }
        }
        let phi_box = box_phi(&field);
        let phi = corrected(&u, &field);
        history.push(HistoryRow { iter, phi, phi_box, step: out.step_used, renormalized });
        if iter % config.renorm_every == 0 {
            if phi - window_start < config.tol * phi {
                converged = true;
                break;
            }
            window_start = phi;
        }
    }
    let phi = rayleigh_quotient(&u, plan)?;
    Ok(SearchResult { f_star: u, phi, history, converged, stagnated, iterations })
}

/// `g(s, t, λ) = L^t ∘ M^s ∘ D_λ` in pullback order.
pub fn alignment_element(s: f64, t: f64, lambda: f64) -> Result<SymmetryElement> {
    Ok(SymmetryElement::boost_x(t)?.compose(&SymmetryElement::boost_y(s)?).compose(&SymmetryElement::dilation(lambda)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Alignment {
    pub element: SymmetryElement,
    /// `(s, t, λ)`.
    pub params: (f64, f64, f64),
    /// `‖g*f/‖f‖₂ − g₀/‖g₀‖₂‖₂`.
    pub distance: f64,
    pub fit: Option<OrbitFit>,
    pub evaluations: usize,
}

/// Minimizes `‖g*f − g₀‖₂` over `g(s, t, λ)` by coordinate descent from the
/// inverse of the fitted orbit element (or the identity when the fit fails).
pub fn align_to_orbit(f: &ConeFunction) -> Result<Alignment> {
    let n = nonzero_norm(f)?;
    let u = f.scaled(1.0 / n);
    let grid = f.grid().clone();
    let g0 = ConeFunction::from_real_fn(grid, |r, _| (-r).exp() / PI.sqrt());
    let g0 = g0.scaled(1.0 / g0.l2_norm());
    let fit = fit_extremizer(&u.abs()).ok();
    let start = match fit.as_ref().and_then(|fit| fit.orbit) {
        Some((s, t, r)) => [-s, -t, -r.ln()],
        None => [0.0, 0.0, 0.0],
    };
    let evaluations = std::cell::Cell::new(0usize);
    let dist = |p: &[f64; 3]| -> f64 {
        evaluations.set(evaluations.get() + 1);
        if p[0].abs() >= 0.99 || p[1].abs() >= 0.99 || p[2].abs() > 8.0 {
            return f64::INFINITY;
        }
        let g = alignment_element(p[0], p[1], p[2].exp()).expect("parameters checked");
        act_on_cone_function(&g, &u).sub(&g0).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY)
    };
    let mut p = start;
    let mut best = dist(&p);
    for origin in [[0.0; 3], start] {
        let d = dist(&origin);
        if d < best {
            best = d;
            p = origin;
        }
    }
    let mut h = 0.1;
    while h > 1e-5 {
        let mut improved = false;
        for axis in 0..3 {
            for dir in [1.0, -1.0] {
                loop {
                    let mut q = p;
                    q[axis] += dir * h;
                    let d = dist(&q);
                    if d < best {
                        best = d;
                        p = q;
                        improved = true;
                    } else {
                        break;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
        if evaluations.get() > 5000 {
            return Err(LabError::InvalidParameter("orbit alignment did not settle".into()));
        }
    }
    let element = alignment_element(p[0], p[1], p[2].exp())?;
    Ok(Alignment { element, params: (p[0], p[1], p[2].exp()), distance: best, fit, evaluations: evaluations.get() })
}

/// Seeded nonnegative noise on the annuli `k ∈ [k_lo, k_hi]`.
pub fn random_positive_noise(
    grid: &std::sync::Arc<crate::RadialAngularGrid>,
    k_lo: i32,
    k_hi: i32,
    seed: u64,
) -> ConeFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (annulus_bounds(k_lo).0, annulus_bounds(k_hi).1);
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x: f64 = rng.random();
            let r = grid.node(i).0;
            if r >= lo && r < hi {
                x
            } else {
                0.0
            }
        })
        .collect();
    let mut f = ConeFunction::from_real(grid.clone(), vals).expect("grid-sized");
    f.set_nonnegative_flag();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{GridSpec, RadialAngularGrid};
    use crate::extension::SpaceTimeBox;
    use std::sync::Arc;

    fn setup() -> (Arc<RadialAngularGrid>, ExtensionPlan) {
        let grid = RadialAngularGrid::shared(GridSpec { k_min: -10, k_max: 5, n_r: 12, n_theta: 32 }).unwrap();
        let bx =
            SpaceTimeBox::shared(BoxSpec { radius: 12.0, half_time: 12.0, n_radial: 48, n_angular: 64, n_time: 96 })
                .unwrap();
        let plan = ExtensionPlan::new(grid.clone(), bx).unwrap();
        (grid, plan)
    }

    fn g0(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
        ConeFunction::from_real_fn(grid.clone(), |r, _| (-r).exp() / PI.sqrt())
    }

    #[test]
    fn zero_step_only_normalizes() {
        let (grid, plan) = setup();
        let f = g0(&grid).scaled(3.0);
        let s = ascent_step(&f, &plan, 0.0, 1e-9).unwrap();
        assert!(s.f.sub(&f.scaled(1.0 / f.l2_norm())).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn ground_state_is_nearly_fixed() {
        // Radial iterates stay radial, so a long axisymmetric box can keep
        // the truncated |Tf|⁴Tf close to the whole-space one.
        let (grid, _) = setup();
        let bx = SpaceTimeBox::shared(BoxSpec {
            radius: 150.0,
            half_time: 150.0,
            n_radial: 600,
            n_angular: 1,
            n_time: 1200,
        })
        .unwrap();
        let plan = ExtensionPlan::new(grid.clone(), bx).unwrap();
        let f = g0(&grid);
        let s = ascent_step(&f, &plan, 1.0, 1e-9).unwrap();
        let u = f.scaled(1.0 / f.l2_norm());
        assert!(s.f.sub(&u).unwrap().l2_norm() <= 0.02);
    }

    #[test]
    fn bumps_improve_on_the_first_step() {
        let (grid, plan) = setup();
        let f =
            ConeFunction::from_real_fn(grid.clone(), |r, t| (-2.0 * r + r * t.cos()).exp() * (1.0 + t.sin().powi(2)));
        let s = ascent_step(&f, &plan, 1.0, 1e-9).unwrap();
        assert!(s.phi_after > s.phi_before);
    }

    #[test]
    fn rayleigh_is_scale_invariant_and_rejects_zero() {
        let (grid, plan) = setup();
        let f = g0(&grid);
        let a = rayleigh_quotient(&f, &plan).unwrap();
        let b = rayleigh_quotient(&f.scaled(3.0), &plan).unwrap();
        assert!((a.corrected - b.corrected).abs() < 1e-12 * a.corrected);
        assert!(rayleigh_quotient(&ConeFunction::zeros(grid), &plan).is_err());
    }

    #[test]
    fn boosted_ground_state_aligns_back() {
        let grid = RadialAngularGrid::shared(GridSpec::default()).unwrap();
        let f = act_on_cone_function(&SymmetryElement::boost_x(0.5).unwrap(), &g0(&grid));
        let al = align_to_orbit(&f).unwrap();
        assert!(al.distance <= 1e-2, "{}", al.distance);
        assert!((al.params.1 + 0.5).abs() < 1e-2, "{:?}", al.params);
        let al = align_to_orbit(&g0(&grid)).unwrap();
        assert!(al.distance < 1e-6);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert!(SearchConfig { renorm_every: 0, ..Default::default() }.validate().is_err());
        assert!(SearchConfig { step: 1.5, ..Default::default() }.validate().is_err());
    }
}
