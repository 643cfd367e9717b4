//! Verification suites and experiments behind the command-line tool, driven
//! by one [`LabConfig`].

use crate::caps::{
    b_form, b_form_circle, b_indicator_bound_ratio, bilinear_decay_sweep, cap_distance, cap_estimate_ratio,
    improved_exponent_constant, q_form, sweep_box, Sampled1d, Sampled2d, ALPHA, DEFAULT_DELTA,
};
use crate::cone::{annulus_bounds, cone_integral, restrict_to_cap, Cap, ConeFunction, GridSpec, RadialAngularGrid};
use crate::decomposition::{decompose, extract_cap, l1_lower_bound_check, nearly_extremal_level, DEFAULT_ENTRY_DELTA};
use crate::deficiency::{boost_deficiency_curve, deficiency_by_quadrature, uniform_integral_check};
use crate::error::{invalid, Result};
use crate::extension::closed_form_extension;
use crate::extension::{l6_norm, lp_norm_box, plan::extend_at_points, BoxSpec, ExtensionPlan, SpaceTimeBox};
use crate::family::ExtremizerParams;
use crate::quadrature::integrate_real_line;
use crate::report::{Report, Table};
use crate::row;
use crate::search::{align_to_orbit, random_positive_noise, search, SearchConfig};
use crate::sharp_constant;
use crate::symmetry::{act_on_cone_function, widen_cap, SymmetryElement};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub sharp_constant_rel: f64,
    pub closed_form_rel: f64,
    pub mass_rel: f64,
    pub mass_tail: f64,
    pub invariance_l2: f64,
    pub invariance_l6: f64,
    pub energy: f64,
    pub search_fraction: f64,
    pub orbit_distance: f64,
    pub bilinear_growth: f64,
    pub l3_constant: f64,
    pub deficiency_spread: f64,
    pub deficiency_collapse: f64,
    pub cross_check: f64,
    pub b_refinement: f64,
    pub q_identity: f64,
    pub indicator_growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sharp_constant_rel: 0.01,
            closed_form_rel: 1e-6,
            mass_rel: 0.01,
            mass_tail: 0.005,
            invariance_l2: 1e-3,
            invariance_l6: 0.01,
            energy: 1e-12,
            search_fraction: 0.99,
            orbit_distance: 0.05,
            bilinear_growth: 10.0,
            l3_constant: 10.0,
            deficiency_spread: 3.0,
            deficiency_collapse: 0.15,
            cross_check: 0.02,
            b_refinement: 0.005,
            q_identity: 1e-12,
            indicator_growth: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    /// Exponent of the extra `L^p` box norm reported by `verify-constant`.
    pub p: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { p: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantConfig {
    /// Axisymmetric box for the whole-space `L⁶` mass of `g₀`.
    pub radial_box: BoxSpec,
    /// Outer annulus of the grid used with `radial_box`.
    pub radial_k_max: i32,
    pub probe_half_width: f64,
    pub probe_points: usize,
}

impl Default for ConstantConfig {
    fn default() -> Self {
        ConstantConfig {
            radial_box: BoxSpec { radius: 150.0, half_time: 150.0, n_radial: 600, n_angular: 1, n_time: 1200 },
            radial_k_max: 5,
            probe_half_width: 3.0,
            probe_points: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetryConfig {
    pub boosts_x: Vec<f64>,
    pub boosts_y: Vec<f64>,
    pub dilations: Vec<f64>,
    pub rotations: Vec<f64>,
    pub normalized_boost: f64,
    pub cap_measures: Vec<f64>,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        SymmetryConfig {
            boosts_x: vec![0.3, -0.3, 0.7, -0.7],
            boosts_y: vec![0.5, -0.5],
            dilations: vec![0.5, 2.0],
            rotations: vec![PI / 3.0],
            normalized_boost: 0.5,
            cap_measures: vec![0.05, 0.1, 0.4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapConfig {
    pub delta: f64,
    pub fixtures: usize,
    pub seed: u64,
}

impl Default for CapConfig {
    fn default() -> Self {
        CapConfig { delta: DEFAULT_DELTA, fixtures: 10, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub n_max: usize,
    pub stop_tol: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { n_max: 8, stop_tol: crate::decomposition::DEFAULT_STOP_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSuiteConfig {
    pub runs: usize,
    #[serde(flatten)]
    pub search: SearchConfig,
}

impl Default for SearchSuiteConfig {
    fn default() -> Self {
        SearchSuiteConfig { runs: 3, search: SearchConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilinearConfig {
    pub d_max: u32,
    pub radius: f64,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        BilinearConfig { d_max: 6, radius: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeficiencyConfig {
    pub s_values: Vec<f64>,
    pub collapse_s: f64,
    pub cross_check_s: Vec<f64>,
    pub t_scan: f64,
}

impl Default for DeficiencyConfig {
    fn default() -> Self {
        DeficiencyConfig {
            s_values: vec![0.5, 0.7, 0.9, 0.99],
            collapse_s: 0.999,
            cross_check_s: vec![0.5, 0.7],
            t_scan: 50.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub grid: GridSpec,
    #[serde(rename = "box")]
    pub space_time_box: BoxSpec,
    pub norms: NormConfig,
    pub constant: ConstantConfig,
    pub symmetries: SymmetryConfig,
    pub caps: CapConfig,
    pub decompose: DecomposeConfig,
    pub search: SearchSuiteConfig,
    pub bilinear: BilinearConfig,
    pub deficiency: DeficiencyConfig,
    pub tolerances: Tolerances,
    /// Skip the box resolution check.
    pub force_nyquist: bool,
}

impl LabConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: LabConfig = toml::from_str(s).map_err(|e| crate::LabError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.norms.p >= 1.0) {
            return invalid(format!("norm exponent p = {} must be at least 1", self.norms.p));
        }
        RadialAngularGrid::new(self.grid)?;
        SpaceTimeBox::new(self.space_time_box)?;
        SpaceTimeBox::new(self.constant.radial_box)?;
        self.search.search.validate()?;
        if self.search.runs == 0 {
            return invalid("search.runs must be at least 1");
        }
        if !(self.caps.delta > 0.0 && self.caps.delta <= 2.0 / 3.0) {
            return invalid("caps.delta must lie in (0, 2/3]");
        }
        for &s in self.deficiency.s_values.iter().chain([&self.deficiency.collapse_s]) {
            if !(0.5..1.0).contains(&s) {
                return invalid(format!("deficiency s = {s} must lie in [1/2, 1)"));
            }
        }
        for &t in self.symmetries.boosts_x.iter().chain(&self.symmetries.boosts_y) {
            if !(t.abs() < 1.0) {
                return invalid(format!("boost parameter {t} must lie in (-1, 1)"));
            }
        }
        Ok(())
    }

    fn grid(&self) -> Result<Arc<RadialAngularGrid>> {
        RadialAngularGrid::shared(self.grid)
    }

    fn plan(&self, grid: &Arc<RadialAngularGrid>, spec: BoxSpec) -> Result<ExtensionPlan> {
        Ok(ExtensionPlan::new(grid.clone(), SpaceTimeBox::shared(spec)?)?.forced(self.force_nyquist))
    }
}

/// `c₀ e^{-|y|}` with `c₀ = π^{-1/2}`, unit norm in `L²(σ)`.
pub fn ground_state(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
    let c0 = PI.powf(-0.5);
    let mut f = ConeFunction::from_real_fn(grid.clone(), move |r, _| c0 * (-r).exp());
    f.set_nonnegative_flag();
    f
}

/// Flat bumps of equal `L²` mass on 8-node windows of annuli 0 and 5.
pub fn two_bump(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
    let one = ConeFunction::from_real_fn(grid.clone(), |_, _| 1.0);
    let bump = |k: i32| {
        let b = restrict_to_cap(&one, &crate::caps::window_cap(grid, k, 0, 8));
        b.scaled(0.5f64.sqrt() / b.l2_norm())
    };
    let mut f = bump(0).add(&bump(5)).expect("same grid");
    f.set_nonnegative_flag();
    f
}

/// A real extremizer with seeded parameters times a smooth angular ripple of
/// relative size 5%.
pub fn nearly_extremal_fixture(grid: &Arc<RadialAngularGrid>, seed: u64) -> ConeFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.random_range(0.8..1.25);
    let rho = rng.random_range(0.0..0.3) * a;
    let dir = rng.random_range(0.0..2.0 * PI);
    let m = rng.random_range(1..=3) as f64;
    let phase = rng.random_range(0.0..2.0 * PI);
    let p = ExtremizerParams::real(a, rho * dir.cos(), rho * dir.sin(), 0.0).expect("admissible by construction");
    let mut f =
        ConeFunction::from_real_fn(grid.clone(), move |r, t| p.value(r, t).re * (1.0 + 0.05 * (m * t + phase).cos()));
    f.set_nonnegative_flag();
    f
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Criteria on `Φ(g₀)`, the closed-form probe and the whole-space `L⁶` mass.
pub fn verify_constant(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let mut rep = Report::new("verify-constant", cfg);
    let grid = cfg.grid()?;
    let plan = cfg.plan(&grid, cfg.space_time_box)?;
    let g0 = ground_state(&grid);
    let field = plan.extend_with_tail(&g0)?;
    let norm = l6_norm(&field);
    let phi = norm.corrected() / g0.l2_norm();
    rep.output("phi_g0", phi);
    rep.output("phi_g0_box", norm.value / g0.l2_norm());
    rep.output("relative_tail", norm.relative_tail());
    rep.output("lp_norm_box", lp_norm_box(&field, cfg.norms.p)?);
    rep.check_le("sharp_constant", rel(phi, sharp_constant()), tol.sharp_constant_rel, format!("Φ(g₀) = {phi}"));

    // Closed form for e^{-r}: 2π / √((1 − it)² + |x|²).
    let e = ConeFunction::from_real_fn(grid.clone(), |r, _| (-r).exp());
    let n = cfg.constant.probe_points.max(2);
    let w = cfg.constant.probe_half_width;
    let lin = |i: usize| -w + 2.0 * w * i as f64 / (n - 1) as f64;
    let pts: Vec<[f64; 3]> = (0..n * n * n).map(|i| [lin(i % n), lin((i / n) % n), lin(i / (n * n))]).collect();
    let vals = extend_at_points(&e, &pts)?;
    let mut max_err: f64 = 0.0;
    let mut probe = Table::new("closed_form_probe", &["x1", "x2", "t", "re", "im", "rel_err"]);
    for (p, v) in pts.iter().zip(&vals) {
        let exact = radial_closed_form(1.0, [p[0], p[1]], p[2]);
        let err = (v - exact).norm() / exact.norm();
        max_err = max_err.max(err);
        probe.push(row![p[0], p[1], p[2], v.re, v.im, err]);
    }
    rep.tables.push(probe);
    rep.check_le("closed_form_probe", max_err, tol.closed_form_rel, format!("{} points", pts.len()));

    // ∭|Tg₀|⁶ = (2πc₀)⁶ ∫ π dt / (2(1+t²)).
    let c0 = PI.powf(-0.5);
    let oracle = (2.0 * PI * c0).powi(6) * integrate_real_line(|t| PI / (2.0 * (1.0 + t * t)), 1.0, 1e-14, 1e-13).0;
    rep.output("l6_mass_oracle", oracle);
    rep.check_le("l6_mass_oracle_exact", rel(oracle, (2.0 * PI).powi(5)), 1e-10, "oracle against (2π)⁵");
    let rgrid = RadialAngularGrid::shared(GridSpec { k_max: cfg.constant.radial_k_max, ..cfg.grid })?;
    let rplan = cfg.plan(&rgrid, cfg.constant.radial_box)?;
    let rfield = rplan.extend_with_tail(&ground_state(&rgrid))?;
    let rnorm = l6_norm(&rfield);
    let mass = rnorm.corrected().powi(6);
    rep.output("l6_mass_box", rnorm.value.powi(6));
    rep.output("l6_mass_corrected", mass);
    rep.output("l6_mass_relative_tail", rnorm.relative_tail());
    rep.check_le("l6_mass", rel(mass, oracle), tol.mass_rel, format!("box + tail = {mass}"));
    rep.check_le("l6_mass_tail", rnorm.relative_tail(), tol.mass_tail, "exterior share of the sixth-power mass");
    Ok(rep)
}

/// Invariance of `‖f‖₂`, `∫ f dσ` and `‖Tf‖₆` under the configured elements,
/// the `L_t` mass rule and the widened-cap measures.
pub fn verify_symmetries(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let sc = &cfg.symmetries;
    let mut rep = Report::new("verify-symmetries", cfg);
    let grid = cfg.grid()?;
    let plan = cfg.plan(&grid, cfg.space_time_box)?;
    let g0 = ground_state(&grid);
    let base_l2 = g0.l2_norm();
    let base_int = cone_integral(&g0).re;
    let base_l6 = l6_norm(&plan.extend_with_tail(&g0)?).corrected();
    let mut elements: Vec<(String, SymmetryElement, bool)> = vec![];
    for &t in &sc.boosts_x {
        elements.push((format!("boost_x({t})"), SymmetryElement::boost_x(t)?, true));
    }
    for &s in &sc.boosts_y {
        elements.push((format!("boost_y({s})"), SymmetryElement::boost_y(s)?, true));
    }
    for &l in &sc.dilations {
        elements.push((format!("dilation({l})"), SymmetryElement::dilation(l)?, false));
    }
    for &th in &sc.rotations {
        elements.push((format!("rotation({th})"), SymmetryElement::rotation(th), true));
    }
    let mut table = Table::new("invariance", &["element", "l2_rel", "integral_rel", "l6_rel"]);
    for (name, g, lorentz) in &elements {
        let h = act_on_cone_function(g, &g0);
        let l2 = rel(h.l2_norm(), base_l2);
        let l6 = rel(l6_norm(&plan.extend_with_tail(&h)?).corrected(), base_l6);
        rep.check_le(&format!("l2 {name}"), l2, tol.invariance_l2, "");
        rep.check_le(&format!("l6 {name}"), l6, tol.invariance_l6, "");
        let int = rel(cone_integral(&h).re, base_int);
        if *lorentz {
            rep.check_le(&format!("integral {name}"), int, tol.invariance_l2, "σ is Lorentz invariant");
        }
        table.push(vec![name.clone(), l2.to_string(), int.to_string(), l6.to_string()]);
    }
    rep.tables.push(table);

    let t = sc.normalized_boost;
    let h = act_on_cone_function(&SymmetryElement::normalized_boost_x(t)?, &g0);
    let expected = (1.0 - t * t).powf(-0.25) * base_int;
    rep.check_le(
        "normalized boost integral",
        rel(cone_integral(&h).re, expected),
        tol.invariance_l2,
        "(1−t²)^{-1/4} rule",
    );

    let mut widened = Table::new("widen_cap", &["measure", "t", "transformed_measure", "r_min", "r_max", "contained"]);
    for &m in &sc.cap_measures {
        let cap = Cap::new(0, -m, m)?;
        let w = widen_cap(&cap)?;
        let t_exact = (1.0 - m * m).sqrt();
        rep.check_le(&format!("widen t |cap|={m}"), (w.t - t_exact).abs(), 1e-15, "");
        rep.check_le(&format!("widen measure |cap|={m}"), (w.transformed_measure - 1.0).abs(), 1e-12, "");
        rep.check(&format!("widen image |cap|={m}"), w.contained, format!("radii {:?}", w.image_radius));
        widened.push(row![m, w.t, w.transformed_measure, w.image_radius.0, w.image_radius.1, w.contained]);
    }
    rep.tables.push(widened);
    Ok(rep)
}

/// Extraction on `g₀` and the seeded nearly-extremal fixtures.
pub fn cap_extract(cfg: &LabConfig) -> Result<Report> {
    let mut rep = Report::new("cap-extract", cfg);
    let grid = cfg.grid()?;
    let plan = cfg.plan(&grid, cfg.space_time_box)?;
    let mut table = Table::new(
        "extractions",
        &["fixture", "delta_level", "k", "theta_lo", "theta_hi", "c_meas", "threshold", "g_norm", "l1_margin"],
    );
    let g0 = ground_state(&grid);
    rep.output("cap_estimate_ratio_g0", cap_estimate_ratio(&g0, cfg.caps.delta, &plan)?);
    let fixtures: Vec<(String, ConeFunction)> = std::iter::once(("g0".to_string(), g0))
        .chain((0..cfg.caps.fixtures as u64).map(|i| {
            let seed = cfg.caps.seed + i;
            (format!("seed{seed}"), nearly_extremal_fixture(&grid, seed))
        }))
        .collect();
    for (name, f) in &fixtures {
        let level = nearly_extremal_level(f, &plan)?;
        let ex = extract_cap(f, DEFAULT_ENTRY_DELTA)?;
        let c = &ex.conditions;
        rep.check(&format!("{name} dominated"), c.dominated, "|g|, |h| <= |f|");
        rep.check(&format!("{name} disjoint"), c.disjoint, "g·h = 0");
        rep.check(&format!("{name} bounded"), c.bounded_on_cap, "|g| <= C‖f‖|cap|^{-1/2}χ_cap");
        rep.check(&format!("{name} mass"), c.mass_lower_bound, "‖g‖ >= η‖f‖");
        rep.check(&format!("{name} cap mass"), c.cap_mass && c.holder, "∫_cap g^{3/2} and Hölder");
        let norm = f.l2_norm();
        let l1 = l1_lower_bound_check(&ex.g, &ex.cap, c.big_c * norm, c.eta * norm)?;
        rep.check_ge(&format!("{name} l1 margin"), l1.margin, 0.0, "‖g‖₁ − a^{-1}b²|cap|^{1/2}");
        rep.check_le(&format!("{name} nearly extremal"), level, DEFAULT_ENTRY_DELTA, "fixture δ-level");
        table.push(vec![
            name.clone(),
            level.to_string(),
            ex.cap.k.to_string(),
            ex.cap.theta_lo.to_string(),
            ex.cap.theta_hi.to_string(),
            ex.c_meas.to_string(),
            ex.threshold.to_string(),
            ex.g.l2_norm().to_string(),
            l1.margin.to_string(),
        ]);
    }
    rep.tables.push(table);
    Ok(rep)
}

/// Greedy decomposition of the two-bump fixture, `g₀` and the seeded fixtures.
pub fn decompose_suite(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let mut rep = Report::new("decompose", cfg);
    let grid = cfg.grid()?;
    let dc = &cfg.decompose;
    let bumps = decompose(&two_bump(&grid), dc.n_max, dc.stop_tol)?;
    let mut table =
        Table::new("two_bump", &["nu", "k", "theta_lo", "theta_hi", "threshold", "piece_norm", "remainder_norm"]);
    for r in &bumps.records {
        table.push(row![r.nu, r.cap.k, r.cap.theta_lo, r.cap.theta_hi, r.threshold, r.piece_norm, r.remainder_norm]);
    }
    rep.tables.push(table);
    let distance = if bumps.caps.len() >= 2 { cap_distance(&bumps.caps[0], &bumps.caps[1]) as f64 } else { f64::NAN };
    rep.output("two_bump_records", &bumps.records);
    rep.check("two_bump leading caps", distance == 5.0, format!("distance {distance}"));

    let mut energy = Table::new("energy", &["fixture", "pieces", "relative_energy_error", "monotone"]);
    let fixtures: Vec<(String, ConeFunction)> = std::iter::once(("g0".to_string(), ground_state(&grid)))
        .chain((0..cfg.caps.fixtures as u64).map(|i| {
            let seed = cfg.caps.seed + i;
            (format!("seed{seed}"), nearly_extremal_fixture(&grid, seed))
        }))
        .collect();
    for (name, f) in &fixtures {
        let d = decompose(f, dc.n_max, dc.stop_tol)?;
        let e = f.l2_norm().powi(2);
        let err = (d.energy() - e).abs() / e;
        let norms: Vec<f64> = d.remainders.iter().map(|g| g.l2_norm()).collect();
        let monotone = norms.windows(2).all(|w| w[1] <= w[0]);
        let conditions = d.extractions.iter().all(|c| c.all());
        rep.check_le(&format!("{name} energy"), err, tol.energy, "Σ‖f_ν‖² + ‖G_N‖² = ‖f‖²");
        rep.check(&format!("{name} remainders"), monotone && conditions, "‖G_ν‖ nonincreasing, every step valid");
        energy.push(vec![name.clone(), d.pieces.len().to_string(), err.to_string(), monotone.to_string()]);
    }
    rep.tables.push(energy);
    Ok(rep)
}

/// Seeded searches from random nonnegative noise on annuli −2..=2.
pub fn search_extremizer(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let sc = &cfg.search.search;
    let mut rep = Report::new("search-extremizer", cfg);
    let grid = cfg.grid()?;
    let plan = cfg.plan(&grid, sc.space_time_box)?;
    let target = tol.search_fraction * sharp_constant();
    let mut summary = Table::new("search_summary", &["seed", "iterations", "phi", "phi_box", "converged", "distance"]);
    for run in 0..cfg.search.runs as u64 {
        let seed = sc.seed + run;
        let f0 = random_positive_noise(&grid, -2, 2, seed);
        let res = search(&f0, &plan, sc)?;
        let al = align_to_orbit(&res.f_star)?;
        let mut hist = Table::new(&format!("history_seed{seed}"), &["iter", "phi", "phi_box", "step", "renormalized"]);
        for h in &res.history {
            hist.push(row![h.iter, h.phi, h.phi_box, h.step, h.renormalized]);
        }
        rep.tables.push(hist);
        // Monotone up to tol between consecutive ascent steps.
        let monotone =
            res.history.windows(2).all(|w| w[1].renormalized || w[1].phi_box >= w[0].phi_box * (1.0 - sc.tol));
        rep.check_ge(&format!("seed{seed} phi"), res.phi.corrected, target, format!("{} iterations", res.iterations));
        rep.check_le(
            &format!("seed{seed} orbit distance"),
            al.distance,
            tol.orbit_distance,
            format!("(s, t, λ) = {:?}", al.params),
        );
        rep.check(&format!("seed{seed} history"), monotone, "box Φ nondecreasing up to tol");
        rep.output(&format!("seed{seed}_fit"), &al.fit);
        summary.push(row![seed, res.iterations, res.phi.corrected, res.phi.in_box, res.converged, al.distance]);
    }
    rep.tables.push(summary);
    Ok(rep)
}

/// Smooth radial profile on `[1/2, 1)`.
pub fn sweep_profile(u: f64) -> f64 {
    (PI * (2.0 * u - 1.0)).sin().powi(2)
}

/// Bilinear decay sweep and the dyadic `ℓ³` constant on a three-annulus function.
pub fn bilinear_decay(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let bc = &cfg.bilinear;
    let mut rep = Report::new("bilinear-decay", cfg);
    let grid = cfg.grid()?;
    let sweep = bilinear_decay_sweep(&sweep_profile, bc.d_max, &grid, bc.radius)?;
    let mut table = Table::new("bilinear", &["d", "ratio", "normalized_ratio"]);
    for r in &sweep.rows {
        table.push(row![r.d, r.ratio, r.normalized_ratio]);
    }
    rep.tables.push(table);
    rep.check("sweep complete", sweep.truncated_at.is_none(), format!("truncated at {:?}", sweep.truncated_at));
    if let Some(first) = sweep.rows.first() {
        let c2 = sharp_constant().powi(2);
        rep.check_le("d = 0 ratio", first.ratio, c2 * 1.02, "‖Tf‖₆²/‖f‖₂² <= (2π)^{5/3}");
        let worst = sweep.rows.iter().map(|r| r.normalized_ratio).fold(0.0, f64::max);
        rep.check_le(
            "normalized growth",
            worst / first.normalized_ratio,
            tol.bilinear_growth,
            "max_d ratio·2^{d/6} / ratio(0)",
        );
    }
    let weights = [(0, 1.0), (2, 0.7), (4, 0.5)];
    let f = ConeFunction::from_real_fn(grid.clone(), move |r, _| {
        weights
            .iter()
            .map(|&(k, w)| {
                let (lo, hi) = annulus_bounds(k);
                if r >= lo && r < hi {
                    w * sweep_profile(r / 2f64.powi(k))
                } else {
                    0.0
                }
            })
            .sum()
    });
    let plan = cfg.plan(&grid, sweep_box(bc.radius, 4))?;
    let c = improved_exponent_constant(&f, &plan)?;
    rep.output("l3_constant", c);
    rep.check_le("l3 constant", c, tol.l3_constant, "‖Tf‖₆ / (Σ‖f_k‖₂³)^{1/3}");
    Ok(rep)
}

/// `D(s)` for boosted ground states, the uniform integral and the quadrature cross-check.
pub fn boost_deficiency(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let dc = &cfg.deficiency;
    let mut rep = Report::new("boost-deficiency", cfg);
    let mut s_all = dc.s_values.clone();
    for s in [0.5, dc.collapse_s] {
        if !s_all.contains(&s) {
            s_all.push(s);
        }
    }
    s_all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows = boost_deficiency_curve(&s_all)?;
    let mut table = Table::new("deficiency", &["s", "D", "sqrt_bound_ratio"]);
    for r in &rows {
        table.push(row![r.s, r.d, r.sqrt_bound_ratio]);
    }
    rep.tables.push(table);
    let at = |s: f64| rows.iter().find(|r| r.s == s).expect("s was added");
    let sweep: Vec<f64> = dc.s_values.iter().map(|&s| at(s).sqrt_bound_ratio).collect();
    let spread = sweep.iter().cloned().fold(0.0, f64::max) / sweep.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.check_le("sqrt bound spread", spread, tol.deficiency_spread, "max/min of D(s)/√(1−s²)");
    let collapse = at(dc.collapse_s).d / at(0.5).d;
    rep.check_le("collapse", collapse, tol.deficiency_collapse, format!("D({})/D(0.5)", dc.collapse_s));
    let monotone = rows.windows(2).all(|w| w[1].d <= w[0].d);
    rep.check("monotone", monotone, "D nonincreasing on the sampled s");
    rep.check("t scans converged", rows.iter().all(|r| r.converged), "");

    let ts: Vec<f64> = (0..=200).map(|i| -dc.t_scan + dc.t_scan * i as f64 / 100.0).collect();
    let mut uniform = Table::new("uniform_integral", &["s", "max", "t_argmax", "near_zero_max"]);
    for s in [0.5, 1.0] {
        let chk = uniform_integral_check(s, &ts)?;
        let near = chk.values.iter().filter(|v| v.0.abs() <= 1.0).map(|v| v.1).fold(0.0, f64::max);
        rep.check("uniform integral finite", chk.finite, format!("s = {s}"));
        rep.check_le(&format!("uniform integral s={s}"), chk.max / near, 2.0, "max over t against |t| <= 1");
        uniform.push(row![s, chk.max, chk.t_argmax, near]);
    }
    rep.tables.push(uniform);

    let grid = cfg.grid()?;
    let plan = cfg.plan(&grid, cfg.space_time_box)?;
    let mut cross = Table::new("cross_check", &["s", "analytic", "quadrature", "rel"]);
    for &s in &dc.cross_check_s {
        let analytic = boost_deficiency_curve(&[s])?[0].d;
        let quad = deficiency_by_quadrature(s, &plan)?;
        let r = rel(quad, analytic);
        rep.check_le(&format!("cross check s={s}"), r, tol.cross_check, "");
        cross.push(row![s, analytic, quad, r]);
    }
    rep.tables.push(cross);
    Ok(rep)
}

/// Seeded unit intervals separated by gaps drawn from `[2, 20]`.
pub fn scattered_intervals(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            let iv = (x, x + 1.0);
            x += 1.0 + rng.random_range(2.0..20.0);
            iv
        })
        .collect()
}

/// The fractional-integration forms `B`, `Q` and the indicator bound.
pub fn b_forms(cfg: &LabConfig) -> Result<Report> {
    let tol = &cfg.tolerances;
    let mut rep = Report::new("b-forms", cfg);
    let mut refine = Table::new("b_refinement", &["cells", "b", "rel_err"]);
    let mut prev: Option<f64> = None;
    for n in [16, 32, 64, 128, 256] {
        let one = Sampled1d::from_fn(0.0, 1.0, n, |_| 1.0)?;
        let b = b_form(&one, &one, ALPHA)?;
        let err = rel(b, 8.0 / 3.0);
        rep.check_le(&format!("B unit interval n={n}"), err, tol.b_refinement, "");
        if let Some(p) = prev {
            rep.check_le(&format!("B refinement n={n}"), rel(b, p), tol.b_refinement, "change on doubling");
        }
        prev = Some(b);
        refine.push(row![n, b, err]);
    }
    rep.tables.push(refine);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.caps.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let vals: Vec<f64> = (0..6 * 40).map(|_| rng.random::<f64>()).collect();
        let f = Sampled2d::from_fn((0.5, 1.0, 6), (0.0, 2.0, 40), |r, x| {
            let i = (((r - 0.5) / 0.5) * 6.0) as usize;
            let j = ((x / 2.0) * 40.0) as usize;
            vals[i.min(5) * 40 + j.min(39)]
        })?;
        let q = q_form(&f, &f, ALPHA)?;
        let m = f.marginal();
        worst = worst.max(rel(q, b_form(&m, &m, ALPHA)?));
    }
    rep.check_le("Q identity", worst, tol.q_identity, "Q(f,f) = B(∫f dr, ∫f dr) on 5 seeded f");

    let one = vec![1.0; 64];
    let circ = b_form_circle(&one, &one, ALPHA)?;
    let oracle = 2.0 * PI * 2.0 * beta_quarter_half();
    rep.output("circle_constant", circ);
    rep.check_le("circle constant", rel(circ, oracle), 1e-8, "2π∫₀^{2π}|sin u|^{-1/2}du");

    let mut ind = Table::new("indicator_bound", &["n", "measure", "b", "sup_ratio", "ratio"]);
    let mut ratios = vec![];
    for n in [4, 8, 16] {
        let e = scattered_intervals(n, cfg.caps.seed + n as u64);
        let r = b_indicator_bound_ratio(&e, ALPHA, 0.25)?;
        ind.push(row![n, n, r.b_value, r.sup_ratio, r.ratio]);
        ratios.push(r.ratio);
    }
    rep.tables.push(ind);
    let growth = ratios.iter().cloned().fold(0.0, f64::max) / ratios[0];
    rep.check("indicator ratio finite", ratios.iter().all(|r| r.is_finite()), format!("{ratios:?}"));
    rep.check_le("indicator ratio growth", growth, tol.indicator_growth, "max over N of ratio / ratio(N = 4)");
    Ok(rep)
}

/// `∫₀^π |sin u|^{-1/2} du = B(1/4, 1/2)`, from `Γ(1/4)√π / Γ(3/4)`.
fn beta_quarter_half() -> f64 {
    const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;
    const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_178;
    GAMMA_QUARTER * PI.sqrt() / GAMMA_THREE_QUARTERS
}

/// Closed form of `T(c₀e^{-r})` at one point.
fn radial_closed_form(c0: f64, x: [f64; 2], t: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    closed_form_extension(Complex64::new(1.0, 0.0), [zero, zero], Complex64::new(c0.ln(), 0.0), x, t)
}
