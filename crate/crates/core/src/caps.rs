//! Fractional-integration forms, the cap functional and the bilinear sweep.

use crate::cone::{Cap, ConeFunction, RadialAngularGrid};
use crate::error::{invalid, Result};
use crate::extension::{l6_norm, product_l3_norm, BoxSpec, ExtensionPlan, SpaceTimeBox, PANEL_ORDER};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Kernel exponent of the forms `B` and `Q`.
pub const ALPHA: f64 = 0.5;
/// `p = 2/(2 − α)`.
pub const P_EXPONENT: f64 = 4.0 / 3.0;
pub const DEFAULT_DELTA: f64 = 0.1;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("α = {alpha} must lie in (0, 1)"));
    }
    Ok(())
}

/// Second antiderivative of `|z|^{-α}`.
fn second_antiderivative(z: f64, alpha: f64) -> f64 {
    z.abs().powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha))
}

/// `∫_a^b ∫_c^d |x − y|^{-α} dy dx`, exact.
pub fn interval_pair_integral(a: f64, b: f64, c: f64, d: f64, alpha: f64) -> f64 {
    let f = |z| second_antiderivative(z, alpha);
    f(b - c) - f(b - d) - f(a - c) + f(a - d)
}

/// Piecewise-constant samples on equal cells of `[start, start + h·n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampled1d {
    pub start: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl Sampled1d {
    pub fn new(start: f64, end: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(end > start) {
            return invalid("need a nonempty interval and at least one cell");
        }
        Ok(Sampled1d { start, h: (end - start) / values.len() as f64, values })
    }
    pub fn from_fn(start: f64, end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (end - start) / n as f64;
        Self::new(start, end, (0..n).map(|i| f(start + (i as f64 + 0.5) * h)).collect())
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.h).powf(1.0 / p)
    }
    fn same_cells(&self, other: &Sampled1d) -> Result<()> {
        let tol = 1e-12 * (self.h.abs() + self.start.abs());
        if self.len() != other.len() || (self.h - other.h).abs() > tol || (self.start - other.start).abs() > tol {
            return invalid("B forms need both functions on the same cells");
        }
        Ok(())
    }
}

/// `κ(n) = ∫₀¹∫₀¹ |n + u − v|^{-α} du dv`, the cell-pair weight at offset `n`.
fn cell_weight(n: i64, alpha: f64) -> f64 {
    let f = |z: f64| second_antiderivative(z, alpha);
    let n = n as f64;
    f(n + 1.0) - 2.0 * f(n) + f(n - 1.0)
}

/// `B(g, h) = ∬ g(x) h(x') |x − x'|^{-α} dx dx'` for piecewise-constant samples,
/// every cell pair integrated exactly.
pub fn b_form(g: &Sampled1d, h: &Sampled1d, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    g.same_cells(h)?;
    let n = g.len();
    let kappa: Vec<f64> = (0..n as i64).map(|d| cell_weight(d, alpha)).collect();
    let mut total = 0.0;
    for (i, gi) in g.values.iter().enumerate() {
        if *gi == 0.0 {
            continue;
        }
        let s: f64 = h.values.iter().enumerate().map(|(j, hj)| hj * kappa[i.abs_diff(j)]).sum();
        total += gi * s;
    }
    Ok(total * g.h.powf(2.0 - alpha))
}

/// `∫ φ(w)|sin w|^{-α} dw` over `[a, b]`, with the singular points `kπ` inside
/// removed by the substitution `w − kπ = ±s^{1/(1−α)}`.
fn integrate_sine_kernel(phi: &dyn Fn(f64) -> f64, a: f64, b: f64, alpha: f64) -> f64 {
    let mut cuts = vec![a, b];
    let k0 = (a / PI).ceil() as i64;
    let k1 = (b / PI).floor() as i64;
    for k in k0..=k1 {
        cuts.push(k as f64 * PI);
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let q = 1.0 / (1.0 - alpha);
    let (nodes, weights) = gauss_legendre(24, 0.0, 1.0);
    let singular = |w: f64| (w / PI - (w / PI).round()).abs() < 1e-14;
    let kernel = |w: f64| phi(w) * w.sin().abs().powf(-alpha);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        // Each half has at most one singular endpoint, at its outer edge.
        for (edge, inner) in [(lo, mid), (hi, mid)] {
            let len = (inner - edge).abs();
            let dir = (inner - edge).signum();
            if singular(edge) {
                let smax = len.powf(1.0 / q);
                for (x, w) in nodes.iter().zip(&weights) {
                    let s = x * smax;
                    let wv = edge + dir * s.powf(q);
                    total += w * smax * q * s.powf(q - 1.0) * kernel(wv);
                }
            } else {
                for (x, w) in nodes.iter().zip(&weights) {
                    total += w * len * kernel(edge + dir * x * len);
                }
            }
        }
    }
    total
}

/// `∬ g(θ) h(θ') |sin(θ − θ')|^{-α} dθ dθ'` over `[0, 2π]²` for
/// piecewise-constant samples on `n` equal cells.
pub fn b_form_circle(g: &[f64], h: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if g.len() != h.len() || g.is_empty() {
        return invalid("circle B form needs equal, nonempty samplings");
    }
    let n = g.len();
    let dt = 2.0 * PI / n as f64;
    // Cell pair at offset d: ∫_{-Δ}^{Δ} (Δ − |w|) |sin(dΔ + w)|^{-α} dw.
    let kappa: Vec<f64> = (0..n)
        .map(|d| {
            let c = d as f64 * dt;
            let tri = move |w: f64| (dt - (w - c).abs()).max(0.0);
            integrate_sine_kernel(&tri, c - dt, c, alpha) + integrate_sine_kernel(&tri, c, c + dt, alpha)
        })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        if g[i] == 0.0 {
            continue;
        }
        let s: f64 = (0..n).map(|j| h[j] * kappa[(i + n - j) % n]).sum();
        total += g[i] * s;
    }
    Ok(total)
}

/// `B(χ_E, χ_E)` against `‖χ_E‖_p² (sup_I |E∩I|/(|E|+|I|))^γ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndicatorBoundReport {
    pub b_value: f64,
    pub lp_norm_sq: f64,
    /// Largest `|E∩I|/(|E|+|I|)` over the candidate family (a lower bound of the true sup).
    pub sup_ratio: f64,
    pub best_interval: (f64, f64),
    pub candidates: usize,
    pub ratio: f64,
}

/// The candidate intervals are all `[a, b]` with `a` a left endpoint and `b`
/// a right endpoint of a component of `E`, plus each component widened
/// symmetrically by factors `2^j`, `j = 1..=8`.
pub fn b_indicator_bound_ratio(e: &[(f64, f64)], alpha: f64, gamma: f64) -> Result<IndicatorBoundReport> {
    check_alpha(alpha)?;
    if !(gamma > 0.0 && gamma < alpha.min(1.0 - alpha)) {
        return invalid(format!("γ = {gamma} must lie in (0, min(α, 1−α))"));
    }
    let mut comps: Vec<(f64, f64)> = e.iter().cloned().filter(|(a, b)| b > a).collect();
    if comps.is_empty() {
        return invalid("E must have positive measure");
    }
    comps.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    for w in comps.windows(2) {
        if w[1].0 < w[0].1 {
            return invalid("components of E must be disjoint");
        }
    }
    let measure: f64 = comps.iter().map(|(a, b)| b - a).sum();
    let mut b_value = 0.0;
    for &(a, b) in &comps {
        for &(c, d) in &comps {
            b_value += interval_pair_integral(a, b, c, d, alpha);
        }
    }
    let overlap = |lo: f64, hi: f64| -> f64 { comps.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum() };
    let mut best = (0.0, (0.0, 0.0));
    let mut candidates = 0usize;
    let mut consider = |lo: f64, hi: f64| {
        if hi <= lo {
            return;
        }
        candidates += 1;
        let v = overlap(lo, hi) / (measure + hi - lo);
        if v > best.0 {
            best = (v, (lo, hi));
        }
    };
    for &(a, _) in &comps {
        for &(_, b) in &comps {
            consider(a, b);
        }
    }
    for &(a, b) in &comps {
        let (c, half) = (0.5 * (a + b), 0.5 * (b - a));
        for j in 1..=8 {
            let w = half * 2f64.powi(j);
            consider(c - w, c + w);
        }
    }
    let p = 2.0 / (2.0 - alpha);
    let lp_norm_sq = measure.powf(2.0 / p);
    let ratio = b_value / (lp_norm_sq * best.0.powf(gamma));
    Ok(IndicatorBoundReport { b_value, lp_norm_sq, sup_ratio: best.0, best_interval: best.1, candidates, ratio })
}

/// Piecewise-constant samples on an `(r, x)` rectangle, `values[ir][ix]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampled2d {
    pub r_start: f64,
    pub dr: f64,
    pub x: Sampled1d,
    pub values: Vec<Vec<f64>>,
}

impl Sampled2d {
    pub fn from_fn(r: (f64, f64, usize), x: (f64, f64, usize), f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let dr = (r.1 - r.0) / r.2 as f64;
        let hx = (x.1 - x.0) / x.2 as f64;
        let values: Vec<Vec<f64>> = (0..r.2)
            .map(|i| (0..x.2).map(|j| f(r.0 + (i as f64 + 0.5) * dr, x.0 + (j as f64 + 0.5) * hx)).collect())
            .collect();
        let x = Sampled1d::new(x.0, x.1, vec![0.0; x.2])?;
        Ok(Sampled2d { r_start: r.0, dr, x, values })
    }

    /// `∫ f(r, x) dr`.
    pub fn marginal(&self) -> Sampled1d {
        let mut m = self.x.clone();
        for (j, v) in m.values.iter_mut().enumerate() {
            *v = self.values.iter().map(|row| row[j]).sum::<f64>() * self.dr;
        }
        m
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().flatten().map(|v| v.abs().powf(p)).sum();
        (s * self.dr * self.x.h).powf(1.0 / p)
    }
}

/// `Q(f, g) = ∫ f(r, x) g(r', x') |x − x'|^{-α} dx dx' dr dr'`, summed cell by cell.
pub fn q_form(f: &Sampled2d, g: &Sampled2d, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    f.x.same_cells(&g.x)?;
    let n = f.x.len();
    let kappa: Vec<f64> = (0..n as i64).map(|d| cell_weight(d, alpha)).collect();
    let scale = f.x.h.powf(2.0 - alpha) * f.dr * g.dr;
    let mut total = 0.0;
    for row_f in &f.values {
        for row_g in &g.values {
            let mut s = 0.0;
            for (i, a) in row_f.iter().enumerate() {
                for (j, b) in row_g.iter().enumerate() {
                    s += a * b * kappa[i.abs_diff(j)];
                }
            }
            total += s;
        }
    }
    Ok(total * scale)
}

/// `Q(f,f) / (2^{2k(1−1/p)} ‖f‖_p^{2−δ} (sup_cap |cap|^{−1+1/p} ∫_cap |f|)^δ)`
/// for `f` supported in `2^{k−1} <= r < 2^k`. The sup runs over grid-aligned
/// `x`-windows of dyadic cell counts.
pub fn q_bound_ratio(f: &Sampled2d, k: i32, delta: f64) -> Result<f64> {
    let p = P_EXPONENT;
    let q = q_form(f, f, ALPHA)?;
    let m = f.marginal();
    let abs_m: Vec<f64> = {
        let mut a = m.values.clone();
        for (j, v) in a.iter_mut().enumerate() {
            *v = f.values.iter().map(|row| row[j].abs()).sum::<f64>() * f.dr;
        }
        a
    };
    let n = abs_m.len();
    let annulus_len = 2f64.powi(k - 1);
    let mut sup: f64 = 0.0;
    let mut len = 1;
    while len <= n {
        for o in 0..=(n - len) {
            let mass: f64 = abs_m[o..o + len].iter().sum::<f64>() * m.h;
            let cap = annulus_len * len as f64 * m.h;
            sup = sup.max(cap.powf(-1.0 + 1.0 / p) * mass);
        }
        len *= 2;
    }
    let pref = 2f64.powf(2.0 * k as f64 * (1.0 - 1.0 / p));
    Ok(q / (pref * f.lp_norm(p).powf(2.0 - delta) * sup.powf(delta)))
}

/// Outcome of the cap search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapFunctionalResult {
    pub value: f64,
    pub argmax_cap: Cap,
    pub candidates: usize,
}

/// Window lengths examined per annulus: `1, 2, 4, … < n` and the full circle.
fn window_lengths(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut c = 1;
    while c < n {
        v.push(c);
        c *= 2;
    }
    v.push(n);
    v
}

/// Grid-aligned cap covering nodes `offset..offset + count` of an annulus.
pub fn window_cap(grid: &RadialAngularGrid, k: i32, offset: usize, count: usize) -> Cap {
    let d = grid.dtheta();
    if count >= grid.n_theta() {
        return Cap { k, theta_lo: -0.5 * d, theta_hi: 2.0 * PI - 0.5 * d };
    }
    let lo = (offset as f64 - 0.5) * d;
    Cap { k, theta_lo: lo, theta_hi: lo + count as f64 * d }
}

/// `S(f) = sup_cap |cap|^{-1/4} ∫_cap |f|^{3/2} dσ` over grid-aligned caps.
/// Ties go to the smallest `k`, then offset, then length.
pub fn cap_functional(f: &ConeFunction) -> CapFunctionalResult {
    let grid = f.grid();
    let n = grid.n_theta();
    let d = grid.dtheta();
    let lengths = window_lengths(n);
    let mut best: Option<(f64, Cap)> = None;
    let mut candidates = 0;
    let mut col = vec![0.0; n];
    let mut prefix = vec![0.0; 2 * n + 1];
    for k in grid.k_min()..=grid.k_max() {
        col.iter_mut().for_each(|v| *v = 0.0);
        for ir in grid.annulus_range(k) {
            let w = grid.r_weights()[ir];
            for (j, c) in col.iter_mut().enumerate() {
                *c += f.samples()[grid.index(ir, j)].norm().powf(1.5) * w;
            }
        }
        for i in 0..2 * n {
            prefix[i + 1] = prefix[i] + col[i % n];
        }
        let ring = 2f64.powi(k - 1);
        for o in 0..n {
            for &c in &lengths {
                if c == n && o > 0 {
                    continue;
                }
                candidates += 1;
                let mass = (prefix[o + c] - prefix[o]) * d;
                let v = (ring * c as f64 * d).powf(-0.25) * mass;
                if best.as_ref().is_none_or(|(b, _)| v > b * (1.0 + 1e-12)) {
                    best = Some((v, window_cap(grid, k, o, c)));
                }
            }
        }
    }
    let (value, argmax_cap) = best.expect("grid has at least one annulus");
    CapFunctionalResult { value, argmax_cap, candidates }
}

/// `|cap|^{-1/4} ∫_cap |f|^{3/2} dσ` for one cap.
pub fn cap_value(f: &ConeFunction, cap: &Cap) -> f64 {
    let grid = f.grid();
    let mask = cap.mask(grid);
    let s: f64 = (0..grid.len()).filter(|&i| mask[i]).map(|i| f.samples()[i].norm().powf(1.5) * grid.weight(i)).sum();
    cap.measure().powf(-0.25) * s
}

/// `‖Tf‖₆ / (‖f‖₂^{1−δ/2} S(f)^{δ/3})`, with the tail-corrected `L⁶` norm.
pub fn cap_estimate_ratio(f: &ConeFunction, delta: f64, plan: &ExtensionPlan) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0 / 3.0) {
        return invalid(format!("δ = {delta} must lie in (0, 2/3]"));
    }
    let field = plan.extend_with_tail(f)?;
    let t6 = l6_norm(&field).corrected();
    let s = cap_functional(f).value;
    Ok(t6 / (f.l2_norm().powf(1.0 - 0.5 * delta) * s.powf(delta / 3.0)))
}

/// `ρ(c1, c2) = |k1 − k2|`.
pub fn cap_distance(c1: &Cap, c2: &Cap) -> u32 {
    c1.k.abs_diff(c2.k)
}

/// One row of the bilinear sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilinearRow {
    pub d: u32,
    pub ratio: f64,
    /// `ratio · 2^{d/6}`.
    pub normalized_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilinearSweep {
    pub rows: Vec<BilinearRow>,
    /// Set when the sweep stopped early because a box could not resolve `g`.
    pub truncated_at: Option<u32>,
}

/// Axisymmetric box for the sweep: extents `radius`, node gaps small enough
/// for content up to radius `2^d`.
pub fn sweep_box(radius: f64, d: u32) -> BoxSpec {
    let width = (2.5 / 2f64.powi(d as i32)).min(0.5);
    let panels = (radius / width).ceil() as usize;
    BoxSpec {
        radius,
        half_time: radius,
        n_radial: panels * PANEL_ORDER,
        n_angular: 1,
        n_time: 2 * panels * PANEL_ORDER,
    }
}

/// `f` = `profile` on the annulus `[1/2, 1)`, `g` = the same profile moved to
/// annulus `d`; `ratio(d) = ‖Tf·Tg‖₃ / (‖f‖₂‖g‖₂)` on an axisymmetric box.
/// The finite box only lowers the product norm, so ratios are lower bounds of
/// the whole-space values.
pub fn bilinear_decay_sweep(
    profile: &dyn Fn(f64) -> f64,
    d_max: u32,
    grid: &Arc<RadialAngularGrid>,
    radius: f64,
) -> Result<BilinearSweep> {
    let on = |k: i32| {
        let (lo, hi) = crate::cone::annulus_bounds(k);
        let s = 2f64.powi(k);
        ConeFunction::from_real_fn(grid.clone(), move |r, _| if r >= lo && r < hi { profile(r / s) } else { 0.0 })
    };
    let f = on(0);
    let mut rows = Vec::new();
    let mut truncated_at = None;
    for d in 0..=d_max {
        let g = on(d as i32);
        let bx = SpaceTimeBox::shared(sweep_box(radius, d))?;
        let plan = ExtensionPlan::new(grid.clone(), bx)?;
        let (tf, tg) = match (plan.extend(&f), plan.extend(&g)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                truncated_at = Some(d);
                break;
            }
        };
        let ratio = product_l3_norm(&tf, &tg)? / (f.l2_norm() * g.l2_norm());
        rows.push(BilinearRow { d, ratio, normalized_ratio: ratio * 2f64.powf(d as f64 / 6.0) });
    }
    Ok(BilinearSweep { rows, truncated_at })
}

/// `‖Tf‖₆ / (Σ_k ‖f_k‖₂³)^{1/3}` with the tail-corrected `L⁶` norm.
pub fn improved_exponent_constant(f: &ConeFunction, plan: &ExtensionPlan) -> Result<f64> {
    let grid = f.grid();
    let s: f64 = (grid.k_min()..=grid.k_max()).map(|k| f.annulus_mass(k).powf(1.5)).sum();
    let field = plan.extend_with_tail(f)?;
    Ok(l6_norm(&field).corrected() / s.cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{restrict_to_cap, GridSpec};
    use crate::symmetry::{act_on_cone_function, SymmetryElement};

    #[test]
    fn unit_interval_b_form_is_exact_at_every_resolution() {
        for n in [1, 7, 64, 300] {
            let one = Sampled1d::from_fn(0.0, 1.0, n, |_| 1.0).unwrap();
            let b = b_form(&one, &one, 0.5).unwrap();
            assert!((b - 8.0 / 3.0).abs() < 1e-12, "n={n}: {b}");
        }
    }

    #[test]
    fn b_form_rejects_bad_alpha_and_handles_zero() {
        let one = Sampled1d::from_fn(0.0, 1.0, 8, |_| 1.0).unwrap();
        let zero = Sampled1d::from_fn(0.0, 1.0, 8, |_| 0.0).unwrap();
        assert!(b_form(&one, &one, 1.0).is_err());
        assert_eq!(b_form(&zero, &one, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn b_form_matches_interval_formula_for_split_sets() {
        let f = Sampled1d::from_fn(0.0, 4.0, 400, |x| if x < 1.0 || x > 3.0 { 1.0 } else { 0.0 }).unwrap();
        let b = b_form(&f, &f, 0.5).unwrap();
        let e = [(0.0, 1.0), (3.0, 4.0)];
        let exact: f64 =
            e.iter().flat_map(|&(a, b)| e.iter().map(move |&(c, d)| interval_pair_integral(a, b, c, d, 0.5))).sum();
        assert!((b - exact).abs() < 1e-10);
    }

    #[test]
    fn circle_form_of_constants() {
        // 2π ∫₀^{2π} |sin u|^{-1/2} du = 4π B(1/4, 1/2).
        let beta = statrs::function::beta::beta(0.25, 0.5);
        let exact = 4.0 * PI * beta;
        for n in [16, 37] {
            let one = vec![1.0; n];
            let v = b_form_circle(&one, &one, 0.5).unwrap();
            assert!((v - exact).abs() < 1e-9 * exact, "n={n}: {v} vs {exact}");
        }
    }

    #[test]
    fn circle_form_is_symmetric() {
        let g: Vec<f64> = (0..20).map(|i| (i as f64).sin().abs()).collect();
        let h: Vec<f64> = (0..20).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let a = b_form_circle(&g, &h, 0.5).unwrap();
        let b = b_form_circle(&h, &g, 0.5).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn single_interval_indicator_sup_is_one_half() {
        let r = b_indicator_bound_ratio(&[(0.0, 1.0)], 0.5, 0.25).unwrap();
        assert!((r.sup_ratio - 0.5).abs() < 1e-15);
        assert!(r.ratio.is_finite());
        assert!(b_indicator_bound_ratio(&[], 0.5, 0.25).is_err());
        assert!(b_indicator_bound_ratio(&[(0.0, 1.0)], 0.5, 0.5).is_err());
    }

    #[test]
    fn indicator_ratio_is_scale_invariant() {
        let e = [(0.0, 1.0), (3.0, 3.5), (10.0, 12.0)];
        let r1 = b_indicator_bound_ratio(&e, 0.5, 0.25).unwrap().ratio;
        let scaled: Vec<_> = e.iter().map(|&(a, b)| (7.0 * a, 7.0 * b)).collect();
        let r2 = b_indicator_bound_ratio(&scaled, 0.5, 0.25).unwrap().ratio;
        assert!((r1 - r2).abs() < 1e-10 * r1);
    }

    #[test]
    fn q_form_of_separable_function_factorizes() {
        let u = |r: f64| 1.0 + r;
        let v = |x: f64| (-x * x).exp();
        let f = Sampled2d::from_fn((0.5, 1.0, 6), (-2.0, 2.0, 40), |r, x| u(r) * v(x)).unwrap();
        let q = q_form(&f, &f, 0.5).unwrap();
        let ur: f64 = f.values.iter().map(|row| row[0] / v(f.x.start + 0.5 * f.x.h)).sum::<f64>() * f.dr;
        let vx = Sampled1d::from_fn(-2.0, 2.0, 40, v).unwrap();
        let exact = ur * ur * b_form(&vx, &vx, 0.5).unwrap();
        assert!((q - exact).abs() < 1e-12 * exact);
        let b = b_form(&f.marginal(), &f.marginal(), 0.5).unwrap();
        assert!((q - b).abs() < 1e-12 * q);
    }

    #[test]
    fn q_bound_ratio_is_finite_on_an_annulus() {
        let f = Sampled2d::from_fn((2.0, 4.0, 8), (0.0, 1.0, 32), |r, x| r * (1.0 + 3.0 * x)).unwrap();
        let v = q_bound_ratio(&f, 2, DEFAULT_DELTA).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    fn coarse() -> Arc<RadialAngularGrid> {
        RadialAngularGrid::shared(GridSpec { k_min: -8, k_max: 6, n_r: 8, n_theta: 32 }).unwrap()
    }

    #[test]
    fn indicator_of_a_cap_is_its_own_argmax() {
        let grid = coarse();
        let cap = window_cap(&grid, 1, 3, 4);
        let one = ConeFunction::from_real_fn(grid.clone(), |_, _| 1.0);
        let f = restrict_to_cap(&one, &cap);
        let res = cap_functional(&f);
        assert_eq!(res.argmax_cap, cap);
        assert!((res.value - cap.measure().powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn ground_state_argmax_is_a_full_ring_near_unit_radius() {
        let grid = coarse();
        let f = ConeFunction::from_real_fn(grid.clone(), |r, _| (-r).exp() / PI.sqrt());
        let res = cap_functional(&f);
        assert!((-1..=1).contains(&res.argmax_cap.k));
        assert!((res.argmax_cap.width() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn cap_functional_is_dilation_invariant_and_homogeneous() {
        let grid = coarse();
        let f = ConeFunction::from_real_fn(grid.clone(), |r, t| (-r).exp() * (1.5 + t.cos()));
        let d = act_on_cone_function(&SymmetryElement::dilation(2.0).unwrap(), &f);
        let (a, b) = (cap_functional(&f).value, cap_functional(&d).value);
        assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
        let c = cap_functional(&f.scaled(3.0)).value;
        assert!((c - 3f64.powf(1.5) * a).abs() < 1e-12 * c);
    }

    #[test]
    fn cap_distance_examples() {
        let a = Cap::new(0, 0.0, 1.0).unwrap();
        let b = Cap::new(2, 1.0, 2.0).unwrap();
        assert_eq!(cap_distance(&a, &a), 0);
        assert_eq!(cap_distance(&a, &b), 2);
        assert_eq!(cap_distance(&b, &a), 2);
    }
}
