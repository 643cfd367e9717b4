//! The extension operator `Tf(x, t) = ∫ e^{i(x·y + t|y|)} f(y) dσ(y)` on a
//! truncated cylinder in space-time, plus the norms built from it.
//!
//! Space-time is sampled in cylindrical coordinates `(ρ, φ, t)`: panels of
//! four-point Gauss–Legendre in `ρ` (weight `ρ dρ`) and in `t`, a uniform
//! rule in `φ`. Fields are evaluated through the angular-harmonic expansion
//! of the kernel (see [`plan`]); [`direct`] keeps a brute-force quadrature
//! for reference.

pub mod direct;
pub mod plan;
pub mod tail;

use crate::error::{invalid, LabError, Result};
use crate::quadrature::composite_gauss_legendre;
use crate::symmetry::SymmetryElement;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

pub use plan::{ExtensionPlan, ResolutionReport};
pub use tail::{TailEstimate, TailPolicy};

/// Gauss–Legendre order of every panel in `ρ` and `t`.
pub const PANEL_ORDER: usize = 4;

/// Resolution of a [`SpaceTimeBox`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSpec {
    /// Spatial radius `X` of the cylinder `|x| <= X`.
    pub radius: f64,
    /// Temporal half-width: `|t| <= half_time`.
    pub half_time: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_time: usize,
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec { radius: 20.0, half_time: 20.0, n_radial: 100, n_angular: 196, n_time: 200 }
    }
}

impl BoxSpec {
    /// Same node density, rescaled by `factor` in every direction.
    pub fn rescaled(&self, factor: f64) -> BoxSpec {
        BoxSpec { radius: self.radius * factor, half_time: self.half_time * factor, ..*self }
    }
}

/// The cylinder `{|x| <= X, |t| <= T}` with its product quadrature.
#[derive(Clone, Debug)]
pub struct SpaceTimeBox {
    spec: BoxSpec,
    rho: Vec<f64>,
    rho_weights: Vec<f64>,
    t: Vec<f64>,
    t_weights: Vec<f64>,
}

impl SpaceTimeBox {
    pub fn new(spec: BoxSpec) -> Result<Self> {
        if !(spec.radius > 0.0 && spec.half_time > 0.0) {
            return invalid("box extents must be positive");
        }
        if spec.n_radial < PANEL_ORDER || spec.n_radial % PANEL_ORDER != 0 {
            return invalid(format!("n_radial must be a positive multiple of {PANEL_ORDER}"));
        }
        if spec.n_time < PANEL_ORDER || spec.n_time % PANEL_ORDER != 0 {
            return invalid(format!("n_time must be a positive multiple of {PANEL_ORDER}"));
        }
        if spec.n_angular == 0 {
            return invalid("n_angular must be positive");
        }
        let (rho, w) = composite_gauss_legendre(0.0, spec.radius, spec.n_radial / PANEL_ORDER, PANEL_ORDER);
        let rho_weights = rho.iter().zip(&w).map(|(r, w)| r * w).collect();
        let (t, t_weights) =
            composite_gauss_legendre(-spec.half_time, spec.half_time, spec.n_time / PANEL_ORDER, PANEL_ORDER);
        Ok(SpaceTimeBox { spec, rho, rho_weights, t, t_weights })
    }

    pub fn shared(spec: BoxSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> BoxSpec {
        self.spec
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    /// Weights for `∫ ρ dρ`.
    pub fn rho_weights(&self) -> &[f64] {
        &self.rho_weights
    }
    pub fn t(&self) -> &[f64] {
        &self.t
    }
    pub fn t_weights(&self) -> &[f64] {
        &self.t_weights
    }
    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }
    pub fn n_phi(&self) -> usize {
        self.spec.n_angular
    }
    pub fn n_t(&self) -> usize {
        self.t.len()
    }
    pub fn len(&self) -> usize {
        self.n_rho() * self.n_phi() * self.n_t()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn phi(&self, q: usize) -> f64 {
        2.0 * PI * q as f64 / self.n_phi() as f64
    }
    pub fn dphi(&self) -> f64 {
        2.0 * PI / self.n_phi() as f64
    }
    /// Flat index of node `(t index, ρ index, φ index)`.
    pub fn index(&self, l: usize, j: usize, q: usize) -> usize {
        (l * self.n_rho() + j) * self.n_phi() + q
    }
    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.t_weights[l] * self.rho_weights[j] * self.dphi()
    }
    /// `(x1, x2, t)` of node `(l, j, q)`.
    pub fn point(&self, l: usize, j: usize, q: usize) -> [f64; 3] {
        let (s, c) = self.phi(q).sin_cos();
        [self.rho[j] * c, self.rho[j] * s, self.t[l]]
    }
    pub fn volume(&self) -> f64 {
        PI * self.spec.radius * self.spec.radius * 2.0 * self.spec.half_time
    }
    /// Largest gap between neighbouring nodes in `ρ` or `t`.
    pub fn max_spacing(&self) -> f64 {
        let gap = |v: &[f64], lo: f64, hi: f64| {
            let mut g = (v[0] - lo).max(hi - v[v.len() - 1]);
            for w in v.windows(2) {
                g = g.max(w[1] - w[0]);
            }
            g
        };
        gap(&self.rho, 0.0, self.spec.radius).max(gap(&self.t, -self.spec.half_time, self.spec.half_time))
    }
    pub fn same_as(&self, other: &SpaceTimeBox) -> bool {
        self.spec == other.spec
    }
}

/// Samples of a space-time function on the nodes of a box.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    bx: Arc<SpaceTimeBox>,
    samples: Vec<Complex64>,
    tail: TailEstimate,
}

impl SpaceTimeField {
    pub fn new(bx: Arc<SpaceTimeBox>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != bx.len() {
            return Err(LabError::GridMismatch(format!("{} samples for {} box nodes", samples.len(), bx.len())));
        }
        Ok(SpaceTimeField { bx, samples, tail: TailEstimate::none() })
    }

    pub fn zeros(bx: Arc<SpaceTimeBox>) -> Self {
        let n = bx.len();
        SpaceTimeField { bx, samples: vec![Complex64::new(0.0, 0.0); n], tail: TailEstimate::none() }
    }

    pub fn from_fn(bx: Arc<SpaceTimeBox>, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let mut samples = Vec::with_capacity(bx.len());
        for l in 0..bx.n_t() {
            for j in 0..bx.n_rho() {
                for q in 0..bx.n_phi() {
                    samples.push(f(bx.point(l, j, q)));
                }
            }
        }
        SpaceTimeField { bx, samples, tail: TailEstimate::none() }
    }

    pub fn with_tail(mut self, tail: TailEstimate) -> Self {
        self.tail = tail;
        self
    }

    pub fn space_time_box(&self) -> &Arc<SpaceTimeBox> {
        &self.bx
    }
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }
    pub fn tail(&self) -> &TailEstimate {
        &self.tail
    }
    pub fn at(&self, l: usize, j: usize, q: usize) -> Complex64 {
        self.samples[self.bx.index(l, j, q)]
    }

    /// `∭ |F|^p` over the box.
    pub fn power_integral(&self, p: f64) -> f64 {
        let bx = &self.bx;
        let n = bx.n_phi();
        let mut total = 0.0;
        for l in 0..bx.n_t() {
            for j in 0..bx.n_rho() {
                let start = bx.index(l, j, 0);
                let s: f64 = self.samples[start..start + n].iter().map(|z| pow_abs(*z, p)).sum();
                total += s * bx.weight(l, j);
            }
        }
        total
    }

    /// Writes `x1,x2,t,re,im` rows.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x1", "x2", "t", "re", "im"])?;
        let bx = &self.bx;
        for l in 0..bx.n_t() {
            for j in 0..bx.n_rho() {
                for q in 0..bx.n_phi() {
                    let p = bx.point(l, j, q);
                    let z = self.at(l, j, q);
                    w.write_record(&[p[0], p[1], p[2], z.re, z.im].map(|v| format!("{v:e}")))?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn pow_abs(z: Complex64, p: f64) -> f64 {
    let a2 = z.norm_sqr();
    if p == 6.0 {
        a2 * a2 * a2
    } else if p == 4.0 {
        a2 * a2
    } else if p == 3.0 {
        a2 * a2.sqrt()
    } else if p == 2.0 {
        a2
    } else {
        a2.powf(0.5 * p)
    }
}

/// `‖F‖₆` over the box together with the estimated exterior contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `(∭_box |F|⁶)^{1/6}`.
    pub value: f64,
    /// Estimated `∭_{outside} |F|⁶` (sixth-power units).
    pub tail_bound: f64,
    pub policy: TailPolicy,
}

impl NormReport {
    /// `(value⁶ + tail)^{1/6}`.
    pub fn corrected(&self) -> f64 {
        (self.value.powi(6) + self.tail_bound).powf(1.0 / 6.0)
    }
    /// Share of the total sixth-power mass attributed to the exterior.
    pub fn relative_tail(&self) -> f64 {
        let total = self.value.powi(6) + self.tail_bound;
        if total > 0.0 {
            self.tail_bound / total
        } else {
            0.0
        }
    }
}

pub fn l6_norm(field: &SpaceTimeField) -> NormReport {
    NormReport {
        value: field.power_integral(6.0).powf(1.0 / 6.0),
        tail_bound: field.tail.sixth_power_mass,
        policy: field.tail.policy,
    }
}

/// `‖F‖_p` over the box, `p >= 1`.
pub fn lp_norm_box(field: &SpaceTimeField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("L^p norm needs p >= 1, got {p}"));
    }
    Ok(field.power_integral(p).powf(1.0 / p))
}

/// `‖F·G‖_{L³(box)}`.
pub fn product_l3_norm(f: &SpaceTimeField, g: &SpaceTimeField) -> Result<f64> {
    if !f.bx.same_as(&g.bx) {
        return Err(LabError::GridMismatch("fields live on different boxes".into()));
    }
    let bx = &f.bx;
    let n = bx.n_phi();
    let mut total = 0.0;
    for l in 0..bx.n_t() {
        for j in 0..bx.n_rho() {
            let start = bx.index(l, j, 0);
            let s: f64 = f.samples[start..start + n]
                .iter()
                .zip(&g.samples[start..start + n])
                .map(|(a, b)| pow_abs(a * b, 3.0))
                .sum();
            total += s * bx.weight(l, j);
        }
    }
    Ok(total.cbrt())
}

/// `max_t (∬ |F(x, t)|⁴ dx)^{1/4}` over the sampled times, with the maximizing time.
pub fn linf_l4_norm(field: &SpaceTimeField) -> (f64, f64) {
    let bx = &field.bx;
    let n = bx.n_phi();
    let mut best = (0.0, bx.t()[0]);
    for l in 0..bx.n_t() {
        let mut slice = 0.0;
        for j in 0..bx.n_rho() {
            let start = bx.index(l, j, 0);
            let s: f64 = field.samples[start..start + n].iter().map(|z| pow_abs(*z, 4.0)).sum();
            slice += s * bx.rho_weights()[j] * bx.dphi();
        }
        if slice > best.0 {
            best = (slice, bx.t()[l]);
        }
    }
    (best.0.powf(0.25), best.1)
}

/// `Tf` for `f = e^{-a|y| + b·y + c}` at `(x, t)`, principal square root.
pub fn closed_form_extension(a: Complex64, b: [Complex64; 2], c: Complex64, x: [f64; 2], t: f64) -> Complex64 {
    let s = a - Complex64::new(0.0, t);
    let v0 = b[0] + Complex64::new(0.0, x[0]);
    let v1 = b[1] + Complex64::new(0.0, x[1]);
    let z = s * s - v0 * v0 - v1 * v1;
    2.0 * PI * c.exp() / z.sqrt()
}

/// Closed-form field of `c0·e^{-|y|}`, with the exact exterior tail attached.
pub fn extend_closed_form_radial(c0: f64, bx: Arc<SpaceTimeBox>) -> SpaceTimeField {
    let spec = bx.spec();
    let field = SpaceTimeField::from_fn(bx, |p| {
        let z = Complex64::new(1.0 + p[0] * p[0] + p[1] * p[1] - p[2] * p[2], -2.0 * p[2]);
        2.0 * PI * c0 / z.sqrt()
    });
    let tail = tail::radial_exterior_sixth_power(c0, 1.0, spec.radius, spec.half_time);
    field.with_tail(TailEstimate { sixth_power_mass: tail, policy: TailPolicy::ExactRadial })
}

/// Compares `T(g*f)` on the box with the transformation rule
/// `T(g*f)(X) = amp·λ⁻¹·Tf(ιMι X / λ)`, where `g` has point map `λM`.
/// Returns `(max absolute deviation, max |T(g*f)|)` over the probe nodes.
pub fn lorentz_transform_rule_check(
    f: &crate::cone::ConeFunction,
    g: &SymmetryElement,
    bx: &Arc<SpaceTimeBox>,
    probe_stride: usize,
) -> Result<(f64, f64)> {
    let pulled = crate::symmetry::act_on_cone_function(g, f);
    let plan = ExtensionPlan::new(f.grid().clone(), bx.clone())?.forced(true);
    let lhs = plan.extend(&pulled)?;
    let stride = probe_stride.max(1);
    let mut nodes = Vec::new();
    let mut points = Vec::new();
    let m = g.matrix();
    let lam = g.scale();
    for l in (0..bx.n_t()).step_by(stride) {
        for j in (0..bx.n_rho()).step_by(stride) {
            for q in (0..bx.n_phi()).step_by(stride) {
                let p = bx.point(l, j, q);
                let v = nalgebra::Vector3::new(p[0], p[1], -p[2]);
                let w = m * v / lam;
                points.push([w[0], w[1], -w[2]]);
                nodes.push((l, j, q));
            }
        }
    }
    let rhs = plan::extend_at_points(f, &points)?;
    let mut dev: f64 = 0.0;
    let mut size: f64 = 0.0;
    for ((l, j, q), r) in nodes.into_iter().zip(rhs) {
        let left = lhs.at(l, j, q);
        let right = r * (g.amplitude() / lam);
        dev = dev.max((left - right).norm());
        size = size.max(left.norm());
    }
    Ok((dev, size))
}
