//! Cone-preserving linear maps and their weighted pullback action.

use crate::cone::{annulus_bounds, Cap, ConeFunction, RadialAngularGrid};
use crate::error::{invalid, LabError, Result};
use crate::quadrature::{barycentric_weights, lagrange_row};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which weight multiplies the plain composition `f∘g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// `f∘L`, measure preserving.
    Plain,
    /// `λ^{1/2} f∘D_λ`.
    Dilation,
    /// `(1−t²)^{1/4} f∘L_t` with `L_t = √(1−t²) L^t`.
    NormalizedBoost,
    /// Product of elements with different conventions.
    Composite,
}

/// The map `p ↦ scale·matrix·p` acting on functions by
/// `(g*f)(y) = amplitude · f(g·y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryElement {
    matrix: Matrix3<f64>,
    scale: f64,
    amplitude: f64,
    convention: WeightConvention,
}

/// Serialized form: nine matrix entries (row major), scale, amplitude and convention.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryRecord {
    pub matrix: [f64; 9],
    pub scale: f64,
    pub amplitude: f64,
    pub convention: WeightConvention,
}

fn check_unit(name: &str, t: f64) -> Result<f64> {
    if !(t.abs() < 1.0) {
        return invalid(format!("{name} parameter {t} must lie in (-1, 1)"));
    }
    Ok(1.0 / (1.0 - t * t).sqrt())
}

impl SymmetryElement {
    pub fn identity() -> Self {
        SymmetryElement { matrix: Matrix3::identity(), scale: 1.0, amplitude: 1.0, convention: WeightConvention::Plain }
    }

    /// `L^t(x) = ((x1 + t x3)/√(1−t²), x2, (x3 + t x1)/√(1−t²))`.
    pub fn boost_x(t: f64) -> Result<Self> {
        let g = check_unit("boost", t)?;
        let m = Matrix3::new(g, 0.0, g * t, 0.0, 1.0, 0.0, g * t, 0.0, g);
        Ok(SymmetryElement { matrix: m, ..Self::identity() })
    }

    /// `M^s`, the boost along `x2`.
    pub fn boost_y(s: f64) -> Result<Self> {
        let g = check_unit("boost", s)?;
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, g, g * s, 0.0, g * s, g);
        Ok(SymmetryElement { matrix: m, ..Self::identity() })
    }

    /// Rotation by `θ` about the `x3` axis.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let m = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        SymmetryElement { matrix: m, ..Self::identity() }
    }

    /// `D_λ` with the `L²`-preserving weight `λ^{1/2}`.
    pub fn dilation(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("dilation factor {lambda} must be positive"));
        }
        Ok(SymmetryElement {
            matrix: Matrix3::identity(),
            scale: lambda,
            amplitude: lambda.sqrt(),
            convention: WeightConvention::Dilation,
        })
    }

    /// `L_t = D_{√(1−t²)} L^t` with weight `(1−t²)^{1/4}`.
    pub fn normalized_boost_x(t: f64) -> Result<Self> {
        let b = Self::boost_x(t)?;
        let s = (1.0 - t * t).sqrt();
        Ok(SymmetryElement { scale: s, amplitude: s.sqrt(), convention: WeightConvention::NormalizedBoost, ..b })
    }

    pub fn from_parts(matrix: Matrix3<f64>, scale: f64, amplitude: f64, convention: WeightConvention) -> Result<Self> {
        if !(scale > 0.0) {
            return invalid("scale must be positive");
        }
        let g = SymmetryElement { matrix, scale, amplitude, convention };
        if g.form_defect() > 1e-9 || g.image_of_axis()[2] <= 0.0 {
            return invalid("matrix does not preserve the forward cone");
        }
        Ok(g)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.matrix
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
    pub fn convention(&self) -> WeightConvention {
        self.convention
    }

    /// The element acting on functions as `self` after `other`:
    /// `act(g1.compose(g2), f) = act(g1, act(g2, f))`. Its point map is
    /// `P_{g2} ∘ P_{g1}`.
    pub fn compose(&self, other: &SymmetryElement) -> SymmetryElement {
        let convention = if self.convention == other.convention {
            self.convention
        } else if self.convention == WeightConvention::Plain {
            other.convention
        } else if other.convention == WeightConvention::Plain {
            self.convention
        } else {
            WeightConvention::Composite
        };
        SymmetryElement {
            matrix: other.matrix * self.matrix,
            scale: self.scale * other.scale,
            amplitude: self.amplitude * other.amplitude,
            convention,
        }
    }

    pub fn inverse(&self) -> SymmetryElement {
        SymmetryElement {
            matrix: self.matrix.try_inverse().expect("Lorentz matrices are invertible"),
            scale: 1.0 / self.scale,
            amplitude: 1.0 / self.amplitude,
            convention: self.convention,
        }
    }

    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.matrix * p * self.scale
    }

    /// `max |A(Me_i, Me_j) − A(e_i, e_j)|` for `A(x, y) = x1y1 + x2y2 − x3y3`.
    pub fn form_defect(&self) -> f64 {
        let eta = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let d = self.matrix.transpose() * eta * self.matrix - eta;
        d.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn image_of_axis(&self) -> Vector3<f64> {
        self.matrix * Vector3::new(0.0, 0.0, 1.0)
    }

    pub fn record(&self) -> SymmetryRecord {
        let m = &self.matrix;
        SymmetryRecord {
            matrix: [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            scale: self.scale,
            amplitude: self.amplitude,
            convention: self.convention,
        }
    }

    pub fn from_record(r: &SymmetryRecord) -> Result<Self> {
        let m = Matrix3::from_row_slice(&r.matrix);
        Self::from_parts(m, r.scale, r.amplitude, r.convention)
    }
}

impl Serialize for SymmetryElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetryElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SymmetryRecord::deserialize(d)?;
        SymmetryElement::from_record(&r).map_err(serde::de::Error::custom)
    }
}

/// Planar part of `g·(y, |y|)`.
pub fn act_on_cone_point(g: &SymmetryElement, y: [f64; 2]) -> Result<[f64; 2]> {
    let ny = y[0].hypot(y[1]);
    if ny == 0.0 {
        return Err(LabError::NotOnCone("the cone tip has no direction".into()));
    }
    let q = g.apply(Vector3::new(y[0], y[1], ny));
    let nq = q[0].hypot(q[1]);
    if (q[2] - nq).abs() > 1e-10 * q.norm().max(1.0) {
        return Err(LabError::NotOnCone(format!("image ({}, {}, {}) left the cone", q[0], q[1], q[2])));
    }
    Ok([q[0], q[1]])
}

/// Interpolation used when reading a function off the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Lagrange in `r` through the annulus nodes, trigonometric in `θ`.
    #[default]
    Spectral,
    /// Bilinear in `(log r, θ)`.
    Bilinear,
}

/// Evaluates a grid function at arbitrary cone points; zero outside the grid.
pub struct ConeInterpolator<'a> {
    f: &'a ConeFunction,
    method: Interpolation,
    harmonics: Vec<Complex64>,
    bary: Vec<f64>,
}

impl<'a> ConeInterpolator<'a> {
    pub fn new(f: &'a ConeFunction, method: Interpolation) -> Self {
        let grid = f.grid();
        let n = grid.n_theta();
        let mut harmonics = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut bary = Vec::new();
        if method == Interpolation::Spectral {
            let fft = FftPlanner::new().plan_fft_forward(n);
            for ir in 0..grid.n_radial() {
                let buf = &mut harmonics[ir * n..(ir + 1) * n];
                buf.copy_from_slice(&f.samples()[ir * n..(ir + 1) * n]);
                fft.process(buf);
                buf.iter_mut().for_each(|z| *z /= n as f64);
            }
            // Barycentric weights depend only on the reference rule up to scale.
            bary = barycentric_weights(&grid.r_nodes()[grid.annulus_range(grid.k_min())]);
        }
        ConeInterpolator { f, method, harmonics, bary }
    }

    pub fn eval(&self, r: f64, theta: f64) -> Complex64 {
        let value = match self.method {
            Interpolation::Spectral => self.eval_spectral(r, theta),
            Interpolation::Bilinear => self.eval_bilinear(r, theta),
        };
        if self.f.is_nonnegative() {
            Complex64::new(value.re.max(0.0), 0.0)
        } else {
            value
        }
    }

    fn eval_spectral(&self, r: f64, theta: f64) -> Complex64 {
        let grid: &RadialAngularGrid = self.f.grid();
        let Some(k) = grid.locate_annulus(r) else {
            return Complex64::new(0.0, 0.0);
        };
        let range = grid.annulus_range(k);
        let nodes = &grid.r_nodes()[range.clone()];
        let mut ell = vec![0.0; nodes.len()];
        lagrange_row(nodes, &self.bary, r, &mut ell);
        let n = grid.n_theta();
        let half = n / 2;
        let step = Complex64::from_polar(1.0, theta);
        let mut total = Complex64::new(0.0, 0.0);
        let mut rot = Complex64::new(1.0, 0.0);
        let mut rot_neg = Complex64::new(1.0, 0.0);
        for m in 0..=half {
            let coeff = |bin: usize| -> Complex64 {
                range.clone().zip(&ell).map(|(ir, w)| self.harmonics[ir * n + bin] * *w).sum()
            };
            if m == 0 {
                total += coeff(0);
            } else if n % 2 == 0 && m == half {
                total += coeff(half) * 0.5 * (rot + rot_neg);
            } else {
                total += coeff(m) * rot + coeff(n - m) * rot_neg;
            }
            rot *= step;
            rot_neg *= step.conj();
        }
        total
    }

    fn eval_bilinear(&self, r: f64, theta: f64) -> Complex64 {
        let grid = self.f.grid();
        if grid.locate_annulus(r).is_none() {
            return Complex64::new(0.0, 0.0);
        }
        let rn = grid.r_nodes();
        let ln = r.ln();
        let hi = rn.partition_point(|&x| x < r);
        let (i0, i1, w) = if hi == 0 {
            (0, 0, 0.0)
        } else if hi == rn.len() {
            (rn.len() - 1, rn.len() - 1, 0.0)
        } else {
            let (a, b) = (rn[hi - 1].ln(), rn[hi].ln());
            (hi - 1, hi, (ln - a) / (b - a))
        };
        let n = grid.n_theta();
        let u = theta.rem_euclid(2.0 * PI) / grid.dtheta();
        let j0 = (u.floor() as usize) % n;
        let j1 = (j0 + 1) % n;
        let v = u - u.floor();
        let s = self.f.samples();
        let at = |i: usize, j: usize| s[grid.index(i, j)];
        (at(i0, j0) * (1.0 - v) + at(i0, j1) * v) * (1.0 - w) + (at(i1, j0) * (1.0 - v) + at(i1, j1) * v) * w
    }
}

/// `g*f`, sampled at the grid nodes.
pub fn act_on_cone_function(g: &SymmetryElement, f: &ConeFunction) -> ConeFunction {
    act_on_cone_function_with(g, f, Interpolation::default())
}

pub fn act_on_cone_function_with(g: &SymmetryElement, f: &ConeFunction, method: Interpolation) -> ConeFunction {
    let grid = f.grid().clone();
    if *g == SymmetryElement::identity() {
        return f.clone();
    }
    let interp = ConeInterpolator::new(f, method);
    let samples: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let (r, t) = grid.node(i);
            let q = g.apply(Vector3::new(r * t.cos(), r * t.sin(), r));
            interp.eval(q[0].hypot(q[1]), q[1].atan2(q[0])) * g.amplitude()
        })
        .collect();
    let mut out = ConeFunction::from_samples(grid, samples).expect("same grid");
    if f.is_nonnegative() && g.amplitude() >= 0.0 {
        out.set_nonnegative_flag();
    }
    out
}

/// Boost parameters `(s, t, r)` with `g₀∘L^t∘M^s∘D_r ∝ e^{-a|y| - b y2 - c y1}`.
pub fn solve_extremizer_params(a: f64, b: f64, c: f64) -> Result<(f64, f64, f64)> {
    if !(a > 0.0) || b * b + c * c >= a * a {
        return Err(LabError::Inadmissible(format!("need |(b, c)| < a, got a={a}, b={b}, c={c}")));
    }
    let s = b / a;
    let t = c / (a * a - b * b).sqrt();
    let r = (a * a - b * b - c * c).sqrt();
    Ok((s, t, r))
}

/// The symmetry carrying `g₀` to the real extremizer with parameters
/// `(a, b1, b2)`: `act(h, g₀) = r^{1/2} g₀∘L^t∘M^s∘D_r`.
pub fn orbit_element(a: f64, b1: f64, b2: f64) -> Result<(SymmetryElement, (f64, f64, f64))> {
    let (s, t, r) = solve_extremizer_params(a, -b2, -b1)?;
    let h = SymmetryElement::dilation(r)?.compose(&SymmetryElement::boost_y(s)?).compose(&SymmetryElement::boost_x(t)?);
    Ok((h, (s, t, r)))
}

/// Boost that widens a cap of the unit annulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WidenedCap {
    pub t: f64,
    pub theta: f64,
    /// `L_t^* ∘ R_θ^*`.
    pub element: SymmetryElement,
    pub original_measure: f64,
    /// `σ(L_t^{-1} R_θ^{-1} cap)`.
    pub transformed_measure: f64,
    /// Extreme radii of the sampled image of the cap.
    pub image_radius: (f64, f64),
    pub contained: bool,
}

pub fn widen_cap(cap: &Cap) -> Result<WidenedCap> {
    if cap.k != 0 {
        return invalid(format!("widen_cap needs a cap of the annulus [1/2, 1), got k = {}", cap.k));
    }
    let theta = cap.center();
    let measure = cap.measure();
    let t = if measure >= 0.5 { 0.0 } else { (1.0 - measure * measure).sqrt() };
    let element = SymmetryElement::normalized_boost_x(t)?.compose(&SymmetryElement::rotation(theta));
    // σ is Lorentz invariant and homogeneous of degree one.
    let transformed_measure = measure / (1.0 - t * t).sqrt();
    let inv = element.inverse();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (a, b) = annulus_bounds(0);
    let samples = 64;
    for i in 0..=samples {
        let r = a + (b - a) * i as f64 / samples as f64;
        for j in 0..=samples {
            let phi = cap.theta_lo + cap.width() * j as f64 / samples as f64;
            let q = inv.apply(Vector3::new(r * phi.cos(), r * phi.sin(), r));
            let rad = q[0].hypot(q[1]);
            lo = lo.min(rad);
            hi = hi.max(rad);
        }
    }
    let contained = lo >= 0.25 * (1.0 - 1e-12) && hi <= 1.0 + 1e-12;
    Ok(WidenedCap {
        t,
        theta,
        element,
        original_measure: measure,
        transformed_measure,
        image_radius: (lo, hi),
        contained,
    })
}

/// `λ = 2^k`, so that `λ^{-1}·cap` lies in the annulus `k = 0`.
pub fn dyadic_rescale_to_unit(cap: &Cap) -> f64 {
    2f64.powi(cap.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{cone_integral, GridSpec, RadialAngularGrid};
    use std::sync::Arc;

    fn g0(grid: &Arc<RadialAngularGrid>) -> ConeFunction {
        ConeFunction::from_real_fn(grid.clone(), |r, _| (-r).exp() / PI.sqrt())
    }

    #[test]
    fn generators() {
        assert_eq!(SymmetryElement::boost_x(0.0).unwrap().matrix(), Matrix3::identity());
        let b = SymmetryElement::boost_x(0.6).unwrap();
        let p = b.apply(Vector3::new(1.0, 0.0, 1.0));
        assert!((p - Vector3::new(2.0, 0.0, 2.0)).norm() < 1e-14);
        let i = b.compose(&SymmetryElement::boost_x(-0.6).unwrap());
        assert!((i.matrix() - Matrix3::identity()).norm() < 1e-12);
        assert!(SymmetryElement::boost_x(1.0).is_err());
        assert!(SymmetryElement::dilation(0.0).is_err());
    }

    #[test]
    fn cone_points() {
        let y = [1.0, 0.0];
        assert_eq!(act_on_cone_point(&SymmetryElement::identity(), y).unwrap(), y);
        let d = act_on_cone_point(&SymmetryElement::dilation(2.0).unwrap(), y).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-15 && d[1] == 0.0);
        let b = act_on_cone_point(&SymmetryElement::boost_x(0.6).unwrap(), y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-14 && b[1].abs() < 1e-15);
        assert!(act_on_cone_point(&SymmetryElement::identity(), [0.0, 0.0]).is_err());
    }

    #[test]
    fn parameter_solver_examples() {
        assert_eq!(solve_extremizer_params(1.0, 0.0, 0.0).unwrap(), (0.0, 0.0, 1.0));
        let (s, t, r) = solve_extremizer_params(2.0, 1.0, 1.0).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert!((t - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(solve_extremizer_params(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pullbacks_preserve_integrals_and_norms() {
        let grid = RadialAngularGrid::shared(GridSpec::default()).unwrap();
        let f = g0(&grid);
        let base = cone_integral(&f).re;
        let b = act_on_cone_function(&SymmetryElement::boost_x(0.5).unwrap(), &f);
        assert!((cone_integral(&b).re - base).abs() < 1e-6 * base);
        let d = act_on_cone_function(&SymmetryElement::dilation(2.0).unwrap(), &f);
        assert!((d.l2_norm() - f.l2_norm()).abs() < 1e-6);
        assert!(d.is_nonnegative());
    }

    #[test]
    fn identity_action_is_exact() {
        let grid = RadialAngularGrid::shared(GridSpec::default()).unwrap();
        let f = g0(&grid);
        let h = act_on_cone_function(&SymmetryElement::identity(), &f);
        assert_eq!(h.samples(), f.samples());
    }

    #[test]
    fn widen_cap_examples() {
        let wide = widen_cap(&Cap::new(0, 0.0, 2.0 * PI).unwrap()).unwrap();
        assert_eq!(wide.t, 0.0);
        let w = widen_cap(&Cap::new(0, -0.1, 0.1).unwrap()).unwrap();
        assert!((w.t - 0.99f64.sqrt()).abs() < 1e-15);
        assert!((w.transformed_measure - 1.0).abs() < 1e-12);
        assert!(w.contained);
        let w = widen_cap(&Cap::new(0, -0.4, 0.4).unwrap()).unwrap();
        assert!((w.t - 0.84f64.sqrt()).abs() < 1e-15);
        assert!(w.contained);
        assert!(widen_cap(&Cap::full_annulus(1)).is_err());
    }

    #[test]
    fn dyadic_rescale() {
        assert_eq!(dyadic_rescale_to_unit(&Cap::full_annulus(0)), 1.0);
        assert_eq!(dyadic_rescale_to_unit(&Cap::full_annulus(3)), 8.0);
        assert_eq!(dyadic_rescale_to_unit(&Cap::full_annulus(-2)), 0.25);
    }
}
