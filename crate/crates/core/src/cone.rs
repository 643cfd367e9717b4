//! Polar grid on the cone, functions sampled on it, and their integrals.
//!
//! A point of the cone is identified with its horizontal part `y ∈ ℝ²`, and
//! the surface measure is `dσ = dy / |y| = dr dθ`.

use crate::error::{invalid, LabError, Result};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// Resolution parameters of a [`RadialAngularGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub k_min: i32,
    pub k_max: i32,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { k_min: -24, k_max: 6, n_r: 16, n_theta: 64 }
    }
}

/// Dyadic annuli `A_k = {2^{k-1} <= r < 2^k}` for `k_min <= k <= k_max`,
/// each carrying an `n_r`-point Gauss–Legendre rule in `r`, times a uniform
/// `n_theta`-point rule in `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialAngularGrid {
    spec: GridSpec,
    r_nodes: Vec<f64>,
    r_weights: Vec<f64>,
    theta_nodes: Vec<f64>,
}

impl RadialAngularGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.k_min > spec.k_max {
            return invalid(format!("k_min {} exceeds k_max {}", spec.k_min, spec.k_max));
        }
        if spec.n_r < 2 || spec.n_theta < 2 {
            return invalid("need at least two nodes per direction");
        }
        let mut r_nodes = Vec::new();
        let mut r_weights = Vec::new();
        for k in spec.k_min..=spec.k_max {
            let (lo, hi) = annulus_bounds(k);
            let (x, w) = gauss_legendre(spec.n_r, lo, hi);
            r_nodes.extend(x);
            r_weights.extend(w);
        }
        let theta_nodes = (0..spec.n_theta).map(|j| 2.0 * PI * j as f64 / spec.n_theta as f64).collect();
        Ok(RadialAngularGrid { spec, r_nodes, r_weights, theta_nodes })
    }

    pub fn shared(spec: GridSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn k_min(&self) -> i32 {
        self.spec.k_min
    }
    pub fn k_max(&self) -> i32 {
        self.spec.k_max
    }
    pub fn n_r(&self) -> usize {
        self.spec.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }
    pub fn n_annuli(&self) -> usize {
        (self.spec.k_max - self.spec.k_min + 1) as usize
    }
    pub fn n_radial(&self) -> usize {
        self.r_nodes.len()
    }
    pub fn len(&self) -> usize {
        self.n_radial() * self.spec.n_theta
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }
    pub fn r_weights(&self) -> &[f64] {
        &self.r_weights
    }
    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.spec.n_theta as f64
    }
    /// Flat index of node `(radial index, angular index)`.
    pub fn index(&self, ir: usize, j: usize) -> usize {
        ir * self.spec.n_theta + j
    }
    /// Quadrature weight of `dr dθ` at flat index `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        self.r_weights[idx / self.spec.n_theta] * self.dtheta()
    }
    /// `(r, θ)` of flat index `idx`.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let n = self.spec.n_theta;
        (self.r_nodes[idx / n], self.theta_nodes[idx % n])
    }
    /// Annulus label of radial index `ir`.
    pub fn annulus_of(&self, ir: usize) -> i32 {
        self.spec.k_min + (ir / self.spec.n_r) as i32
    }
    /// Radial-index range of annulus `k`.
    pub fn annulus_range(&self, k: i32) -> std::ops::Range<usize> {
        let a = (k - self.spec.k_min) as usize * self.spec.n_r;
        a..a + self.spec.n_r
    }
    /// Annulus containing radius `r`, if it lies inside the grid.
    pub fn locate_annulus(&self, r: f64) -> Option<i32> {
        if !(r > 0.0) || !r.is_finite() {
            return None;
        }
        let k = r.log2().floor() as i32 + 1;
        // Guard against rounding at exact powers of two.
        let k = if r < annulus_bounds(k).0 {
            k - 1
        } else if r >= annulus_bounds(k).1 {
            k + 1
        } else {
            k
        };
        (self.spec.k_min..=self.spec.k_max).contains(&k).then_some(k)
    }
    pub fn inner_radius(&self) -> f64 {
        annulus_bounds(self.spec.k_min).0
    }
    pub fn outer_radius(&self) -> f64 {
        annulus_bounds(self.spec.k_max).1
    }
    pub fn same_as(&self, other: &RadialAngularGrid) -> bool {
        self.spec == other.spec
    }
}

/// `[2^{k-1}, 2^k)`.
pub fn annulus_bounds(k: i32) -> (f64, f64) {
    (2f64.powi(k - 1), 2f64.powi(k))
}

/// A function on the cone, sampled at the nodes of a grid.
#[derive(Clone, Debug)]
pub struct ConeFunction {
    grid: Arc<RadialAngularGrid>,
    samples: Vec<Complex64>,
    nonnegative: bool,
}

impl ConeFunction {
    pub fn zeros(grid: Arc<RadialAngularGrid>) -> Self {
        let n = grid.len();
        ConeFunction { grid, samples: vec![Complex64::new(0.0, 0.0); n], nonnegative: true }
    }

    pub fn from_samples(grid: Arc<RadialAngularGrid>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(LabError::GridMismatch(format!("{} samples for {} nodes", samples.len(), grid.len())));
        }
        let nonnegative = samples.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
        Ok(ConeFunction { grid, samples, nonnegative })
    }

    pub fn from_real(grid: Arc<RadialAngularGrid>, values: Vec<f64>) -> Result<Self> {
        Self::from_samples(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(r, θ)` at every node.
    pub fn from_fn(grid: Arc<RadialAngularGrid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|i| {
            let (r, t) = grid.node(i);
            f(r, t)
        });
        let samples: Vec<_> = samples.collect();
        let nonnegative = samples.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
        ConeFunction { grid, samples, nonnegative }
    }

    pub fn from_real_fn(grid: Arc<RadialAngularGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |r, t| Complex64::new(f(r, t), 0.0))
    }

    pub fn grid(&self) -> &Arc<RadialAngularGrid> {
        &self.grid
    }
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        self.nonnegative = false;
        &mut self.samples
    }
    /// True when every sample is real and `>= 0`; such functions stay in the
    /// nonnegative class under pullbacks.
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }
    pub(crate) fn set_nonnegative_flag(&mut self) {
        self.nonnegative = self.samples.iter().all(|z| z.im == 0.0 && z.re >= 0.0);
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let samples: Vec<_> = self.samples.iter().map(|&z| f(z)).collect();
        let mut out = ConeFunction { grid: self.grid.clone(), samples, nonnegative: false };
        out.set_nonnegative_flag();
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.map(|z| z * c);
        out.nonnegative = self.nonnegative && c >= 0.0;
        out
    }

    pub fn abs(&self) -> Self {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    /// Real positive part, `max(Re f, 0)`.
    pub fn positive_part(&self) -> Self {
        let mut out = self.map(|z| Complex64::new(z.re.max(0.0), 0.0));
        out.nonnegative = true;
        out
    }

    /// Pointwise `f * mask`, mask given per node.
    pub fn masked(&self, mask: &[bool]) -> Self {
        let samples =
            self.samples.iter().zip(mask).map(|(&z, &m)| if m { z } else { Complex64::new(0.0, 0.0) }).collect();
        ConeFunction { grid: self.grid.clone(), samples, nonnegative: self.nonnegative }
    }

    pub fn check_same_grid(&self, other: &ConeFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!("{:?} vs {:?}", self.grid.spec(), other.grid.spec())))
        }
    }

    pub fn add(&self, other: &ConeFunction) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }
    pub fn sub(&self, other: &ConeFunction) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }
    pub fn linear_combination(&self, a: f64, other: &ConeFunction, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| x * a + y * b).collect();
        ConeFunction::from_samples(self.grid.clone(), samples)
    }

    /// `‖f‖₂` in `L²(σ)`.
    pub fn l2_norm(&self) -> f64 {
        l2_norm(self)
    }

    /// `∫ |f|² dσ` restricted to annulus `k`.
    pub fn annulus_mass(&self, k: i32) -> f64 {
        let n = self.grid.n_theta();
        self.grid
            .annulus_range(k)
            .map(|ir| {
                let s: f64 = self.samples[ir * n..(ir + 1) * n].iter().map(|z| z.norm_sqr()).sum();
                s * self.grid.r_weights()[ir] * self.grid.dtheta()
            })
            .sum()
    }

    /// Writes `r,theta,re,im` rows plus a TOML sidecar describing the grid.
    pub fn write_snapshot(&self, csv_path: &Path, descriptor_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["r", "theta", "re", "im"])?;
        for (i, z) in self.samples.iter().enumerate() {
            let (r, t) = self.grid.node(i);
            w.write_record(&[fmt(r), fmt(t), fmt(z.re), fmt(z.im)])?;
        }
        w.flush()?;
        let desc = SnapshotDescriptor { grid: self.grid.spec(), nonnegative: self.nonnegative };
        let text = toml::to_string(&desc).map_err(|e| LabError::Parse(e.to_string()))?;
        std::fs::write(descriptor_path, text)?;
        Ok(())
    }

    pub fn read_snapshot(csv_path: &Path, descriptor_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(descriptor_path)?;
        let desc: SnapshotDescriptor = toml::from_str(&text).map_err(|e| LabError::Parse(e.to_string()))?;
        let grid = RadialAngularGrid::shared(desc.grid)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let mut samples = Vec::with_capacity(grid.len());
        for rec in rdr.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| LabError::Parse("short row".into()))?
                    .parse::<f64>()
                    .map_err(|e| LabError::Parse(e.to_string()))
            };
            samples.push(Complex64::new(get(2)?, get(3)?));
        }
        let mut f = ConeFunction::from_samples(grid, samples)?;
        if desc.nonnegative {
            f.nonnegative = true;
        }
        Ok(f)
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotDescriptor {
    grid: GridSpec,
    nonnegative: bool,
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// A cap `[2^{k-1}, 2^k) × J`, with `J = [theta_lo, theta_hi)` read modulo `2π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub k: i32,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl Cap {
    pub fn new(k: i32, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        let w = theta_hi - theta_lo;
        if !(w > 0.0) || w > 2.0 * PI * (1.0 + 1e-15) || !theta_lo.is_finite() {
            return invalid(format!("angular interval [{theta_lo}, {theta_hi}] must have length in (0, 2π]"));
        }
        Ok(Cap { k, theta_lo, theta_hi: theta_lo + w.min(2.0 * PI) })
    }
    pub fn full_annulus(k: i32) -> Self {
        Cap { k, theta_lo: 0.0, theta_hi: 2.0 * PI }
    }
    pub fn width(&self) -> f64 {
        self.theta_hi - self.theta_lo
    }
    pub fn center(&self) -> f64 {
        0.5 * (self.theta_lo + self.theta_hi)
    }
    /// `σ(cap) = 2^{k-1}|J|`.
    pub fn measure(&self) -> f64 {
        2f64.powi(self.k - 1) * self.width()
    }
    pub fn contains_angle(&self, theta: f64) -> bool {
        self.width() >= 2.0 * PI || (theta - self.theta_lo).rem_euclid(2.0 * PI) < self.width()
    }
    pub fn contains(&self, r: f64, theta: f64) -> bool {
        let (lo, hi) = annulus_bounds(self.k);
        r >= lo && r < hi && self.contains_angle(theta)
    }
    /// Per-node membership on a grid.
    pub fn mask(&self, grid: &RadialAngularGrid) -> Vec<bool> {
        (0..grid.len())
            .map(|i| {
                let (r, t) = grid.node(i);
                self.contains(r, t)
            })
            .collect()
    }
}

pub fn cap_measure(c: &Cap) -> f64 {
    c.measure()
}

/// `f·χ_cap`.
pub fn restrict_to_cap(f: &ConeFunction, c: &Cap) -> ConeFunction {
    f.masked(&c.mask(f.grid()))
}

/// `f_k = f·χ_{2^{k-1} <= |y| < 2^k}`.
pub fn annulus_component(f: &ConeFunction, k: i32) -> Result<ConeFunction> {
    let grid = f.grid();
    if k < grid.k_min() || k > grid.k_max() {
        return invalid(format!("annulus {k} outside [{}, {}]", grid.k_min(), grid.k_max()));
    }
    let range = grid.annulus_range(k);
    let n = grid.n_theta();
    let mask: Vec<bool> = (0..grid.len()).map(|i| range.contains(&(i / n))).collect();
    Ok(f.masked(&mask))
}

/// `∫ f dσ`.
pub fn cone_integral(f: &ConeFunction) -> Complex64 {
    f.samples.iter().enumerate().map(|(i, z)| z * f.grid.weight(i)).sum()
}

/// `‖f‖₂` in `L²(σ)`.
pub fn l2_norm(f: &ConeFunction) -> f64 {
    f.samples.iter().enumerate().map(|(i, z)| z.norm_sqr() * f.grid.weight(i)).sum::<f64>().sqrt()
}

/// `⟨f, g⟩ = ∫ f ḡ dσ`.
pub fn inner_product(f: &ConeFunction, g: &ConeFunction) -> Result<Complex64> {
    f.check_same_grid(g)?;
    Ok(f.samples.iter().zip(&g.samples).enumerate().map(|(i, (a, b))| a * b.conj() * f.grid.weight(i)).sum())
}

/// `‖f‖_p` in `L^p(σ)`.
pub fn lp_norm(f: &ConeFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("L^p norm needs p >= 1, got {p}"));
    }
    if p.is_infinite() {
        return Ok(f.samples.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let s: f64 = f.samples.iter().enumerate().map(|(i, z)| z.norm().powf(p) * f.grid.weight(i)).sum();
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialAngularGrid> {
        RadialAngularGrid::shared(GridSpec::default()).unwrap()
    }

    #[test]
    fn integral_of_exponential_matches_truncated_closed_form() {
        let g = grid();
        let f = ConeFunction::from_real_fn(g.clone(), |r, _| (-r).exp());
        let exact = 2.0 * PI * ((-g.inner_radius()).exp() - (-g.outer_radius()).exp());
        assert!((cone_integral(&f).re - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn normalised_ground_state_has_nearly_unit_norm() {
        let g = grid();
        let f = ConeFunction::from_real_fn(g.clone(), |r, _| (-r).exp() / PI.sqrt());
        let exact = ((-2.0 * g.inner_radius()).exp() - (-2.0 * g.outer_radius()).exp()).sqrt();
        assert!((l2_norm(&f) - exact).abs() < 1e-12);
        assert!((1.0 - l2_norm(&f)) < 1e-7);
    }

    #[test]
    fn angular_rule_is_exact_for_low_harmonics() {
        let g = grid();
        let f = ConeFunction::from_real_fn(g.clone(), |r, t| (-r).exp() * (1.0 + (5.0 * t).cos()));
        let plain = ConeFunction::from_real_fn(g, |r, _| (-r).exp());
        assert!((cone_integral(&f) - cone_integral(&plain)).norm() < 1e-12);
    }

    #[test]
    fn lp_norm_rejects_small_exponents() {
        let f = ConeFunction::zeros(grid());
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(lp_norm(&f, 1.0).is_ok());
    }

    #[test]
    fn locate_annulus_at_boundaries() {
        let g = grid();
        assert_eq!(g.locate_annulus(1.0), Some(1));
        assert_eq!(g.locate_annulus(0.999), Some(0));
        assert_eq!(g.locate_annulus(0.5), Some(0));
        assert_eq!(g.locate_annulus(64.0), None);
        assert_eq!(g.locate_annulus(0.0), None);
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = RadialAngularGrid::shared(GridSpec { k_min: -1, k_max: 1, n_r: 4, n_theta: 8 }).unwrap();
        let f = ConeFunction::from_fn(g, |r, t| Complex64::new(r * t.cos(), -r));
        let (c, d) = (dir.path().join("f.csv"), dir.path().join("f.toml"));
        f.write_snapshot(&c, &d).unwrap();
        let h = ConeFunction::read_snapshot(&c, &d).unwrap();
        assert!(f.sub(&h).unwrap().l2_norm() < 1e-14);
    }

    #[test]
    fn cap_measures_and_restriction() {
        assert!((Cap::new(0, 0.0, PI).unwrap().measure() - PI / 2.0).abs() < 1e-15);
        assert!((Cap::full_annulus(1).measure() - 2.0 * PI).abs() < 1e-15);
        assert!((Cap::new(3, 0.0, 0.5).unwrap().measure() - 2.0).abs() < 1e-15);
        assert!(Cap::new(0, 1.0, 1.0).is_err());
        let g = grid();
        let one = ConeFunction::from_real_fn(g.clone(), |_, _| 1.0);
        let half = restrict_to_cap(&one, &Cap::new(0, 0.0, PI).unwrap());
        assert!((cone_integral(&half).re - PI / 2.0).abs() < 1e-13);
        let wrapped = restrict_to_cap(&one, &Cap::new(0, 1.5 * PI, 2.5 * PI).unwrap());
        assert!((cone_integral(&wrapped).re - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn annulus_components_partition_the_function() {
        let g = grid();
        let f = ConeFunction::from_real_fn(g.clone(), |r, t| (-r).exp() * (2.0 + t.sin()));
        let mut sum = ConeFunction::zeros(g.clone());
        let mut sq = 0.0;
        for k in g.k_min()..=g.k_max() {
            let fk = annulus_component(&f, k).unwrap();
            sq += fk.l2_norm().powi(2);
            sum = sum.add(&fk).unwrap();
        }
        assert_eq!(sum.samples(), f.samples());
        assert!((sq - f.l2_norm().powi(2)).abs() < 1e-12);
        let e = ConeFunction::from_real_fn(g.clone(), |r, _| (-r).exp());
        let e0 = annulus_component(&e, 0).unwrap();
        let expected = 2.0 * PI * ((-0.5f64).exp() - (-1f64).exp());
        assert!((lp_norm(&e0, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!(annulus_component(&e, 40).is_err());
    }
}
