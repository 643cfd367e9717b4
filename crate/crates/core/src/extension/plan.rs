//! Fast evaluation of `T` and its adjoint through angular harmonics.
//!
//! With `f(r, θ) = Σ_m μ_m f̂_m(r) e^{imθ}` (`μ = ½` on the two Nyquist
//! modes), the Jacobi–Anger expansion gives
//! `Tf(ρ, φ, t) = Σ_m e^{imφ} 2π i^m ∫ f̂_m(r) J_m(rρ) e^{itr} dr`.
//! On every annulus `f̂_m` is the degree `n_r − 1` interpolant of its nodal
//! values, and the oscillatory `r`-integral is done on a finer
//! Gauss–Legendre rule sized to the largest phase frequency of the box.
//! The adjoint is the exact transpose of this discrete map with respect to
//! the grid and box quadrature inner products.

use super::{SpaceTimeBox, SpaceTimeField};
use crate::bessel::bessel_j_sequence;
use crate::cone::{annulus_bounds, ConeFunction, RadialAngularGrid};
use crate::error::{invalid, LabError, Result};
use crate::quadrature::{gauss_legendre, interpolation_matrix};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Largest fine rule allowed on an annulus that carries mass.
pub const FINE_NODE_BUDGET: usize = 4096;
/// Radial `L²` share ignored when estimating the frequency content of `f`.
pub const NYQUIST_MASS_TOL: f64 = 1e-4;
/// Relative size below which a harmonic on an annulus is skipped.
const ACTIVE_TOL: f64 = 1e-14;

fn fine_nodes(n_r: usize, omega: f64, length: f64) -> usize {
    n_r + 12 + (0.5 * omega * length).ceil() as usize
}

fn i_pow(m: i64) -> Complex64 {
    match m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Resolved harmonic range of a grid: `(M, weight of mode m)`.
fn mode_range(n_theta: usize) -> (i64, impl Fn(i64) -> f64) {
    let m = (n_theta / 2) as i64;
    let even = n_theta % 2 == 0;
    (m, move |k: i64| if even && k.abs() == m { 0.5 } else { 1.0 })
}

struct AnnulusTables {
    coarse_start: usize,
    fine_w: Vec<f64>,
    /// `n_fine × n_r`.
    interp: Array2<f64>,
    /// Indexed by `m = 0..=M`, each `n_rho × n_fine`.
    bessel: Vec<Array2<f64>>,
    /// `n_fine × n_t`.
    cos_tr: Array2<f64>,
    sin_tr: Array2<f64>,
}

/// Whether the box can resolve a given function, and why.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolutionReport {
    /// Radius beyond which `f` carries less than [`NYQUIST_MASS_TOL`] of its `L²` mass.
    pub effective_radius: f64,
    pub box_spacing: f64,
    /// `effective_radius · box_spacing`; must not exceed `π`.
    pub phase_per_node: f64,
    pub fine_nodes: Vec<usize>,
    pub fine_budget_ok: bool,
    pub satisfied: bool,
}

/// Precomputed tables for repeated transforms between one grid and one box.
pub struct ExtensionPlan {
    grid: Arc<RadialAngularGrid>,
    bx: Arc<SpaceTimeBox>,
    modes: i64,
    annuli: Vec<AnnulusTables>,
    fine_counts: Vec<usize>,
    force: bool,
    theta_fwd: Arc<dyn Fft<f64>>,
    theta_inv: Arc<dyn Fft<f64>>,
    phi_fwd: Arc<dyn Fft<f64>>,
    phi_inv: Arc<dyn Fft<f64>>,
}

impl ExtensionPlan {
    pub fn new(grid: Arc<RadialAngularGrid>, bx: Arc<SpaceTimeBox>) -> Result<Self> {
        let n_theta = grid.n_theta();
        let (modes, _) = mode_range(n_theta);
        if bx.n_phi() < 2 * modes as usize + 1 && bx.n_phi() != 1 {
            return invalid(format!(
                "box has {} angular nodes; the grid's {} harmonics need at least {}",
                bx.n_phi(),
                2 * modes + 1,
                2 * modes + 1
            ));
        }
        let spec = bx.spec();
        let omega = spec.radius + spec.half_time;
        let mut annuli = Vec::new();
        let mut fine_counts = Vec::new();
        for k in grid.k_min()..=grid.k_max() {
            let (lo, hi) = annulus_bounds(k);
            let n_fine = fine_nodes(grid.n_r(), omega, hi - lo);
            fine_counts.push(n_fine);
            let build = n_fine <= FINE_NODE_BUDGET;
            let range = grid.annulus_range(k);
            let coarse = &grid.r_nodes()[range.clone()];
            let (fr, fw) = if build { gauss_legendre(n_fine, lo, hi) } else { (Vec::new(), Vec::new()) };
            let interp = interpolation_matrix(coarse, &fr);
            let kept_modes = if bx.n_phi() == 1 { 0 } else { modes as usize };
            let bessel = bessel_tables(bx.rho(), &fr, kept_modes);
            let n_t = bx.n_t();
            let mut cos_tr = Array2::zeros((fr.len(), n_t));
            let mut sin_tr = Array2::zeros((fr.len(), n_t));
            for (i, &r) in fr.iter().enumerate() {
                for (l, &t) in bx.t().iter().enumerate() {
                    let (s, c) = (t * r).sin_cos();
                    cos_tr[(i, l)] = c;
                    sin_tr[(i, l)] = s;
                }
            }
            annuli.push(AnnulusTables { coarse_start: range.start, fine_w: fw, interp, bessel, cos_tr, sin_tr });
        }
        let mut planner = FftPlanner::new();
        Ok(ExtensionPlan {
            theta_fwd: planner.plan_fft_forward(n_theta),
            theta_inv: planner.plan_fft_inverse(n_theta),
            phi_fwd: planner.plan_fft_forward(bx.n_phi()),
            phi_inv: planner.plan_fft_inverse(bx.n_phi()),
            grid,
            bx,
            modes,
            annuli,
            fine_counts,
            force: false,
        })
    }

    /// Skip the resolution check (it is still reported).
    pub fn forced(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn grid(&self) -> &Arc<RadialAngularGrid> {
        &self.grid
    }
    pub fn space_time_box(&self) -> &Arc<SpaceTimeBox> {
        &self.bx
    }

    fn active_modes(&self) -> i64 {
        if self.bx.n_phi() == 1 {
            0
        } else {
            self.modes
        }
    }

    pub fn resolution(&self, f: &ConeFunction) -> ResolutionReport {
        let grid = &self.grid;
        let n = grid.n_theta();
        let masses: Vec<f64> = (0..grid.n_radial())
            .map(|ir| {
                let s: f64 = f.samples()[ir * n..(ir + 1) * n].iter().map(|z| z.norm_sqr()).sum();
                s * grid.r_weights()[ir]
            })
            .collect();
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let mut effective_radius = 0.0;
        for ir in (0..grid.n_radial()).rev() {
            acc += masses[ir];
            if acc > NYQUIST_MASS_TOL * total {
                effective_radius = grid.r_nodes()[ir];
                break;
            }
        }
        // Same activity rule as the transform: annuli whose harmonics all sit
        // below ACTIVE_TOL of the largest one are never evaluated.
        let fhat = self.harmonics(f);
        let scale = fhat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut fine_budget_ok = true;
        for (a, &count) in self.fine_counts.iter().enumerate() {
            let rows = a * grid.n_r()..(a + 1) * grid.n_r();
            let peak = rows.flat_map(|ir| fhat.row(ir).to_vec()).map(|z| z.norm()).fold(0.0, f64::max);
            if count > FINE_NODE_BUDGET && peak > ACTIVE_TOL * scale {
                fine_budget_ok = false;
            }
        }
        let box_spacing = self.bx.max_spacing();
        let phase_per_node = effective_radius * box_spacing;
        ResolutionReport {
            effective_radius,
            box_spacing,
            phase_per_node,
            fine_nodes: self.fine_counts.clone(),
            fine_budget_ok,
            satisfied: fine_budget_ok && phase_per_node <= PI,
        }
    }

    fn check(&self, f: &ConeFunction) -> Result<()> {
        if !f.grid().same_as(&self.grid) {
            return Err(LabError::GridMismatch("function grid differs from plan grid".into()));
        }
        if self.bx.n_phi() == 1 && !self.force && angular_share(f) > 1e-10 {
            return Err(LabError::InvalidParameter("an axisymmetric box only extends radial functions".into()));
        }
        let rep = self.resolution(f);
        if !rep.fine_budget_ok {
            return Err(LabError::Nyquist("an annulus with mass needs more fine nodes than the budget".into()));
        }
        if !rep.satisfied && !self.force {
            return Err(LabError::Nyquist(format!(
                "box spacing {:.3} cannot resolve radius {:.3} (phase {:.3} > π per node)",
                rep.box_spacing, rep.effective_radius, rep.phase_per_node
            )));
        }
        Ok(())
    }

    /// Angular Fourier coefficients `f̂_m(r_i)`, `n_radial × n_theta`, bin order.
    fn harmonics(&self, f: &ConeFunction) -> Array2<Complex64> {
        let n = self.grid.n_theta();
        let nr = self.grid.n_radial();
        let mut out = Array2::zeros((nr, n));
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for ir in 0..nr {
            buf.copy_from_slice(&f.samples()[ir * n..(ir + 1) * n]);
            self.theta_fwd.process(&mut buf);
            for (b, v) in buf.iter().enumerate() {
                out[(ir, b)] = v / n as f64;
            }
        }
        out
    }

    /// `Tf` at every box node, after the resolution check.
    ///
    /// On an axisymmetric box (`n_angular = 1`) only the `m = 0` mode is
    /// evaluated, so `f` must be radial unless the plan is forced.
    pub fn extend(&self, f: &ConeFunction) -> Result<SpaceTimeField> {
        self.check(f)?;
        Ok(self.extend_unchecked(f))
    }

    /// [`extend`](Self::extend) with the fitted-extremizer tail attached.
    pub fn extend_with_tail(&self, f: &ConeFunction) -> Result<SpaceTimeField> {
        let field = self.extend(f)?;
        let tail = super::tail::fitted_tail(f, &field);
        Ok(field.with_tail(tail))
    }

    pub fn extend_unchecked(&self, f: &ConeFunction) -> SpaceTimeField {
        let grid = &self.grid;
        let bx = &self.bx;
        let n_theta = grid.n_theta();
        let (n_rho, n_t) = (bx.n_rho(), bx.n_t());
        let big_m = self.active_modes();
        let (_, mu) = mode_range(n_theta);
        let fhat = self.harmonics(f);
        let scale = fhat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let zero = Complex64::new(0.0, 0.0);
        if scale == 0.0 {
            return SpaceTimeField::zeros(bx.clone());
        }
        let n_r = grid.n_r();
        // Per m >= 0: (H_m, H_{-m}), each n_rho × n_t.
        let pairs: Vec<(Array2<Complex64>, Array2<Complex64>)> = (0..=big_m)
            .into_par_iter()
            .map(|m| {
                let mut hp = Array2::from_elem((n_rho, n_t), zero);
                let mut hm = Array2::from_elem((n_rho, n_t), zero);
                let bp = (m as usize) % n_theta;
                let bm = (-m).rem_euclid(n_theta as i64) as usize;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let cp = 2.0 * PI * mu(m) * i_pow(m);
                let cm = 2.0 * PI * mu(-m) * i_pow(-m) * sign;
                for at in &self.annuli {
                    let coarse = at.coarse_start..at.coarse_start + n_r;
                    let vp: Vec<Complex64> = coarse.clone().map(|ir| fhat[(ir, bp)]).collect();
                    let vm: Vec<Complex64> = coarse.map(|ir| fhat[(ir, bm)]).collect();
                    let peak = vp.iter().chain(&vm).map(|z| z.norm()).fold(0.0, f64::max);
                    if peak <= ACTIVE_TOL * scale || at.fine_w.is_empty() {
                        continue;
                    }
                    let n_fine = at.fine_w.len();
                    let cols = if m == 0 { 2 * n_t } else { 4 * n_t };
                    let mut b = Array2::<f64>::zeros((n_fine, cols));
                    for i in 0..n_fine {
                        let mut ip = zero;
                        let mut im = zero;
                        for c in 0..n_r {
                            ip += vp[c] * at.interp[(i, c)];
                            im += vm[c] * at.interp[(i, c)];
                        }
                        let qp = cp * ip * at.fine_w[i];
                        let qm = cm * im * at.fine_w[i];
                        for l in 0..n_t {
                            let (co, si) = (at.cos_tr[(i, l)], at.sin_tr[(i, l)]);
                            b[(i, l)] = qp.re * co - qp.im * si;
                            b[(i, n_t + l)] = qp.re * si + qp.im * co;
                            if m != 0 {
                                b[(i, 2 * n_t + l)] = qm.re * co - qm.im * si;
                                b[(i, 3 * n_t + l)] = qm.re * si + qm.im * co;
                            }
                        }
                    }
                    let r = at.bessel[m as usize].dot(&b);
                    for j in 0..n_rho {
                        for l in 0..n_t {
                            hp[(j, l)] += Complex64::new(r[(j, l)], r[(j, n_t + l)]);
                            if m != 0 {
                                hm[(j, l)] += Complex64::new(r[(j, 2 * n_t + l)], r[(j, 3 * n_t + l)]);
                            }
                        }
                    }
                }
                (hp, hm)
            })
            .collect();
        let n_phi = bx.n_phi();
        let mut samples = vec![zero; bx.len()];
        samples.par_chunks_mut(n_rho * n_phi).enumerate().for_each(|(l, chunk)| {
            for j in 0..n_rho {
                let buf = &mut chunk[j * n_phi..(j + 1) * n_phi];
                for (m, (hp, hm)) in pairs.iter().enumerate() {
                    buf[m % n_phi] += hp[(j, l)];
                    if m != 0 {
                        buf[(n_phi - m % n_phi) % n_phi] += hm[(j, l)];
                    }
                }
                if n_phi > 1 {
                    self.phi_inv.process(buf);
                }
            }
        });
        SpaceTimeField { bx: bx.clone(), samples, tail: super::TailEstimate::none() }
    }

    /// `T*F(y) ≈ ∭ e^{-i(x·y + t|y|)} F(x, t) dx dt`, the transpose of
    /// [`extend`](Self::extend) for the box and grid inner products.
    pub fn adjoint(&self, field: &SpaceTimeField) -> Result<ConeFunction> {
        let bx = &self.bx;
        if !field.space_time_box().same_as(bx) {
            return Err(LabError::GridMismatch("field box differs from plan box".into()));
        }
        let grid = &self.grid;
        let (n_rho, n_t, n_phi) = (bx.n_rho(), bx.n_t(), bx.n_phi());
        let n_theta = grid.n_theta();
        let n_r = grid.n_r();
        let big_m = self.active_modes();
        let (_, mu) = mode_range(n_theta);
        let zero = Complex64::new(0.0, 0.0);
        // Angular coefficients of the weighted field, per t-row: n_rho × n_phi.
        let rows: Vec<Vec<Complex64>> = (0..n_t)
            .into_par_iter()
            .map(|l| {
                let mut out = vec![zero; n_rho * n_phi];
                for j in 0..n_rho {
                    let buf = &mut out[j * n_phi..(j + 1) * n_phi];
                    let start = bx.index(l, j, 0);
                    buf.copy_from_slice(&field.samples()[start..start + n_phi]);
                    if n_phi > 1 {
                        self.phi_fwd.process(buf);
                    }
                    let w = bx.weight(l, j);
                    buf.iter_mut().for_each(|z| *z *= w);
                }
                out
            })
            .collect();
        let per_mode: Vec<(i64, Vec<Complex64>, Vec<Complex64>)> = (0..=big_m)
            .into_par_iter()
            .map(|m| {
                let qp = (m as usize) % n_phi;
                let qm = (-m).rem_euclid(n_phi as i64) as usize;
                let cols = if m == 0 { 2 * n_t } else { 4 * n_t };
                let mut g = Array2::<f64>::zeros((n_rho, cols));
                for l in 0..n_t {
                    for j in 0..n_rho {
                        let zp = rows[l][j * n_phi + qp];
                        g[(j, l)] = zp.re;
                        g[(j, n_t + l)] = zp.im;
                        if m != 0 {
                            let zm = rows[l][j * n_phi + qm];
                            g[(j, 2 * n_t + l)] = zm.re;
                            g[(j, 3 * n_t + l)] = zm.im;
                        }
                    }
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let mut outp = vec![zero; grid.n_radial()];
                let mut outm = vec![zero; grid.n_radial()];
                for at in &self.annuli {
                    if at.fine_w.is_empty() {
                        continue;
                    }
                    let z = at.bessel[m as usize].t().dot(&g);
                    let n_fine = at.fine_w.len();
                    let mut ap = vec![zero; n_fine];
                    let mut am = vec![zero; n_fine];
                    for i in 0..n_fine {
                        let (mut sp, mut sm) = (zero, zero);
                        for l in 0..n_t {
                            let (co, si) = (at.cos_tr[(i, l)], at.sin_tr[(i, l)]);
                            let (zr, zi) = (z[(i, l)], z[(i, n_t + l)]);
                            sp += Complex64::new(co * zr + si * zi, co * zi - si * zr);
                            if m != 0 {
                                let (zr, zi) = (z[(i, 2 * n_t + l)], z[(i, 3 * n_t + l)]);
                                sm += Complex64::new(co * zr + si * zi, co * zi - si * zr);
                            }
                        }
                        ap[i] = sp * at.fine_w[i];
                        am[i] = sm * at.fine_w[i] * sign;
                    }
                    for c in 0..n_r {
                        let ir = at.coarse_start + c;
                        let (mut vp, mut vm) = (zero, zero);
                        for i in 0..n_fine {
                            vp += ap[i] * at.interp[(i, c)];
                            vm += am[i] * at.interp[(i, c)];
                        }
                        let w = grid.r_weights()[ir];
                        outp[ir] = vp / w;
                        outm[ir] = vm / w;
                    }
                }
                (m, outp, outm)
            })
            .collect();
        let mut samples = vec![zero; grid.len()];
        for ir in 0..grid.n_radial() {
            let buf = &mut samples[ir * n_theta..(ir + 1) * n_theta];
            for (m, outp, outm) in &per_mode {
                let m = *m;
                buf[(m as usize) % n_theta] += outp[ir] * mu(m) * i_pow(-m);
                if m != 0 {
                    buf[(-m).rem_euclid(n_theta as i64) as usize] += outm[ir] * mu(-m) * i_pow(m);
                }
            }
            self.theta_inv.process(buf);
        }
        ConeFunction::from_samples(grid.clone(), samples)
    }
}

/// `J_m(ρ_j r_i)` tables for `m = 0..=modes`, each `n_rho × n_fine`.
fn bessel_tables(rho: &[f64], r: &[f64], modes: usize) -> Vec<Array2<f64>> {
    let mut tables = vec![Array2::zeros((rho.len(), r.len())); modes + 1];
    let mut seq = vec![0.0; modes + 1];
    for (j, &p) in rho.iter().enumerate() {
        for (i, &x) in r.iter().enumerate() {
            bessel_j_sequence(p * x, &mut seq);
            for (m, v) in seq.iter().enumerate() {
                tables[m][(j, i)] = *v;
            }
        }
    }
    tables
}

/// `Tf` at arbitrary space-time points `(x1, x2, t)`, through the same
/// harmonic expansion with fine rules sized to the points.
/// Share of `‖f‖₂²` carried by the angular modes `m ≠ 0`.
fn angular_share(f: &ConeFunction) -> f64 {
    let grid = f.grid();
    let n = grid.n_theta();
    let (mut total, mut off) = (0.0, 0.0);
    for ir in 0..grid.n_radial() {
        let ring = &f.samples()[ir * n..(ir + 1) * n];
        let mean = ring.iter().sum::<Complex64>() / n as f64;
        let w = grid.r_weights()[ir];
        total += w * ring.iter().map(|z| z.norm_sqr()).sum::<f64>();
        off += w * ring.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>();
    }
    if total > 0.0 {
        off / total
    } else {
        0.0
    }
}

pub fn extend_at_points(f: &ConeFunction, points: &[[f64; 3]]) -> Result<Vec<Complex64>> {
    let grid = f.grid();
    let n_theta = grid.n_theta();
    let n_r = grid.n_r();
    let (big_m, mu) = mode_range(n_theta);
    let omega = points.iter().map(|p| p[0].hypot(p[1]) + p[2].abs()).fold(0.0, f64::max);
    let mut fwd = FftPlanner::new();
    let fft = fwd.plan_fft_forward(n_theta);
    let mut fhat = vec![Complex64::new(0.0, 0.0); grid.len()];
    for ir in 0..grid.n_radial() {
        let buf = &mut fhat[ir * n_theta..(ir + 1) * n_theta];
        buf.copy_from_slice(&f.samples()[ir * n_theta..(ir + 1) * n_theta]);
        fft.process(buf);
        buf.iter_mut().for_each(|z| *z /= n_theta as f64);
    }
    let scale = fhat.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // Per annulus: fine nodes, and per fine node the coefficient of every mode.
    struct Fine {
        r: Vec<f64>,
        coef: Vec<Vec<(i64, Complex64)>>,
    }
    let mut fines = Vec::new();
    for k in grid.k_min()..=grid.k_max() {
        let range = grid.annulus_range(k);
        let (lo, hi) = annulus_bounds(k);
        let n_fine = fine_nodes(n_r, omega, hi - lo);
        let peak = range
            .clone()
            .flat_map(|ir| fhat[ir * n_theta..(ir + 1) * n_theta].iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if peak <= ACTIVE_TOL * scale {
            continue;
        }
        if n_fine > FINE_NODE_BUDGET {
            return Err(LabError::Nyquist(format!("annulus {k} needs {n_fine} fine nodes")));
        }
        let coarse = &grid.r_nodes()[range.clone()];
        let (fr, fw) = gauss_legendre(n_fine, lo, hi);
        let p = interpolation_matrix(coarse, &fr);
        let mut coef = Vec::with_capacity(n_fine);
        for i in 0..n_fine {
            let mut row = Vec::new();
            for m in -big_m..=big_m {
                let b = m.rem_euclid(n_theta as i64) as usize;
                let mut v = Complex64::new(0.0, 0.0);
                for (c, ir) in range.clone().enumerate() {
                    v += fhat[ir * n_theta + b] * p[(i, c)];
                }
                if v.norm() > ACTIVE_TOL * scale {
                    row.push((m, v * (2.0 * PI * mu(m) * fw[i]) * i_pow(m)));
                }
            }
            coef.push(row);
        }
        fines.push(Fine { r: fr, coef });
    }
    let out = points
        .par_iter()
        .map(|pt| {
            let rho = pt[0].hypot(pt[1]);
            let phi = pt[1].atan2(pt[0]);
            let mut seq = vec![0.0; big_m as usize + 1];
            let mut acc = Complex64::new(0.0, 0.0);
            for fine in &fines {
                for (i, &r) in fine.r.iter().enumerate() {
                    bessel_j_sequence(rho * r, &mut seq);
                    let mut s = Complex64::new(0.0, 0.0);
                    for &(m, c) in &fine.coef[i] {
                        let jm = seq[m.unsigned_abs() as usize];
                        let jm = if m < 0 && m % 2 != 0 { -jm } else { jm };
                        s += c * jm * Complex64::from_polar(1.0, m as f64 * phi);
                    }
                    acc += s * Complex64::from_polar(1.0, pt[2] * r);
                }
            }
            acc
        })
        .collect();
    Ok(out)
}
