//! One-dimensional quadrature and interpolation helpers.

use gauss_quad::GaussLegendre;
use ndarray::Array2;
use std::num::NonZeroUsize;

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let rule = GaussLegendre::new(NonZeroUsize::new(n).unwrap());
    let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    pairs.into_iter().map(|(x, w)| (mid + half * x, half * w)).unzip()
}

/// Composite rule: `panels` equal panels of `order`-point Gauss–Legendre.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * order);
    let mut w = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let (xp, wp) = gauss_legendre(order, lo, lo + h);
        x.extend(xp);
        w.extend(wp);
    }
    (x, w)
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    // Rescale to keep the products bounded for many nodes.
    let span = nodes.iter().cloned().fold(f64::MIN, f64::max) - nodes.iter().cloned().fold(f64::MAX, f64::min);
    let scale = if span > 0.0 { 4.0 / span } else { 1.0 };
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= (nodes[j] - nodes[k]) * scale;
            }
        }
    }
    w
}

/// Lagrange basis values at `x`, written into `out`.
pub fn lagrange_row(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    for (j, &xj) in nodes.iter().enumerate() {
        if x == xj {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[j] = 1.0;
            return;
        }
    }
    let mut denom = 0.0;
    for j in 0..nodes.len() {
        let t = bary[j] / (x - nodes[j]);
        out[j] = t;
        denom += t;
    }
    out.iter_mut().for_each(|v| *v /= denom);
}

/// Matrix `P` with `P[(i, j)] = ℓ_j(dst_i)` for the interpolant through `src`.
pub fn interpolation_matrix(src: &[f64], dst: &[f64]) -> Array2<f64> {
    let bary = barycentric_weights(src);
    let mut p = Array2::zeros((dst.len(), src.len()));
    let mut row = vec![0.0; src.len()];
    for (i, &x) in dst.iter().enumerate() {
        lagrange_row(src, &bary, x, &mut row);
        for (j, v) in row.iter().enumerate() {
            p[(i, j)] = *v;
        }
    }
    p
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive 7/15 Gauss–Kronrod quadrature. Returns `(value, error estimate)`.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let mut stack = vec![(a, b, kronrod15(&f, a, b))];
    let mut done_val = 0.0;
    let mut done_err = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, (v, e))) = stack.pop() {
        let total: f64 = done_val + v + stack.iter().map(|s| s.2 .0).sum::<f64>();
        let allowed = abs_tol.max(rel_tol * total.abs()) * (hi - lo) / (b - a);
        evaluations += 1;
        if e <= allowed || evaluations > 20_000 || (hi - lo).abs() < 1e-14 * (b - a).abs() {
            done_val += v;
            done_err += e;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, kronrod15(&f, lo, mid)));
        stack.push((mid, hi, kronrod15(&f, mid, hi)));
    }
    (done_val, done_err)
}

/// Integral over the whole real line, split as `[-l, l]` plus two tails mapped by `x = ±l / w²`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, l: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let (core, e0) = adaptive_gauss_kronrod(&f, -l, l, abs_tol, rel_tol);
    let tail = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let x = l / (w * w);
        let jac = 2.0 * l / (w * w * w);
        (f(x) + f(-x)) * jac
    };
    let (t, e1) = adaptive_gauss_kronrod(tail, 0.0, 1.0, abs_tol, rel_tol);
    (core + t, e0 + e1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5, 0.0, 2.0);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-11);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn composite_rule_covers_interval() {
        let (x, w) = composite_gauss_legendre(-1.0, 3.0, 8, 4);
        assert_eq!(x.len(), 32);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
        assert!((v - (3f64.exp() - (-1f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let (src, _) = gauss_legendre(8, 1.0, 2.0);
        let dst = [1.0, 1.25, 1.5, 1.99, 2.0];
        let p = interpolation_matrix(&src, &dst);
        for (i, &x) in dst.iter().enumerate() {
            let v: f64 = (0..8).map(|j| p[(i, j)] * src[j].powi(7)).sum();
            assert!((v - x.powi(7)).abs() < 1e-10, "{v} vs {}", x.powi(7));
        }
    }

    #[test]
    fn kronrod_handles_peaks_and_real_line() {
        let (v, _) = adaptive_gauss_kronrod(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-13, 1e-13);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-9 * exact);
        let (g, _) = integrate_real_line(|x: f64| (-x * x).exp(), 3.0, 1e-14, 1e-13);
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let (c, _) = integrate_real_line(|x: f64| 1.0 / (1.0 + x * x), 2.0, 1e-14, 1e-13);
        assert!((c - std::f64::consts::PI).abs() < 1e-11);
    }
}
