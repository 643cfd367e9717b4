//! Brute-force product quadrature of `Tf` on the cone grid.
//!
//! Accurate only while the phase `r(ρ cos(θ−φ) + t)` is resolved by the
//! grid nodes; kept as an independent reference for the harmonic path.

use crate::cone::ConeFunction;
use num_complex::Complex64;
use rayon::prelude::*;

pub fn extend_direct(f: &ConeFunction, points: &[[f64; 3]]) -> Vec<Complex64> {
    let grid = f.grid();
    let nodes: Vec<(f64, f64, f64, Complex64)> = (0..grid.len())
        .filter(|&i| f.samples()[i] != Complex64::new(0.0, 0.0))
        .map(|i| {
            let (r, th) = grid.node(i);
            (r * th.cos(), r * th.sin(), r, f.samples()[i] * grid.weight(i))
        })
        .collect();
    points
        .par_iter()
        .map(|p| {
            nodes.iter().map(|&(y1, y2, r, w)| w * Complex64::from_polar(1.0, p[0] * y1 + p[1] * y2 + p[2] * r)).sum()
        })
        .collect()
}
