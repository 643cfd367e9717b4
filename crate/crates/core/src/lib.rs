//! Numerical laboratory for the `L²(σ) → L⁶(ℝ³)` extension inequality on
//! the light cone `Γ² = {(y, |y|)}` with `dσ = dy/|y|`.

pub mod bessel;
pub mod caps;
pub mod cone;
pub mod decomposition;
pub mod deficiency;
pub mod error;
pub mod extension;
pub mod family;
pub mod quadrature;
pub mod report;
pub mod search;
pub mod suites;
pub mod symmetry;

pub use cone::{Cap, ConeFunction, GridSpec, RadialAngularGrid};
pub use error::{LabError, Result};
pub use extension::{BoxSpec, ExtensionPlan, NormReport, SpaceTimeBox, SpaceTimeField};
pub use family::{ExtremizerParams, OrbitFit};
pub use symmetry::SymmetryElement;

/// The sharp constant `(2π)^{5/6}`.
pub fn sharp_constant() -> f64 {
    (2.0 * std::f64::consts::PI).powf(5.0 / 6.0)
}
