use conelab::caps::{b_form, cap_functional, Sampled1d};
use conelab::decomposition::decompose;
use conelab::search::rayleigh_quotient;
use conelab::symmetry::{act_on_cone_point, widen_cap};
use conelab::{
    sharp_constant, BoxSpec, Cap, ConeFunction, ExtensionPlan, GridSpec, RadialAngularGrid, SpaceTimeBox,
    SymmetryElement,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

fn grid() -> Arc<RadialAngularGrid> {
    static G: OnceLock<Arc<RadialAngularGrid>> = OnceLock::new();
    G.get_or_init(|| RadialAngularGrid::shared(GridSpec { k_min: -10, k_max: 4, n_r: 12, n_theta: 16 }).unwrap())
        .clone()
}

fn plan() -> &'static ExtensionPlan {
    static P: OnceLock<ExtensionPlan> = OnceLock::new();
    P.get_or_init(|| {
        let bx =
            SpaceTimeBox::shared(BoxSpec { radius: 12.0, half_time: 12.0, n_radial: 48, n_angular: 32, n_time: 96 })
                .unwrap();
        ExtensionPlan::new(grid(), bx).unwrap()
    })
}

fn bumpy(a: f64, eps: f64, m: u8, phase: f64) -> ConeFunction {
    ConeFunction::from_real_fn(grid(), move |r, t| (-a * r).exp() * (1.0 + eps * (m as f64 * t + phase).cos()))
}

fn element() -> impl Strategy<Value = SymmetryElement> {
    prop_oneof![
        (-0.8..0.8f64).prop_map(|t| SymmetryElement::boost_x(t).unwrap()),
        (-0.8..0.8f64).prop_map(|s| SymmetryElement::boost_y(s).unwrap()),
        (0.0..TAU).prop_map(SymmetryElement::rotation),
        (0.3..3.0f64).prop_map(|l| SymmetryElement::dilation(l).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn b_form_is_symmetric_and_cauchy_schwarz(g in prop::collection::vec(0.0..1.0f64, 16), h in prop::collection::vec(0.0..1.0f64, 16)) {
        let g = Sampled1d::new(0.0, 1.0, g).unwrap();
        let h = Sampled1d::new(0.0, 1.0, h).unwrap();
        let gh = b_form(&g, &h, 0.5).unwrap();
        prop_assert!((gh - b_form(&h, &g, 0.5).unwrap()).abs() <= 1e-12 * gh.abs().max(1.0));
        let gg = b_form(&g, &g, 0.5).unwrap();
        let hh = b_form(&h, &h, 0.5).unwrap();
        prop_assert!(gh * gh <= gg * hh * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn cap_functional_homogeneous_and_monotone(a in 0.5..3.0f64, eps in 0.0..0.9f64, m in 0u8..4, c in 0.1..10.0f64, lift in 0.0..0.5f64) {
        let f = bumpy(a, eps, m, 0.3);
        let s = cap_functional(&f).value;
        let sc = cap_functional(&f.scaled(c)).value;
        prop_assert!((sc - c.powf(1.5) * s).abs() <= 1e-12 * sc);
        let g = ConeFunction::from_real_fn(grid(), |r, t| {
            (-a * r).exp() * (1.0 + eps * (m as f64 * t + 0.3).cos()) * (1.0 + lift * t.sin().abs())
        });
        prop_assert!(cap_functional(&g).value >= s * (1.0 - 1e-14));
    }

    #[test]
    fn composition_and_inverse_act_consistently(g1 in element(), g2 in element(), r in 0.1..5.0f64, th in 0.0..TAU) {
        let y = [r * th.cos(), r * th.sin()];
        let direct = act_on_cone_point(&g1.compose(&g2), y).unwrap();
        let stepwise = act_on_cone_point(&g2, act_on_cone_point(&g1, y).unwrap()).unwrap();
        let scale = r.max(1.0) * 1e-11;
        prop_assert!((direct[0] - stepwise[0]).abs() <= scale && (direct[1] - stepwise[1]).abs() <= scale);
        let back = act_on_cone_point(&g1.inverse(), act_on_cone_point(&g1, y).unwrap()).unwrap();
        prop_assert!((back[0] - y[0]).abs() <= scale && (back[1] - y[1]).abs() <= scale);
        prop_assert!(g1.compose(&g2).form_defect() <= 1e-12);
    }

    #[test]
    fn widened_caps_have_unit_measure(m in 0.01..0.49f64, lo in 0.0..6.0f64) {
        let w = widen_cap(&Cap::new(0, lo, lo + 2.0 * m).unwrap()).unwrap();
        prop_assert!((w.transformed_measure - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decomposition_conserves_energy(a in 0.5..2.0f64, eps in 0.0..0.9f64, m in 0u8..4, phase in 0.0..TAU) {
        let f = bumpy(a, eps, m, phase);
        let d = decompose(&f, 6, 1e-3).unwrap();
        let total = f.l2_norm().powi(2);
        prop_assert!((d.energy() - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn rayleigh_quotient_stays_below_sharp_constant(a in 0.8..1.6f64, eps in 0.0..0.5f64, m in 0u8..3, phase in 0.0..TAU) {
        let q = rayleigh_quotient(&bumpy(a, eps, m, phase), plan()).unwrap();
        prop_assert!(q.corrected <= 1.02 * sharp_constant());
        prop_assert!(q.in_box <= q.corrected);
    }

    #[test]
    fn modulus_does_not_lower_phi(a in 0.8..1.6f64, beta in -1.0..1.0f64, kk in -2i32..3) {
        let g = grid();
        let f = ConeFunction::from_fn(g, move |r, t| (-a * r).exp() * Complex64::from_polar(1.0, beta * r + kk as f64 * t));
        let p = plan();
        let phi = rayleigh_quotient(&f, p).unwrap().corrected;
        let phi_abs = rayleigh_quotient(&f.abs(), p).unwrap().corrected;
        prop_assert!(phi_abs >= phi * (1.0 - 1e-3));
    }
}
