//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use conelab::extension::plan::extend_at_points;
use conelab::report::{Assertion, Report};
use conelab::suites::{self, LabConfig};
use conelab::{ConeFunction, RadialAngularGrid};
use num_complex::Complex64;
use std::time::{Duration, Instant};

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn pick<'a>(rep: &'a Report, prefixes: &[&str]) -> Vec<&'a Assertion> {
    rep.assertions.iter().filter(|a| prefixes.iter().any(|p| a.name.starts_with(p))).collect()
}

fn summarize(items: &[&Assertion]) -> (bool, String) {
    let passed = !items.is_empty() && items.iter().all(|a| a.passed);
    let failed: Vec<String> =
        items.iter().filter(|a| !a.passed).map(|a| format!("{} = {:e}", a.name, a.value)).collect();
    let detail =
        if failed.is_empty() { format!("{} checks", items.len()) } else { format!("failed: {}", failed.join("; ")) };
    (passed, detail)
}

fn value(rep: &Report, name: &str) -> f64 {
    rep.assertions.iter().find(|a| a.name == name).map_or(f64::NAN, |a| a.value)
}

fn main() {
    let cfg = LabConfig::default();
    let mut lines = Vec::new();
    let fail = |id, title, e: &conelab::LabError| Line { id, title, passed: false, detail: format!("error: {e}") };

    let (constant, t_const) = timed(|| suites::verify_constant(&cfg));
    match &constant {
        Ok(rep) => {
            let a = pick(rep, &["sharp_constant"]);
            let (ok, _) = summarize(&a);
            let ok = ok && t_const.as_secs_f64() <= 60.0;
            lines.push(Line {
                id: 1,
                title: "sharp constant",
                passed: ok,
                detail: format!(
                    "Φ(g₀) = {:.7} vs (2π)^(5/6) = {:.7}, rel err {:.2e} (tol 1e-2), {:.1?}",
                    rep.outputs["phi_g0"].as_f64().unwrap_or(f64::NAN),
                    conelab::sharp_constant(),
                    value(rep, "sharp_constant"),
                    t_const
                ),
            });
        }
        Err(e) => lines.push(fail(1, "sharp constant", &e)),
    }

    // Timed on its own: grid, transform of e^{-r} at 125 points, closed form.
    let (probe, t_probe) = timed(|| -> conelab::Result<f64> {
        let grid = RadialAngularGrid::shared(cfg.grid)?;
        let f = ConeFunction::from_real_fn(grid, |r, _| (-r).exp());
        let lin = |i: usize| -3.0 + 1.5 * i as f64;
        let pts: Vec<[f64; 3]> = (0..125).map(|i| [lin(i % 5), lin((i / 5) % 5), lin(i / 25)]).collect();
        let v = extend_at_points(&f, &pts)?;
        Ok(pts.iter().zip(&v).fold(0.0, |m, (p, z)| {
            let a = Complex64::new(1.0, -p[2]);
            let exact = 2.0 * std::f64::consts::PI / (a * a + p[0] * p[0] + p[1] * p[1]).sqrt();
            f64::max(m, (z - exact).norm() / exact.norm())
        }))
    });
    match probe {
        Ok(err) => lines.push(Line {
            id: 2,
            title: "closed-form oracle",
            passed: err <= 1e-6 && t_probe.as_secs_f64() <= 10.0,
            detail: format!("max rel err {err:.2e} over 5×5×5 points (tol 1e-6), {t_probe:.1?}"),
        }),
        Err(e) => lines.push(fail(2, "closed-form oracle", &e)),
    }

    match &constant {
        Ok(rep) => {
            let (ok, _) = summarize(&pick(rep, &["l6_mass"]));
            lines.push(Line {
                id: 3,
                title: "analytic L6 mass",
                passed: ok,
                detail: format!(
                    "oracle {:.6} = (2π)^5, box+tail {:.6} (rel {:.2e}, tol 1e-2), tail share {:.3}% (tol 0.5%)",
                    rep.outputs["l6_mass_oracle"].as_f64().unwrap_or(f64::NAN),
                    rep.outputs["l6_mass_corrected"].as_f64().unwrap_or(f64::NAN),
                    value(rep, "l6_mass"),
                    100.0 * value(rep, "l6_mass_tail")
                ),
            });
        }
        Err(e) => lines.push(fail(3, "analytic L6 mass", &e)),
    }

    let symmetries = suites::verify_symmetries(&cfg);
    match &symmetries {
        Ok(rep) => {
            let inv = pick(rep, &["l2 ", "l6 ", "integral "]);
            let (ok, detail) = summarize(&inv);
            let worst = |p: &str| pick(rep, &[p]).iter().map(|a| a.value).fold(0.0, f64::max);
            lines.push(Line {
                id: 4,
                title: "symmetry invariances",
                passed: ok,
                detail: format!(
                    "{detail}; worst L2 {:.1e}, ∫dσ {:.1e} (tol 1e-3), L6 {:.1e} (tol 1e-2)",
                    worst("l2 "),
                    worst("integral "),
                    worst("l6 ")
                ),
            });
        }
        Err(e) => lines.push(fail(4, "symmetry invariances", &e)),
    }

    match suites::bilinear_decay(&cfg) {
        Ok(rep) => {
            let (ok, detail) = summarize(&rep.assertions.iter().collect::<Vec<_>>());
            lines.push(Line {
                id: 5,
                title: "bilinear dyadic decay",
                passed: ok,
                detail: format!(
                    "{detail}; growth {:.3} (tol 10), ℓ³ constant {:.3} (tol 10)",
                    value(&rep, "normalized growth"),
                    value(&rep, "l3 constant")
                ),
            });
        }
        Err(e) => lines.push(fail(5, "bilinear dyadic decay", &e)),
    }

    match (suites::cap_extract(&cfg), suites::decompose_suite(&cfg)) {
        (Ok(a), Ok(b)) => {
            let mut all: Vec<&Assertion> = a.assertions.iter().collect();
            all.extend(b.assertions.iter());
            let (ok, detail) = summarize(&all);
            let worst = pick(&b, &["g0 energy", "seed"])
                .iter()
                .filter(|a| a.name.ends_with("energy"))
                .map(|a| a.value)
                .fold(0.0, f64::max);
            lines.push(Line {
                id: 6,
                title: "cap machinery",
                passed: ok,
                detail: format!("{detail}; worst energy error {worst:.1e} (tol 1e-12)"),
            });
        }
        (Err(e), _) | (_, Err(e)) => lines.push(fail(6, "cap machinery", &e)),
    }

    match &symmetries {
        Ok(rep) => {
            let (ok, detail) = summarize(&pick(rep, &["widen "]));
            lines.push(Line { id: 7, title: "widen-cap exactness", passed: ok, detail });
        }
        Err(e) => lines.push(fail(7, "widen-cap exactness", &e)),
    }

    let (search, t_search) = timed(|| suites::search_extremizer(&cfg));
    match search {
        Ok(rep) => {
            let (ok, detail) = summarize(&rep.assertions.iter().collect::<Vec<_>>());
            let phis: Vec<String> = pick(&rep, &["seed"])
                .iter()
                .filter(|a| a.name.ends_with(" phi"))
                .map(|a| format!("{:.5}", a.value))
                .collect();
            let dists: Vec<String> = pick(&rep, &["seed"])
                .iter()
                .filter(|a| a.name.ends_with("distance"))
                .map(|a| format!("{:.4}", a.value))
                .collect();
            lines.push(Line {
                id: 8,
                title: "extremizer search",
                passed: ok && t_search.as_secs_f64() <= 1800.0,
                detail: format!(
                    "{detail}; Φ {} (target {:.5}), orbit distance {} (tol 0.05), {:.1?}",
                    phis.join("/"),
                    0.99 * conelab::sharp_constant(),
                    dists.join("/"),
                    t_search
                ),
            });
        }
        Err(e) => lines.push(fail(8, "extremizer search", &e)),
    }

    match suites::boost_deficiency(&cfg) {
        Ok(rep) => {
            let (ok, detail) = summarize(&pick(&rep, &["sqrt bound spread", "collapse"]));
            let (others, other_detail) = summarize(&rep.assertions.iter().collect::<Vec<_>>());
            lines.push(Line {
                id: 9,
                title: "boost deficiency",
                passed: ok,
                detail: format!(
                    "{detail}; spread {:.3} (tol 3), D(0.999)/D(0.5) {:.4} (tol 0.15); side checks {}: {other_detail}",
                    value(&rep, "sqrt bound spread"),
                    value(&rep, "collapse"),
                    if others { "ok" } else { "FAILED" }
                ),
            });
        }
        Err(e) => lines.push(fail(9, "boost deficiency", &e)),
    }

    match suites::b_forms(&cfg) {
        Ok(rep) => {
            let (ok, detail) = summarize(&rep.assertions.iter().collect::<Vec<_>>());
            lines.push(Line {
                id: 10,
                title: "B/Q forms",
                passed: ok,
                detail: format!(
                    "{detail}; Q identity {:.1e} (tol 1e-12), indicator growth {:.3} (tol 2)",
                    value(&rep, "Q identity"),
                    value(&rep, "indicator ratio growth")
                ),
            });
        }
        Err(e) => lines.push(fail(10, "B/Q forms", &e)),
    }

    lines.sort_by_key(|l| l.id);
    let mut all = true;
    for l in &lines {
        all &= l.passed;
        println!("criterion {:>2} {} {}: {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.title, l.detail);
    }
    if !all {
        std::process::exit(1);
    }
}
