//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::time::Instant;

use levelset_quad::assemble::{prepare_mesh, with_threads};
use levelset_quad::builtins::{builtin, builtins, BuiltinTest};
use levelset_quad::curve::{curve_point_and_jacobian, CurveChart};
use levelset_quad::expr::Expression;
use levelset_quad::geometry::{cross3, BoxDomain, Point};
use levelset_quad::harness::{self, convergence, run, Format, Mode, RunConfig};
use levelset_quad::mesh::{displace_vertices, tetrahedralize_box, triangulate_rectangle, DisplacementConfig};
use levelset_quad::region::{integrate_region2d_on_mesh, integrate_region3d_on_mesh};
use levelset_quad::rules::gauss_legendre_01;
use levelset_quad::surface::{surface_point_and_jacobian, SurfaceChart};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn single_thread<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    with_threads(Some(1), f).expect("thread pool")
}

/// Runs a builtin at one `(n, q)` on one thread; returns error and seconds.
fn timed(id: &str, n: usize, q: usize) -> Result<(f64, f64), String> {
    let t = builtin(id).map_err(|e| e.to_string())?;
    let config = RunConfig { n, q, ..t.config };
    single_thread(|| {
        let start = Instant::now();
        let r = run(&config).map_err(|e| e.to_string())?;
        Ok((r.abs_error.expect("builtin has a reference"), start.elapsed().as_secs_f64()))
    })
}

fn error_criterion(id: &str, n: usize, q: usize, tol: f64, max_seconds: Option<f64>) -> Outcome {
    match timed(id, n, q) {
        Err(e) => outcome(false, format!("{id}: {e}")),
        Ok((err, secs)) => {
            let fast = max_seconds.is_none_or(|m| secs < m);
            let limit = max_seconds.map(|m| format!(" (limit {m} s)")).unwrap_or_default();
            outcome(
                err <= tol && fast,
                format!("{id} n={n} q={q}: |error| = {err:.3e} (tol {tol:.0e}), {secs:.2} s single-threaded{limit}"),
            )
        }
    }
}

fn criterion7() -> Outcome {
    let t = builtin("region-ellipse").unwrap();
    let n_list = [16, 32, 64, 128];
    let mut medians = Vec::new();
    let mut notes = Vec::new();
    for q in [4, 8] {
        let config = RunConfig { q, ..t.config.clone() };
        match convergence(&config, &n_list) {
            Err(e) => return outcome(false, format!("q={q}: {e}")),
            Ok(r) => {
                let m = r.median_order();
                let errs: Vec<String> = r.rows.iter().map(|row| format!("{:.1e}", row.abs_error)).collect();
                notes.push(format!(
                    "q={q} errors [{}] median order {}",
                    errs.join(", "),
                    m.map(|m| format!("{m:.2}")).unwrap_or_else(|| "n/a".into())
                ));
                medians.push(m);
            }
        }
    }
    let orders_ok = match (medians[0], medians[1]) {
        (Some(m4), Some(m8)) => m4 >= 4.0 && m8 > m4,
        _ => false,
    };

    let s = builtin("surface-ellipsoid").unwrap();
    let config = RunConfig {
        n: 64,
        q: 10,
        ..s.config.clone()
    };
    let (area_ok, area_note) = match run(&config) {
        Ok(r) => {
            let rel = r.abs_error.unwrap() / s.reference.value();
            (rel <= 1e-9, format!("ellipsoid area n=64 q=10 relative error {rel:.3e} (tol 1e-9)"))
        }
        Err(e) => (false, format!("ellipsoid area: {e}")),
    };
    notes.push(area_note);
    outcome(orders_ok && area_ok, notes.join("; "))
}

fn box_measure(bounds: &[f64]) -> f64 {
    bounds.chunks(2).map(|c| c[1] - c[0]).product()
}

fn positive_weights(all: &[BuiltinTest]) -> Result<String, String> {
    let mut worst = f64::INFINITY;
    for t in all {
        let r = run(&t.config).map_err(|e| format!("{}: {e}", t.id))?;
        let w = r.min_cut_weight.ok_or_else(|| format!("{}: no cut elements", t.id))?;
        if !(w > 0.0) {
            return Err(format!("{}: min cut weight {w:e}", t.id));
        }
        worst = worst.min(w);
    }
    Ok(format!("min cut weight over builtins {worst:.2e}"))
}

fn ctx<E: std::fmt::Display>(id: &str) -> impl Fn(E) -> String + '_ {
    move |e| format!("{id}: {e}")
}

/// `region(F) + region(-F)` on the mesh displaced for `F`.
///
/// Vertices with `F = 0` move along `+grad F` whichever sign is integrated,
/// so `F` and `-F` would otherwise get different meshes and agree only to
/// discretization error.
fn partition_identity(all: &[BuiltinTest]) -> Result<String, String> {
    let mut worst = 0.0f64;
    let cfg = DisplacementConfig::default();
    for t in all.iter().filter(|t| t.config.mode == Mode::Region) {
        let n = if t.config.dim == 2 { 32 } else { 16 };
        let (q, bounds) = (4, &t.config.bounds);
        let (inside, outside) = if t.config.dim == 2 {
            let f = Expression::parse(&t.config.levelset, 2).map_err(ctx(t.id))?;
            let g = Expression::parse(&format!("-({})", t.config.levelset), 2).map_err(ctx(t.id))?;
            let one = Expression::parse("1", 2).map_err(ctx(t.id))?;
            let mesh = triangulate_rectangle(&BoxDomain::from_flat(bounds).map_err(ctx(t.id))?, n).map_err(ctx(t.id))?;
            let (mesh, v) = prepare_mesh(&mesh, &f, &cfg).map_err(ctx(t.id))?;
            (
                integrate_region2d_on_mesh(&mesh, v, &f, &one, q).map_err(ctx(t.id))?.value,
                integrate_region2d_on_mesh(&mesh, v, &g, &one, q).map_err(ctx(t.id))?.value,
            )
        } else {
            let f = Expression::parse(&t.config.levelset, 3).map_err(ctx(t.id))?;
            let g = Expression::parse(&format!("-({})", t.config.levelset), 3).map_err(ctx(t.id))?;
            let one = Expression::parse("1", 3).map_err(ctx(t.id))?;
            let mesh = tetrahedralize_box(&BoxDomain::from_flat(bounds).map_err(ctx(t.id))?, n).map_err(ctx(t.id))?;
            let (mesh, v) = prepare_mesh(&mesh, &f, &cfg).map_err(ctx(t.id))?;
            (
                integrate_region3d_on_mesh(&mesh, v, &f, &one, q).map_err(ctx(t.id))?.value,
                integrate_region3d_on_mesh(&mesh, v, &g, &one, q).map_err(ctx(t.id))?.value,
            )
        };
        let gap = (inside + outside - box_measure(bounds)).abs();
        if gap > 1e-10 {
            return Err(format!("{}: |inside + outside - |U|| = {gap:.3e}", t.id));
        }
        worst = worst.max(gap);
    }
    Ok(format!("max partition gap {worst:.2e} (shared mesh)"))
}

fn jacobian_vs_fd() -> Result<String, String> {
    let ellipse = Expression::parse("x^2+4*y^2-1", 2).unwrap();
    let runner = || {
        TestRunner::new(Config {
            cases: 200,
            failure_persistence: None,
            rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
            ..Config::default()
        })
    };
    let on2 = |t: f64| Point([t.cos(), 0.5 * t.sin()]);
    let d = 1e-5;
    let worst2 = std::cell::Cell::new(0.0f64);
    let cases2 = std::cell::Cell::new(0usize);
    runner()
        .run(
            &(0.0f64..std::f64::consts::TAU, 0.05f64..0.3, prop_oneof![0.6f64..0.9, 1.1f64..1.4], 0.05f64..0.95),
            |(theta, half, depth, lam)| {
                let chart = CurveChart::new(&ellipse, on2(theta) * depth, on2(theta - half), on2(theta + half));
                let at = |l: f64| curve_point_and_jacobian(&ellipse, &chart, l, 1e-14).unwrap();
                let j = at(lam).tangent;
                let fd = (at(lam + d).point - at(lam - d).point) * (0.5 / d);
                let rel = (j - fd).norm() / j.norm();
                worst2.set(worst2.get().max(rel));
                cases2.set(cases2.get() + 1);
                prop_assert!(rel <= 1e-6, "2-D chart relative gap {}", rel);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;

    let ellipsoid = Expression::parse("x^2+4*y^2+9*z^2-1", 3).unwrap();
    let on3 = |t: f64, p: f64| Point([t.sin() * p.cos(), 0.5 * t.sin() * p.sin(), t.cos() / 3.0]);
    let worst3 = std::cell::Cell::new(0.0f64);
    let cases3 = std::cell::Cell::new(0usize);
    runner()
        .run(
            &(
                0.4f64..2.7,
                0.0f64..std::f64::consts::TAU,
                0.05f64..0.25,
                prop_oneof![0.6f64..0.9, 1.1f64..1.4],
                (0.05f64..0.45, 0.05f64..0.45),
            ),
            |(theta, phi, s, depth, (m1, m2))| {
                let b = [
                    on3(theta + s, phi),
                    on3(theta - 0.5 * s, phi + s),
                    on3(theta - 0.5 * s, phi - s),
                ];
                let chart = SurfaceChart::new(&ellipsoid, on3(theta, phi) * depth, b);
                let at = |a: f64, c: f64| surface_point_and_jacobian(&ellipsoid, &chart, a, c, 1e-14).unwrap();
                let sp = at(m1, m2);
                let fd1 = (at(m1 + d, m2).point - at(m1 - d, m2).point) * (0.5 / d);
                let fd2 = (at(m1, m2 + d).point - at(m1, m2 - d).point) * (0.5 / d);
                let scale = sp.d1.norm().max(sp.d2.norm());
                let rel = (sp.d1 - fd1).norm().max((sp.d2 - fd2).norm()) / scale;
                worst3.set(worst3.get().max(rel));
                cases3.set(cases3.get() + 1);
                prop_assert!(rel <= 1e-6, "3-D chart relative gap {}", rel);
                prop_assert!(cross3(&sp.d1, &sp.d2).norm() > 0.0);
                Ok(())
            },
        )
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} 2-D charts, max gap {:.1e}; {} 3-D charts, max gap {:.1e}",
        cases2.get(),
        worst2.get(),
        cases3.get(),
        worst3.get()
    ))
}

fn tiling_and_clearance(all: &[BuiltinTest]) -> Result<(String, String), String> {
    let mut worst_tiling = 0.0f64;
    let mut worst_clearance = f64::INFINITY;
    let cfg = DisplacementConfig::default();
    for t in all {
        let measure = box_measure(&t.config.bounds);
        let f = Expression::parse(&t.config.levelset, t.config.dim).unwrap();
        let (before, after) = if t.config.dim == 2 {
            let m = triangulate_rectangle(&BoxDomain::from_flat(&t.config.bounds).unwrap(), t.config.n).unwrap();
            let d = displace_vertices(&m, &f, &cfg).map_err(|e| format!("{}: {e}", t.id))?;
            (m.total_measure(), d.total_measure())
        } else {
            let m = tetrahedralize_box(&BoxDomain::from_flat(&t.config.bounds).unwrap(), t.config.n).unwrap();
            let d = displace_vertices(&m, &f, &cfg).map_err(|e| format!("{}: {e}", t.id))?;
            (m.total_measure(), d.total_measure())
        };
        for v in [before, after] {
            let rel = (v - measure).abs() / measure;
            if rel > 1e-12 {
                return Err(format!("{}: tiling off by {rel:.3e}", t.id));
            }
            worst_tiling = worst_tiling.max(rel);
        }
        let r = run(&t.config).map_err(|e| format!("{}: {e}", t.id))?;
        if r.validation.min_clearance_ratio < 0.5 * t.config.c {
            return Err(format!(
                "{}: clearance ratio {:.3} below c/2",
                t.id, r.validation.min_clearance_ratio
            ));
        }
        worst_clearance = worst_clearance.min(r.validation.min_clearance_ratio);
    }
    Ok((
        format!("max relative tiling gap {worst_tiling:.1e}"),
        format!("min clearance ratio {worst_clearance:.3} (floor 0.125)"),
    ))
}

fn gauss_exactness() -> Result<String, String> {
    for q in 1..=20 {
        let r = gauss_legendre_01(q).map_err(|e| e.to_string())?;
        for k in 0..2 * q {
            let got = r.integrate(|t| t.powi(k as i32));
            let err = (got - 1.0 / (k as f64 + 1.0)).abs();
            if err > 1e-14 {
                return Err(format!("q={q} degree {k}: error {err:.3e}"));
            }
        }
    }
    Ok("degree 2q-1 exact for q <= 20".into())
}

fn reproducible() -> Result<String, String> {
    let bytes = |id: &str, threads: usize| -> Result<Vec<u8>, String> {
        let t = builtin(id).unwrap();
        let config = RunConfig {
            n: t.n_list[0],
            ..t.config
        };
        with_threads(Some(threads), || {
            let r = run(&config).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            harness::write_run(&r, Format::Json, &mut buf).map_err(|e| e.to_string())?;
            Ok(buf)
        })
        .map_err(|e| e.to_string())?
    };
    for id in ["region-ellipse", "surface-ellipsoid", "region-paraboloid"] {
        let a = bytes(id, 4)?;
        let b = bytes(id, 4)?;
        let c = bytes(id, 1)?;
        if a != b || a != c {
            return Err(format!("{id}: outputs differ"));
        }
    }
    Ok("identical JSON bytes across repeated runs and thread counts".into())
}

fn criterion8() -> Outcome {
    let all = builtins();
    let mut parts = Vec::new();
    let mut pass = true;
    let checks: Vec<(&str, Result<String, String>)> = vec![
        ("positive weights", positive_weights(&all)),
        ("partition identity", partition_identity(&all)),
        ("Jacobian vs FD", jacobian_vs_fd()),
        ("tiling/clearance", tiling_and_clearance(&all).map(|(a, b)| format!("{a}; {b}"))),
        ("Gauss exactness", gauss_exactness()),
        ("bit-reproducibility", reproducible()),
    ];
    for (name, r) in checks {
        match r {
            Ok(s) => parts.push(format!("{name}: ok ({s})")),
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: FAILED ({e})"));
            }
        }
    }
    outcome(pass, parts.join("\n    "))
}

type Criterion = (usize, &'static str, Box<dyn Fn() -> Outcome>);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "2-D region, ellipse area", Box::new(|| error_criterion("region-ellipse", 64, 8, 1e-9, Some(5.0)))),
        (2, "2-D region, quartic", Box::new(|| error_criterion("region-quartic", 64, 8, 1e-8, None))),
        (3, "3-D region, ellipsoid volume", Box::new(|| error_criterion("region-ellipsoid", 32, 6, 1e-6, Some(120.0)))),
        (4, "3-D region, paraboloid volume", Box::new(|| error_criterion("region-paraboloid", 32, 6, 1e-6, None))),
        (5, "curve, exponential graph", Box::new(|| error_criterion("curve-exp", 32, 10, 1e-9, None))),
        (6, "surface, paraboloid", Box::new(|| error_criterion("surface-paraboloid", 32, 8, 1e-7, None))),
        (7, "order growth and ellipsoid area", Box::new(criterion7)),
        (8, "property suites", Box::new(criterion8)),
    ];
    let mut failed = Vec::new();
    for (k, name, check) in &criteria {
        let o = check();
        println!(
            "criterion {k} [{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(*k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
