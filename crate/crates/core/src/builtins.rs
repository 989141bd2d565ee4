//! Registry of the built-in test problems and the reference-value recipes
//! for the two that have no closed form.

use std::f64::consts::{E, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::assemble::compensated_sum;
use crate::error::{QuadError, Result};
use crate::harness::{Mode, RunConfig};
use crate::rules::gauss_legendre_01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Reference {
    /// Closed-form value.
    Exact(f64),
    /// Value from a dense parametric quadrature, frozen in the fixture file.
    Oracle(f64),
}

impl Reference {
    pub fn value(self) -> f64 {
        match self {
            Reference::Exact(v) | Reference::Oracle(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinTest {
    pub id: &'static str,
    pub description: &'static str,
    /// Template with `exact` filled in from the reference.
    pub config: RunConfig,
    pub reference: Reference,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleEntry {
    pub id: String,
    pub value: f64,
    pub recipe: String,
    pub cross_check: String,
}

const FIXTURE: &str = include_str!("../fixtures/oracles.json");

pub fn frozen_oracles() -> Vec<OracleEntry> {
    serde_json::from_str(FIXTURE).expect("oracle fixture is valid JSON")
}

fn frozen(id: &str) -> f64 {
    frozen_oracles()
        .into_iter()
        .find(|e| e.id == id)
        .map(|e| e.value)
        .expect("oracle listed in fixture")
}

pub const BUILTIN_IDS: [&str; 8] = [
    "curve-ellipse",
    "curve-exp",
    "surface-ellipsoid",
    "surface-paraboloid",
    "region-ellipse",
    "region-quartic",
    "region-ellipsoid",
    "region-paraboloid",
];

#[allow(clippy::too_many_arguments)]
fn make(
    id: &'static str,
    description: &'static str,
    dim: usize,
    mode: Mode,
    levelset: &str,
    integrand: &str,
    bounds: &[f64],
    q: usize,
    reference: Reference,
    n_list: &[usize],
) -> BuiltinTest {
    BuiltinTest {
        id,
        description,
        config: RunConfig {
            dim,
            mode,
            levelset: levelset.to_string(),
            integrand: integrand.to_string(),
            bounds: bounds.to_vec(),
            n: *n_list.last().expect("nonempty n list"),
            q,
            c: 0.25,
            exact: Some(reference.value()),
        },
        reference,
        n_list: n_list.to_vec(),
    }
}

pub fn builtin(name: &str) -> Result<BuiltinTest> {
    let id: &'static str = BUILTIN_IDS
        .iter()
        .find(|&&k| k == name)
        .copied()
        .ok_or_else(|| {
            QuadError::Config(format!(
                "unknown builtin {name:?}; known: {}",
                BUILTIN_IDS.join(", ")
            ))
        })?;
    let b2 = [-1.1, 1.1, -1.1, 1.1];
    let b3 = [-1.1, 1.1, -1.1, 1.1, -1.1, 1.1];
    let parab = [-1.0, 1.0, -1.0, 1.0, -1.0, 3.0];
    let t = match id {
        "curve-ellipse" => make(
            id,
            "int x^2 ds over the ellipse x^2 + 4y^2 = 1",
            2,
            Mode::Curve,
            "x^2+4*y^2-1",
            "x^2",
            &b2,
            8,
            Reference::Oracle(frozen(id)),
            &[16, 32, 64],
        ),
        "curve-exp" => make(
            id,
            "int sqrt(1 + e^(2x)) ds over the graph y = e^x, 0 <= x <= 1",
            2,
            Mode::Curve,
            "y-exp(x)",
            "sqrt(1+exp(2*x))",
            &[0.0, 1.0, 0.0, 3.0],
            10,
            Reference::Exact((E * E + 1.0) / 2.0),
            &[8, 16, 32],
        ),
        "surface-ellipsoid" => make(
            id,
            "area of the ellipsoid x^2 + 4y^2 + 9z^2 = 1",
            3,
            Mode::Surface,
            "x^2+4*y^2+9*z^2-1",
            "1",
            &b3,
            8,
            Reference::Oracle(frozen(id)),
            &[8, 16, 32],
        ),
        "surface-paraboloid" => make(
            id,
            "int sqrt(1 + 4x^2 + 4y^2) dS over z = x^2 + y^2 above [-1, 1]^2",
            3,
            Mode::Surface,
            "x^2+y^2-z",
            "sqrt(1+4*x^2+4*y^2)",
            &parab,
            8,
            Reference::Exact(44.0 / 3.0),
            &[8, 16, 32],
        ),
        "region-ellipse" => make(
            id,
            "area of the ellipse x^2 + 4y^2 < 1",
            2,
            Mode::Region,
            "x^2+4*y^2-1",
            "1",
            &b2,
            8,
            Reference::Exact(PI / 2.0),
            &[16, 32, 64],
        ),
        "region-quartic" => make(
            id,
            "area of {y > x^4} inside [-2, 2]^2",
            2,
            Mode::Region,
            "x^4-y",
            "1",
            &[-2.0, 2.0, -2.0, 2.0],
            8,
            Reference::Exact(1.6 * 2f64.powf(1.25)),
            &[16, 32, 64],
        ),
        "region-ellipsoid" => make(
            id,
            "volume of the ellipsoid x^2 + y^2 + 4z^2 < 1",
            3,
            Mode::Region,
            "x^2+y^2+4*z^2-1",
            "1",
            &b3,
            6,
            Reference::Exact(2.0 * PI / 3.0),
            &[8, 16, 32],
        ),
        "region-paraboloid" => make(
            id,
            "volume of {z > x^2 + y^2} inside [-1, 1]^2 x [-1, 3]",
            3,
            Mode::Region,
            "x^2+y^2-z",
            "1",
            &parab,
            6,
            Reference::Exact(28.0 / 3.0),
            &[8, 16, 32],
        ),
        _ => unreachable!("id checked against the registry"),
    };
    Ok(t)
}

pub fn builtins() -> Vec<BuiltinTest> {
    BUILTIN_IDS.iter().map(|id| builtin(id).expect("registered id")).collect()
}

/// `int x^2 ds` over `(cos t, sin t / 2)` with the periodic trapezoid rule.
pub fn curve_ellipse_oracle(points: usize) -> f64 {
    let dt = TAU / points as f64;
    let terms = (0..points).map(|k| {
        let t = k as f64 * dt;
        let (s, c) = t.sin_cos();
        c * c * (s * s + 0.25 * c * c).sqrt()
    });
    compensated_sum(terms) * dt
}

/// Area of the ellipsoid with semi-axes `(1, 1/2, 1/3)`: composite
/// Gauss–Legendre in the polar angle, periodic trapezoid in the azimuth.
pub fn ellipsoid_area_oracle(panels: usize, per_panel: usize, phi_points: usize) -> Result<f64> {
    let (a, b, c) = (1.0, 0.5, 1.0 / 3.0);
    let g = gauss_legendre_01(per_panel)?;
    let width = PI / panels as f64;
    let dphi = TAU / phi_points as f64;
    let azimuth: Vec<(f64, f64)> = (0..phi_points).map(|k| (k as f64 * dphi).sin_cos()).collect();
    let mut terms = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        for (&x, &w) in g.nodes.iter().zip(&g.weights) {
            let theta = (p as f64 + x) * width;
            let (st, ct) = theta.sin_cos();
            let ring = compensated_sum(azimuth.iter().map(|&(sp, cp)| {
                let n1 = b * c * st * cp;
                let n2 = a * c * st * sp;
                let n3 = a * b * ct;
                (n1 * n1 + n2 * n2 + n3 * n3).sqrt()
            }));
            terms.push(w * width * st * ring * dphi);
        }
    }
    Ok(compensated_sum(terms))
}

/// Recomputes the reference value of a builtin without a closed form with
/// the recipe recorded in the fixture file.
pub fn oracle(id: &str) -> Result<OracleEntry> {
    let value = match id {
        "curve-ellipse" => curve_ellipse_oracle(1_000_000),
        "surface-ellipsoid" => ellipsoid_area_oracle(100, 20, 2000)?,
        _ => {
            return Err(QuadError::Config(format!(
                "builtin {id:?} has a closed-form reference; oracles exist for curve-ellipse and surface-ellipsoid"
            )))
        }
    };
    let entry = frozen_oracles()
        .into_iter()
        .find(|e| e.id == id)
        .expect("oracle listed in fixture");
    Ok(OracleEntry { value, ..entry })
}
