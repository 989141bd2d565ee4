//! Global assembly: mesh preparation, per-element evaluation in parallel and
//! an order-independent compensated sum.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QuadError, Result};
use crate::field::ScalarField;
use crate::geometry::{classify_simplex, ElementCase, Point, SignPattern};
use crate::mesh::{displace_vertices, validate_mesh, DisplacementConfig, MeshValidationReport, SimplicialMesh};

/// Edge samples used when validating a displaced mesh.
pub const VALIDATION_SAMPLES: usize = 16;

/// `1e-12 max(1, max |F|)` over the given vertex values.
pub fn zero_tolerance(values: &[f64]) -> f64 {
    1e-12 * values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Value of one element plus the smallest quadrature weight it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementResult {
    pub value: f64,
    pub min_weight: f64,
    pub cut: bool,
    comp: f64,
}

impl ElementResult {
    pub fn uncut(value: f64) -> Self {
        ElementResult {
            value,
            min_weight: f64::INFINITY,
            cut: false,
            comp: 0.0,
        }
    }

    pub fn cut() -> Self {
        ElementResult {
            cut: true,
            ..Self::uncut(0.0)
        }
    }

    pub(crate) fn add(&mut self, weight: f64, f: f64) {
        self.min_weight = self.min_weight.min(weight);
        neumaier(&mut self.value, &mut self.comp, weight * f);
    }

    pub(crate) fn merge(&mut self, other: &ElementResult) {
        self.min_weight = self.min_weight.min(other.min_weight);
        self.cut |= other.cut;
        neumaier(&mut self.value, &mut self.comp, other.value);
    }

    pub(crate) fn finish(mut self) -> Self {
        self.value += self.comp;
        self.comp = 0.0;
        self
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

/// Compensated sum, evaluated left to right.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for v in values {
        neumaier(&mut s, &mut c, v);
    }
    s + c
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ElementCounts {
    pub empty: usize,
    pub full: usize,
    pub cut_apex: usize,
    pub cut_two_two: usize,
}

impl ElementCounts {
    fn record(&mut self, case: ElementCase) {
        match case {
            ElementCase::Empty => self.empty += 1,
            ElementCase::Full => self.full += 1,
            ElementCase::CutApex(_) => self.cut_apex += 1,
            ElementCase::CutTwoTwo(_) => self.cut_two_two += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.empty + self.full + self.cut_apex + self.cut_two_two
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AssemblyReport {
    pub value: f64,
    pub counts: ElementCounts,
    /// Smallest weight used on any cut element (infinite if none was cut).
    pub min_cut_weight: f64,
    pub validation: MeshValidationReport,
    pub h: f64,
    pub h_cell: f64,
}

/// Displaces the mesh off the level set and checks the result.
pub fn prepare_mesh<const D: usize>(
    mesh: &SimplicialMesh<D>,
    field: &dyn ScalarField<D>,
    cfg: &DisplacementConfig,
) -> Result<(SimplicialMesh<D>, MeshValidationReport)> {
    let moved = displace_vertices(mesh, field, cfg)?;
    let report = validate_mesh(&moved, field, cfg.c, VALIDATION_SAMPLES);
    if !report.ok {
        return Err(QuadError::ValidationFailed {
            min_clearance: report.min_clearance_ratio,
            max_sign_changes: report.max_sign_changes_per_edge,
        });
    }
    Ok((moved, report))
}

/// Sums `element(points, values, case, zero_tol)` over all simplices.
///
/// Element values are computed in parallel but summed in mesh order, so the
/// result does not depend on the thread count. The first failing element
/// (in mesh order) determines the error.
pub fn assemble<const D: usize, E>(
    mesh: &SimplicialMesh<D>,
    field: &dyn ScalarField<D>,
    validation: MeshValidationReport,
    element: E,
) -> Result<AssemblyReport>
where
    E: Fn(&[Point<D>], &[f64], ElementCase, f64) -> Result<ElementResult> + Sync,
{
    let values: Vec<f64> = mesh.vertices.par_iter().map(|p| field.value(p)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(QuadError::NonFinite(mesh.vertices[i].0.to_vec()));
    }
    let zero_tol = zero_tolerance(&values);

    let results: Vec<Result<(ElementCase, ElementResult)>> = (0..mesh.num_simplices())
        .into_par_iter()
        .map(|k| {
            let idx = mesh.simplex(k);
            let pts: Vec<Point<D>> = idx.iter().map(|&i| mesh.vertices[i]).collect();
            let vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let case = classify_simplex(&SignPattern::from_values(&vals, zero_tol), D)?;
            Ok((case, element(&pts, &vals, case, zero_tol)?))
        })
        .collect();

    let mut counts = ElementCounts::default();
    let mut min_cut_weight = f64::INFINITY;
    let (mut sum, mut comp) = (0.0, 0.0);
    for r in results {
        let (case, er) = r?;
        counts.record(case);
        if er.cut {
            min_cut_weight = min_cut_weight.min(er.min_weight);
        }
        neumaier(&mut sum, &mut comp, er.value);
    }
    Ok(AssemblyReport {
        value: sum + comp,
        counts,
        min_cut_weight,
        validation,
        h: mesh.h,
        h_cell: mesh.h_cell,
    })
}

/// Runs `f` with at most `threads` worker threads; `Some(0)` or `Some(1)`
/// runs sequentially, `None` uses the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| QuadError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Thread cap from the `QUAD_THREADS` environment variable.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("QUAD_THREADS") {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| QuadError::Config(format!("QUAD_THREADS must be a non-negative integer, got {s:?}"))),
    }
}
