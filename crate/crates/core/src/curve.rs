//! Line integrals over `{F = 0}` in 2-D.
//!
//! In a cut triangle with apex `A0` the curve piece is parametrized by
//! projecting the chord `B1 B2` between the two edge crossings onto the
//! curve along rays from `A0`. The derivative of that projection comes from
//! the implicit function theorem applied to
//! `H(l, c, d) = (F(c, d), (a - x0)(d - y0) - (c - x0)(b - y0))`,
//! where `(a, b)` is the chord point and `(c, d)` its image.

use crate::assemble::{self, AssemblyReport, ElementResult};
use crate::error::{QuadError, Result};
use crate::field::ScalarField;
use crate::geometry::{classify_simplex, BoxDomain, ElementCase, Point2, SignPattern};
use crate::mesh::{triangulate_rectangle, DisplacementConfig};
use crate::rootfind::{ray_root, root_with_values};
use crate::rules::{rules, QuadRule1D};

/// Apex of a cut triangle and the crossings on its two apex edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveChart {
    pub apex: Point2,
    pub f_apex: f64,
    pub b1: Point2,
    pub b2: Point2,
    /// Edge parameters of `b1`, `b2` (`B = A0 + s (A - A0)`), when the chart
    /// comes from a triangle; used to bound the ray search by the far edge.
    edge_params: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub point: Point2,
    /// Derivative of the curve point with respect to the chord parameter.
    pub tangent: Point2,
    pub speed: f64,
}

impl CurveChart {
    pub fn new(field: &dyn ScalarField<2>, apex: Point2, b1: Point2, b2: Point2) -> Self {
        CurveChart {
            apex,
            f_apex: field.value(&apex),
            b1,
            b2,
            edge_params: None,
        }
    }

    pub fn from_triangle(
        field: &dyn ScalarField<2>,
        tri: &[Point2; 3],
        values: &[f64; 3],
        apex: usize,
        zero_tol: f64,
    ) -> Result<Self> {
        let (j, k) = ((apex + 1) % 3, (apex + 2) % 3);
        let a0 = tri[apex];
        let r1 = root_with_values(field, &a0, &tri[j], values[apex], values[j], zero_tol)?;
        let r2 = root_with_values(field, &a0, &tri[k], values[apex], values[k], zero_tol)?;
        Ok(CurveChart {
            apex: a0,
            f_apex: values[apex],
            b1: r1.point,
            b2: r2.point,
            edge_params: Some([r1.t, r2.t]),
        })
    }

    pub fn chord_point(&self, lambda: f64) -> Point2 {
        self.b1.lerp(&self.b2, lambda)
    }

    fn facet_t(&self, lambda: f64) -> Option<f64> {
        self.edge_params
            .map(|[s1, s2]| 1.0 / ((1.0 - lambda) * s1 + lambda * s2))
    }
}

pub fn curve_point_and_jacobian(
    field: &dyn ScalarField<2>,
    chart: &CurveChart,
    lambda: f64,
    zero_tol: f64,
) -> Result<CurvePoint> {
    let a0 = chart.apex;
    let x = chart.chord_point(lambda);
    let (y, _) = ray_root(field, &a0, chart.f_apex, &x, chart.facet_t(lambda), zero_tol)?;
    let (_, grad) = field.value_and_gradient(&y);

    let ray = x - a0;
    let rel = y - a0;
    let dx = chart.b2 - chart.b1;
    // M = [[F_x, F_y], [-(b - y0), a - x0]],  M J = -dH/dl = -(0, r)
    let det = grad[0] * ray[0] + grad[1] * ray[1];
    let scale = grad.norm() * ray.norm();
    if !(det.abs() >= 1e-13 * scale) || scale == 0.0 {
        return Err(QuadError::SingularJacobian { det, scale });
    }
    let r = dx[0] * rel[1] - rel[0] * dx[1];
    let tangent = Point2::new([grad[1] * r / det, -grad[0] * r / det]);
    Ok(CurvePoint {
        point: y,
        tangent,
        speed: tangent.norm(),
    })
}

/// Visits the quadrature nodes of the curve piece in a chart with their
/// effective weights `w_i * speed_i`.
pub(crate) fn curve_chart_nodes(
    field: &dyn ScalarField<2>,
    chart: &CurveChart,
    line: &QuadRule1D,
    zero_tol: f64,
    mut visit: impl FnMut(&CurvePoint, f64),
) -> Result<()> {
    for (&lam, &w) in line.nodes.iter().zip(&line.weights) {
        let cp = curve_point_and_jacobian(field, chart, lam, zero_tol)?;
        visit(&cp, w * cp.speed);
    }
    Ok(())
}

pub(crate) fn curve_element(
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    tri: &[Point2; 3],
    values: &[f64; 3],
    case: ElementCase,
    q: usize,
    zero_tol: f64,
) -> Result<ElementResult> {
    let apex = match case {
        ElementCase::CutApex(i) => i,
        ElementCase::Empty | ElementCase::Full => return Ok(ElementResult::uncut(0.0)),
        ElementCase::CutTwoTwo(_) => return Err(QuadError::AmbiguousSigns(values.map(|v| v.signum() as i8).to_vec())),
    };
    let chart = CurveChart::from_triangle(field, tri, values, apex, zero_tol)?;
    let mut out = ElementResult::cut();
    curve_chart_nodes(field, &chart, &rules(q)?.line, zero_tol, |cp, w| {
        out.add(w, integrand.value(&cp.point));
    })?;
    Ok(out.finish())
}

/// `int_{Gamma ∩ T} f ds` over one triangle.
pub fn integrate_curve_triangle(
    tri: &[Point2; 3],
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
) -> Result<f64> {
    let values = tri.map(|p| field.value(&p));
    let zero_tol = assemble::zero_tolerance(&values);
    let case = classify_simplex(&SignPattern::from_values(&values, zero_tol), 2)?;
    Ok(curve_element(field, integrand, tri, &values, case, q, zero_tol)?.value)
}

/// Length-weighted integral of `f` over the curve piece inside a triangle
/// given by an already-built chart.
pub fn integrate_curve_chart(
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    chart: &CurveChart,
    q: usize,
    zero_tol: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    curve_chart_nodes(field, chart, &rules(q)?.line, zero_tol, |cp, w| {
        sum += w * integrand.value(&cp.point);
    })?;
    Ok(sum)
}

pub fn integrate_curve_report(
    domain: &BoxDomain<2>,
    n: usize,
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<AssemblyReport> {
    rules(q)?;
    let mesh = triangulate_rectangle(domain, n)?;
    let (mesh, validation) = assemble::prepare_mesh(&mesh, field, cfg)?;
    assemble::assemble(&mesh, field, validation, |pts, vals, case, tol| {
        let tri = [pts[0], pts[1], pts[2]];
        let v = [vals[0], vals[1], vals[2]];
        curve_element(field, integrand, &tri, &v, case, q, tol)
    })
}

/// `int_{Gamma ∩ U} f ds` for a curve `Gamma = {F = 0}` in the box `U`.
pub fn integrate_curve(
    domain: &BoxDomain<2>,
    n: usize,
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<f64> {
    Ok(integrate_curve_report(domain, n, field, integrand, q, cfg)?.value)
}
