//! Integrals over `{F < 0}` in 2-D and 3-D.
//!
//! In a cut simplex the part on the apex side of the level set is the cone
//! from the apex over the curve or surface piece, parametrized as
//! `(1 - a) A0 + a Y` with `Y` from the boundary chart. When the apex lies
//! outside the region the cone is subtracted from the whole simplex.

use crate::assemble::{self, AssemblyReport, ElementResult};
use crate::curve::{curve_point_and_jacobian, CurveChart};
use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::{
    classify_simplex, cross2, det3, BoxDomain, ElementCase, Point, Point2, Point3, SignPattern,
};
use crate::mesh::{
    tetrahedralize_box, triangulate_rectangle, DisplacementConfig, MeshValidationReport, SimplicialMesh,
};
use crate::rules::{rules, SimplexRule};
use crate::surface::{split_case2_tet, surface_point_and_jacobian, SignedTet, SurfaceChart};

/// `int_T f` over a triangle or tetrahedron with the collapsed simplex rule.
fn simplex_integral<const D: usize>(
    verts: &[Point<D>],
    integrand: &dyn ScalarField<D>,
    rule: &SimplexRule,
    out: &mut ElementResult,
) {
    let scale = match D {
        2 => 2.0,
        _ => 6.0,
    } * crate::geometry::signed_measure(verts).abs();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let mut x = verts[0];
        for k in 0..D {
            x = x + (verts[k + 1] - verts[0]) * pt[k];
        }
        out.add(w * scale, integrand.value(&x));
    }
}

pub(crate) fn region_triangle_element(
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    tri: &[Point2; 3],
    values: &[f64; 3],
    case: ElementCase,
    q: usize,
    zero_tol: f64,
) -> Result<ElementResult> {
    let rs = rules(q)?;
    let apex = match case {
        ElementCase::Empty => return Ok(ElementResult::uncut(0.0)),
        ElementCase::Full => {
            let mut out = ElementResult::uncut(0.0);
            simplex_integral(tri, integrand, &rs.triangle, &mut out);
            return Ok(out.finish());
        }
        ElementCase::CutApex(i) => i,
        ElementCase::CutTwoTwo(_) => {
            return Err(crate::QuadError::AmbiguousSigns(
                values.map(|v| v.signum() as i8).to_vec(),
            ))
        }
    };
    let chart = CurveChart::from_triangle(field, tri, values, apex, zero_tol)?;
    let a0 = chart.apex;
    let mut cone = ElementResult::cut();
    for (&b, &wb) in rs.line.nodes.iter().zip(&rs.line.weights) {
        let cp = curve_point_and_jacobian(field, &chart, b, zero_tol)?;
        let rel = cp.point - a0;
        let jac = cross2(&rel, &cp.tangent).abs();
        for (&a, &wa) in rs.line.nodes.iter().zip(&rs.line.weights) {
            cone.add(wa * wb * a * jac, integrand.value(&(a0 + rel * a)));
        }
    }
    let cone = cone.finish();
    if chart.f_apex < 0.0 {
        return Ok(cone);
    }
    let mut whole = ElementResult::uncut(0.0);
    simplex_integral(tri, integrand, &rs.triangle, &mut whole);
    let mut out = cone;
    out.value = whole.finish().value - cone.value;
    Ok(out)
}

pub(crate) fn region_tet_element(
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    tet: &SignedTet,
    case: ElementCase,
    q: usize,
    zero_tol: f64,
) -> Result<ElementResult> {
    let rs = rules(q)?;
    let apex = match case {
        ElementCase::Empty => return Ok(ElementResult::uncut(0.0)),
        ElementCase::Full => {
            let mut out = ElementResult::uncut(0.0);
            simplex_integral(&tet.vertices, integrand, &rs.tet, &mut out);
            return Ok(out.finish());
        }
        ElementCase::CutApex(i) => i,
        ElementCase::CutTwoTwo(pair) => {
            let mut out = ElementResult::cut();
            for child in split_case2_tet(field, tet, pair, zero_tol)? {
                let case = classify_simplex(&SignPattern::from_values(&child.values, zero_tol), 3)?;
                out.merge(&region_tet_element(field, integrand, &child, case, q, zero_tol)?);
            }
            return Ok(out.finish());
        }
    };
    let chart = SurfaceChart::from_tet(field, tet, apex, zero_tol)?;
    let a0 = chart.apex;
    let mut cone = ElementResult::cut();
    for (pt, &wm) in rs.triangle.points.iter().zip(&rs.triangle.weights) {
        let sp = surface_point_and_jacobian(field, &chart, pt[0], pt[1], zero_tol)?;
        let jac = det3(&sp.ray, &sp.d1, &sp.d2).abs();
        for (&a, &wa) in rs.line.nodes.iter().zip(&rs.line.weights) {
            cone.add(wa * wm * a * a * jac, integrand.value(&(a0 + sp.ray * a)));
        }
    }
    let cone = cone.finish();
    if chart.f_apex < 0.0 {
        return Ok(cone);
    }
    let mut whole = ElementResult::uncut(0.0);
    simplex_integral(&tet.vertices, integrand, &rs.tet, &mut whole);
    let mut out = cone;
    out.value = whole.finish().value - cone.value;
    Ok(out)
}

/// `int_{T ∩ {F < 0}} f` over one triangle.
pub fn integrate_region_triangle(
    tri: &[Point2; 3],
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
) -> Result<f64> {
    let values = tri.map(|p| field.value(&p));
    let zero_tol = assemble::zero_tolerance(&values);
    let case = classify_simplex(&SignPattern::from_values(&values, zero_tol), 2)?;
    Ok(region_triangle_element(field, integrand, tri, &values, case, q, zero_tol)?.value)
}

/// `int_{T ∩ {F < 0}} f` over one tetrahedron.
pub fn integrate_region_tet(
    tet: &[Point3; 4],
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    q: usize,
) -> Result<f64> {
    let values = tet.map(|p| field.value(&p));
    let zero_tol = assemble::zero_tolerance(&values);
    let case = classify_simplex(&SignPattern::from_values(&values, zero_tol), 3)?;
    let st = SignedTet {
        vertices: *tet,
        values,
    };
    Ok(region_tet_element(field, integrand, &st, case, q, zero_tol)?.value)
}

pub fn integrate_region2d_report(
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
    integrate_region2d_on_mesh(&mesh, validation, field, integrand, q)
}

/// Region integral on an already displaced and validated mesh.
///
/// Lets `F` and `-F` share one mesh: `F = 0` vertices move along `+grad F`
/// for either sign, so independently displaced meshes differ.
pub fn integrate_region2d_on_mesh(
    mesh: &SimplicialMesh<2>,
    validation: MeshValidationReport,
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
) -> Result<AssemblyReport> {
    rules(q)?;
    assemble::assemble(mesh, field, validation, |pts, vals, case, tol| {
        let tri = [pts[0], pts[1], pts[2]];
        let v = [vals[0], vals[1], vals[2]];
        region_triangle_element(field, integrand, &tri, &v, case, q, tol)
    })
}

pub fn integrate_region3d_report(
    domain: &BoxDomain<3>,
    n: usize,
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<AssemblyReport> {
    rules(q)?;
    let mesh = tetrahedralize_box(domain, n)?;
    let (mesh, validation) = assemble::prepare_mesh(&mesh, field, cfg)?;
    integrate_region3d_on_mesh(&mesh, validation, field, integrand, q)
}

/// Region integral on an already displaced and validated mesh.
pub fn integrate_region3d_on_mesh(
    mesh: &SimplicialMesh<3>,
    validation: MeshValidationReport,
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    q: usize,
) -> Result<AssemblyReport> {
    rules(q)?;
    assemble::assemble(mesh, field, validation, |pts, vals, case, tol| {
        let tet = SignedTet {
            vertices: [pts[0], pts[1], pts[2], pts[3]],
            values: [vals[0], vals[1], vals[2], vals[3]],
        };
        region_tet_element(field, integrand, &tet, case, q, tol)
    })
}

/// `int_{U ∩ {F < 0}} f` for a box `U` in 2-D.
pub fn integrate_region2d(
    domain: &BoxDomain<2>,
    n: usize,
    field: &dyn ScalarField<2>,
    integrand: &dyn ScalarField<2>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<f64> {
    Ok(integrate_region2d_report(domain, n, field, integrand, q, cfg)?.value)
}

/// `int_{U ∩ {F < 0}} f` for a box `U` in 3-D.
pub fn integrate_region3d(
    domain: &BoxDomain<3>,
    n: usize,
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<f64> {
    Ok(integrate_region3d_report(domain, n, field, integrand, q, cfg)?.value)
}
