//! Surface integrals over `{F = 0}` in 3-D.
//!
//! A cut tetrahedron with a lone apex `A0` is charted by the triangle
//! `B1 B2 B3` of edge crossings: each point `X` of that triangle is sent
//! along the ray from `A0` onto the surface. Tetrahedra whose signs split
//! two against two are first cut into two tetrahedra that each have an apex.

use crate::assemble::{self, AssemblyReport, ElementResult};
use crate::error::{QuadError, Result};
use crate::field::ScalarField;
use crate::geometry::{classify_simplex, cross3, det3, BoxDomain, ElementCase, Point3, SignPattern};
use crate::mesh::{tetrahedralize_box, DisplacementConfig};
use crate::rootfind::{ray_root, root_with_values};
use crate::rules::{rules, SimplexRule};

/// Tetrahedron together with the level-set values at its vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedTet {
    pub vertices: [Point3; 4],
    pub values: [f64; 4],
}

/// Splits a tetrahedron with two positive (`pair`) and two negative
/// vertices at the crossing `B` on a positive-negative edge. The first child
/// has the negative end replaced by `B`, the second the positive end; `B`
/// gets value zero.
///
/// The edge from the first positive to the first negative vertex is used
/// unless the surface crosses back over one of the new edges `B X`, which
/// happens where it is barely resolved; then the first other edge (in index
/// order) whose new edges are clean is taken.
pub fn split_case2_tet(
    field: &dyn ScalarField<3>,
    tet: &SignedTet,
    pair: [usize; 2],
    zero_tol: f64,
) -> Result<[SignedTet; 2]> {
    let negative: Vec<usize> = (0..4).filter(|i| !pair.contains(i)).collect();
    let p = pair[0].min(pair[1]);
    let canonical = split_on_edge(field, tet, p, negative[0], zero_tol)?;
    if clean_split(field, tet, &canonical, p, negative[0]) {
        return Ok(canonical.0);
    }
    // index order, so F and -F pick the same edge
    let mut edges: Vec<(usize, usize)> = pair
        .iter()
        .flat_map(|&a| negative.iter().map(move |&b| (a.min(b), a.max(b))))
        .collect();
    edges.sort_unstable();
    for (a, b) in edges {
        let (pos, neg) = if pair.contains(&a) { (a, b) } else { (b, a) };
        if (pos, neg) == (p, negative[0]) {
            continue;
        }
        if let Ok(split) = split_on_edge(field, tet, pos, neg, zero_tol) {
            if clean_split(field, tet, &split, pos, neg) {
                return Ok(split.0);
            }
        }
    }
    Ok(canonical.0)
}

fn split_on_edge(
    field: &dyn ScalarField<3>,
    tet: &SignedTet,
    p: usize,
    n: usize,
    zero_tol: f64,
) -> Result<([SignedTet; 2], Point3)> {
    let (v, f) = (&tet.vertices, &tet.values);
    let b = root_with_values(field, &v[p], &v[n], f[p], f[n], zero_tol)?.point;
    let mut first = *tet;
    first.vertices[n] = b;
    first.values[n] = 0.0;
    let mut second = *tet;
    second.vertices[p] = b;
    second.values[p] = 0.0;
    Ok(([first, second], b))
}

/// `F` keeps the sign of `X` on each new edge `B X`, both at `B` (to first
/// order) and at sampled interior points.
fn clean_split(
    field: &dyn ScalarField<3>,
    tet: &SignedTet,
    split: &([SignedTet; 2], Point3),
    p: usize,
    n: usize,
) -> bool {
    let b = split.1;
    let (_, grad) = field.value_and_gradient(&b);
    (0..4).filter(|&i| i != p && i != n).all(|i| {
        let x = tet.vertices[i];
        let s = tet.values[i].signum();
        s * grad.dot(&(x - b)) > 0.0
            && (1..assemble::VALIDATION_SAMPLES)
                .all(|k| s * field.value(&b.lerp(&x, k as f64 / assemble::VALIDATION_SAMPLES as f64)) > 0.0)
    })
}

/// Apex of a cut tetrahedron and the crossings on its three apex edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceChart {
    pub apex: Point3,
    pub f_apex: f64,
    /// `B1, B2, B3`; the chart is `X = (1 - m1 - m2) B3 + m1 B1 + m2 B2`.
    pub b: [Point3; 3],
    edge_params: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub point: Point3,
    /// Partial derivatives of the surface point in `m1` and `m2`.
    pub d1: Point3,
    pub d2: Point3,
    pub area_factor: f64,
    /// Ray point `X - A0`, needed by the volume chart.
    pub ray: Point3,
}

impl SurfaceChart {
    pub fn new(field: &dyn ScalarField<3>, apex: Point3, b: [Point3; 3]) -> Self {
        SurfaceChart {
            apex,
            f_apex: field.value(&apex),
            b,
            edge_params: None,
        }
    }

    pub fn from_tet(field: &dyn ScalarField<3>, tet: &SignedTet, apex: usize, zero_tol: f64) -> Result<Self> {
        let a0 = tet.vertices[apex];
        let fa = tet.values[apex];
        let mut b = [a0; 3];
        let mut s = [0.0; 3];
        for (slot, i) in (0..4).filter(|&i| i != apex).enumerate() {
            let r = root_with_values(field, &a0, &tet.vertices[i], fa, tet.values[i], zero_tol)?;
            b[slot] = r.point;
            s[slot] = r.t;
        }
        Ok(SurfaceChart {
            apex: a0,
            f_apex: fa,
            b,
            edge_params: Some(s),
        })
    }

    pub fn chart_point(&self, m1: f64, m2: f64) -> Point3 {
        self.b[2] * (1.0 - m1 - m2) + self.b[0] * m1 + self.b[1] * m2
    }

    fn facet_t(&self, m1: f64, m2: f64) -> Option<f64> {
        self.edge_params
            .map(|[s1, s2, s3]| 1.0 / ((1.0 - m1 - m2) * s3 + m1 * s1 + m2 * s2))
    }
}

pub fn surface_point_and_jacobian(
    field: &dyn ScalarField<3>,
    chart: &SurfaceChart,
    m1: f64,
    m2: f64,
    zero_tol: f64,
) -> Result<SurfacePoint> {
    let a0 = chart.apex;
    let x = chart.chart_point(m1, m2);
    let (y, _) = ray_root(field, &a0, chart.f_apex, &x, chart.facet_t(m1, m2), zero_tol)?;
    let (_, grad) = field.value_and_gradient(&y);
    let d = x - a0;
    let e = y - a0;

    // rows: grad F, and the two collinearity constraints of Y - A0 with
    // X - A0 written against the largest component p of X - A0
    let p = (0..3)
        .max_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()))
        .unwrap();
    let (qi, ri) = match p {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut row1 = Point3::new([0.0; 3]);
    row1[p] = d[qi];
    row1[qi] = -d[p];
    let mut row2 = Point3::new([0.0; 3]);
    row2[p] = d[ri];
    row2[ri] = -d[p];
    let det = det3(&grad, &row1, &row2);
    let scale = grad.norm() * d.norm() * d.norm();
    if !(det.abs() >= 1e-13 * scale) || scale == 0.0 {
        return Err(QuadError::SingularJacobian { det, scale });
    }
    // M J = (0, r1, r2)  =>  J = (r1 (row2 x grad) + r2 (grad x row1)) / det
    let c1 = cross3(&row2, &grad);
    let c2 = cross3(&grad, &row1);
    let solve = |dx: Point3| {
        let r1 = -(e[p] * dx[qi] - e[qi] * dx[p]);
        let r2 = -(e[p] * dx[ri] - e[ri] * dx[p]);
        (c1 * r1 + c2 * r2) * (1.0 / det)
    };
    let d1 = solve(chart.b[0] - chart.b[2]);
    let d2 = solve(chart.b[1] - chart.b[2]);
    Ok(SurfacePoint {
        point: y,
        d1,
        d2,
        area_factor: cross3(&d1, &d2).norm(),
        ray: e,
    })
}

/// Visits the surface nodes of one chart with their weights `w * area`.
pub(crate) fn surface_chart_nodes(
    field: &dyn ScalarField<3>,
    chart: &SurfaceChart,
    tri: &SimplexRule,
    zero_tol: f64,
    mut visit: impl FnMut(&SurfacePoint, f64),
) -> Result<()> {
    for (pt, &w) in tri.points.iter().zip(&tri.weights) {
        let sp = surface_point_and_jacobian(field, chart, pt[0], pt[1], zero_tol)?;
        visit(&sp, w * sp.area_factor);
    }
    Ok(())
}

pub(crate) fn surface_element(
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    tet: &SignedTet,
    case: ElementCase,
    q: usize,
    zero_tol: f64,
) -> Result<ElementResult> {
    match case {
        ElementCase::Empty | ElementCase::Full => Ok(ElementResult::uncut(0.0)),
        ElementCase::CutApex(apex) => {
            let chart = SurfaceChart::from_tet(field, tet, apex, zero_tol)?;
            let mut out = ElementResult::cut();
            surface_chart_nodes(field, &chart, &rules(q)?.triangle, zero_tol, |sp, w| {
                out.add(w, integrand.value(&sp.point));
            })?;
            Ok(out.finish())
        }
        ElementCase::CutTwoTwo(pair) => {
            let mut out = ElementResult::cut();
            for child in split_case2_tet(field, tet, pair, zero_tol)? {
                let case = classify_simplex(&SignPattern::from_values(&child.values, zero_tol), 3)?;
                out.merge(&surface_element(field, integrand, &child, case, q, zero_tol)?);
            }
            Ok(out.finish())
        }
    }
}

/// `int_{Gamma ∩ T} f dS` over one tetrahedron.
pub fn integrate_surface_tet(
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
    Ok(surface_element(field, integrand, &st, case, q, zero_tol)?.value)
}

pub fn integrate_surface_report(
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
    assemble::assemble(&mesh, field, validation, |pts, vals, case, tol| {
        let tet = SignedTet {
            vertices: [pts[0], pts[1], pts[2], pts[3]],
            values: [vals[0], vals[1], vals[2], vals[3]],
        };
        surface_element(field, integrand, &tet, case, q, tol)
    })
}

/// `int_{Gamma ∩ U} f dS` for a surface `Gamma = {F = 0}` in the box `U`.
pub fn integrate_surface(
    domain: &BoxDomain<3>,
    n: usize,
    field: &dyn ScalarField<3>,
    integrand: &dyn ScalarField<3>,
    q: usize,
    cfg: &DisplacementConfig,
) -> Result<f64> {
    Ok(integrate_surface_report(domain, n, field, integrand, q, cfg)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Constant, FnField};
    use crate::geometry::{signed_measure, Point};
    use proptest::prelude::*;

    fn plane(n: [f64; 3], c: f64) -> impl ScalarField<3> {
        FnField::new(
            move |p: &Point3| n[0] * p[0] + n[1] * p[1] + n[2] * p[2] - c,
            move |_: &Point3| Point(n),
        )
    }

    fn sphere(r: f64) -> impl ScalarField<3> {
        FnField::new(
            move |p: &Point3| p.dot(p) - r * r,
            |p: &Point3| *p * 2.0,
        )
    }

    fn unit_tet() -> [Point3; 4] {
        [
            Point([0.0, 0.0, 0.0]),
            Point([1.0, 0.0, 0.0]),
            Point([0.0, 1.0, 0.0]),
            Point([0.0, 0.0, 1.0]),
        ]
    }

    #[test]
    fn horizontal_slice_of_unit_tet() {
        for q in 1..=5 {
            let v = integrate_surface_tet(&unit_tet(), &plane([0.0, 0.0, 1.0], 0.25), &Constant(1.0), q).unwrap();
            assert!((v - 0.28125).abs() < 1e-15, "q={q}: {v}");
        }
    }

    #[test]
    fn split_example() {
        let f = plane([1.0, 0.0, 0.0], 0.5);
        let verts = [
            Point([0.0, 0.0, 0.0]),
            Point([1.0, 0.0, 0.0]),
            Point([1.0, 1.0, 0.0]),
            Point([0.0, 0.0, 1.0]),
        ];
        let tet = SignedTet {
            vertices: verts,
            values: verts.map(|p| f.value(&p)),
        };
        let signs = SignPattern::from_values(&tet.values, 1e-12);
        assert_eq!(classify_simplex(&signs, 3).unwrap(), ElementCase::CutTwoTwo([1, 2]));
        let [c1, c2] = split_case2_tet(&f, &tet, [1, 2], 1e-12).unwrap();
        let b = Point([0.5, 0.0, 0.0]);
        assert!((c1.vertices[0] - b).norm() < 1e-15);
        assert!((c2.vertices[1] - b).norm() < 1e-15);
        assert_eq!((c1.values[0], c2.values[1]), (0.0, 0.0));
        let parent = signed_measure(&verts);
        let kids = signed_measure(&c1.vertices) + signed_measure(&c2.vertices);
        assert!((parent - kids).abs() < 1e-15);
        for c in [c1, c2] {
            let case = classify_simplex(&SignPattern::from_values(&c.values, 1e-12), 3).unwrap();
            assert!(matches!(case, ElementCase::CutApex(_)));
        }
    }

    #[test]
    fn split_avoids_edge_the_surface_recrosses() {
        // a coarse tet near the tip of x^2 + 4y^2 + 9z^2 = 1
        let f = FnField::new(
            |p: &Point3| p[0] * p[0] + 4.0 * p[1] * p[1] + 9.0 * p[2] * p[2] - 1.0,
            |p: &Point3| Point([2.0 * p[0], 8.0 * p[1], 18.0 * p[2]]),
        );
        let verts = [
            Point([-0.89375, -0.1375, -0.06875]),
            Point([-0.9625, -0.20625, -0.06875]),
            Point([-0.881120565795465, -0.19459206073427548, 0.0]),
            Point([-0.9774229290052643, -0.14602738800300805, 0.0]),
        ];
        let tet = SignedTet {
            vertices: verts,
            values: verts.map(|p| f.value(&p)),
        };
        let area = |kids: &[SignedTet; 2]| -> f64 {
            kids.iter()
                .map(|c| {
                    let case = classify_simplex(&SignPattern::from_values(&c.values, 1e-12), 3).unwrap();
                    surface_element(&f, &Constant(1.0), c, case, 8, 1e-12).unwrap().value
                })
                .sum()
        };
        let canonical = split_on_edge(&f, &tet, 1, 0, 1e-12).unwrap();
        assert!(!clean_split(&f, &tet, &canonical, 1, 0));
        let others: Vec<f64> = [(1, 2), (3, 0), (3, 2)]
            .iter()
            .map(|&(p, n)| area(&split_on_edge(&f, &tet, p, n, 1e-12).unwrap().0))
            .collect();
        let chosen = area(&split_case2_tet(&f, &tet, [1, 3], 1e-12).unwrap());
        for a in &others {
            assert!((chosen - a).abs() < 1e-8, "{chosen} vs {a}");
        }
        assert!((area(&canonical.0) - chosen).abs() > 1e-6);
    }

    #[test]
    fn planar_two_two_cut_is_exact() {
        // x + y = 1/2 cuts the unit tet in a 0.5 x sqrt(1/2) rectangle
        let f = plane([1.0, 1.0, 0.0], 0.5);
        let exact = 0.5 * 0.5f64.sqrt();
        for q in 1..=4 {
            let v = integrate_surface_tet(&unit_tet(), &f, &Constant(1.0), q).unwrap();
            assert!((v - exact).abs() < 1e-13, "q={q}: {v}");
        }
    }

    #[test]
    fn sphere_area() {
        let b = BoxDomain::new([-1.0; 3], [1.0; 3]).unwrap();
        let cfg = DisplacementConfig::default();
        let r = integrate_surface_report(&b, 16, &sphere(0.5), &Constant(1.0), 8, &cfg).unwrap();
        // a few split tets near the poles are charted from a vertex whose rays
        // nearly graze the sphere, which slows convergence in q there
        assert!((r.value - std::f64::consts::PI).abs() < 3e-7, "{}", r.value);
        assert!(r.counts.cut_two_two > 0 && r.counts.cut_apex > 0);
        assert!(r.min_cut_weight > 0.0);
        let v = integrate_surface(&b, 16, &sphere(0.5), &Constant(1.0), 12, &cfg).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-7, "{v}");
        let shifted = b.translated([2.0 / 48.0; 3]);
        let w = integrate_surface(&shifted, 16, &sphere(0.5), &Constant(1.0), 12, &cfg).unwrap();
        assert!((w - v).abs() < 2e-7, "{w} vs {v}");
    }

    #[test]
    fn plane_through_grid_faces() {
        let b = BoxDomain::new([0.0; 3], [1.0; 3]).unwrap();
        let f = plane([0.0, 0.0, 1.0], 0.5);
        let x = FnField::new(|p: &Point3| p[0], |_: &Point3| Point([1.0, 0.0, 0.0]));
        for n in [1, 2, 3, 4] {
            let cfg = DisplacementConfig::default();
            assert!((integrate_surface(&b, n, &f, &Constant(1.0), 2, &cfg).unwrap() - 1.0).abs() < 1e-13);
            assert!((integrate_surface(&b, n, &f, &x, 2, &cfg).unwrap() - 0.5).abs() < 1e-13);
        }
    }

    fn fd_derivs(f: &dyn ScalarField<3>, chart: &SurfaceChart, m1: f64, m2: f64, h: f64) -> (Point3, Point3) {
        let at = |a: f64, b: f64| surface_point_and_jacobian(f, chart, a, b, 1e-14).unwrap().point;
        (
            (at(m1 + h, m2) - at(m1 - h, m2)) * (0.5 / h),
            (at(m1, m2 + h) - at(m1, m2 - h)) * (0.5 / h),
        )
    }

    /// Chart on the unit sphere or an ellipsoid around direction `dir`:
    /// three surface points near it and an apex inside or outside.
    fn random_chart(
        ellipsoid: bool,
        theta: f64,
        phi: f64,
        spread: f64,
        depth: f64,
    ) -> (Box<dyn ScalarField<3>>, SurfaceChart) {
        let axes = if ellipsoid { [1.0, 0.5, 1.0 / 3.0] } else { [1.0; 3] };
        let on = |t: f64, p: f64| {
            Point([
                axes[0] * t.sin() * p.cos(),
                axes[1] * t.sin() * p.sin(),
                axes[2] * t.cos(),
            ])
        };
        let b = [
            on(theta + spread, phi),
            on(theta - 0.5 * spread, phi + spread),
            on(theta - 0.5 * spread, phi - spread),
        ];
        let apex = on(theta, phi) * depth;
        let f = FnField::new(
            move |p: &Point3| (0..3).map(|k| (p[k] / axes[k]).powi(2)).sum::<f64>() - 1.0,
            move |p: &Point3| Point([0, 1, 2].map(|k| 2.0 * p[k] / (axes[k] * axes[k]))),
        );
        let chart = SurfaceChart::new(&f, apex, b);
        (Box::new(f), chart)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn derivatives_match_finite_differences(
            ellipsoid in any::<bool>(),
            theta in 0.4f64..2.7,
            phi in 0.0f64..std::f64::consts::TAU,
            spread in 0.05f64..0.25,
            depth in prop_oneof![0.6f64..0.9, 1.1f64..1.4],
            m1 in 0.05f64..0.45,
            m2 in 0.05f64..0.45,
        ) {
            let (f, chart) = random_chart(ellipsoid, theta, phi, spread, depth);
            let sp = surface_point_and_jacobian(f.as_ref(), &chart, m1, m2, 1e-14).unwrap();
            let (fd1, fd2) = fd_derivs(f.as_ref(), &chart, m1, m2, 1e-5);
            let scale = sp.d1.norm().max(sp.d2.norm());
            prop_assert!((sp.d1 - fd1).norm() <= 1e-6 * scale, "{:?} vs {:?}", sp.d1, fd1);
            prop_assert!((sp.d2 - fd2).norm() <= 1e-6 * scale, "{:?} vs {:?}", sp.d2, fd2);
            prop_assert!(f.value(&sp.point).abs() < 1e-13);
            prop_assert!(sp.area_factor > 0.0);
        }

        #[test]
        fn planar_parent_equals_children(
            n in prop::array::uniform3(-1.0f64..1.0),
            c in 0.1f64..0.4,
        ) {
            let f = plane(n, c);
            let vals = unit_tet().map(|p| f.value(&p));
            let signs = SignPattern::from_values(&vals, 1e-12);
            if let Ok(ElementCase::CutTwoTwo(pair)) = classify_simplex(&signs, 3) {
                let tet = SignedTet { vertices: unit_tet(), values: vals };
                let whole = integrate_surface_tet(&unit_tet(), &f, &Constant(1.0), 3).unwrap();
                let mut parts = 0.0;
                for child in split_case2_tet(&f, &tet, pair, 1e-12).unwrap() {
                    parts += integrate_surface_tet(&child.vertices, &f, &Constant(1.0), 3).unwrap();
                }
                prop_assert!((whole - parts).abs() <= 1e-13 * whole.max(1.0));
                // the section is the quadrilateral of the four edge crossings
                let neg: Vec<usize> = (0..4).filter(|i| !pair.contains(i)).collect();
                let v = unit_tet();
                let cross = |i: usize, j: usize| v[i].lerp(&v[j], vals[i] / (vals[i] - vals[j]));
                let quad = [
                    cross(pair[0], neg[0]),
                    cross(pair[0], neg[1]),
                    cross(pair[1], neg[1]),
                    cross(pair[1], neg[0]),
                ];
                let exact = 0.5 * cross3(&(quad[2] - quad[0]), &(quad[3] - quad[1])).norm();
                prop_assert!((whole - exact).abs() <= 1e-13, "{} vs {}", whole, exact);
            }
        }
    }
}
