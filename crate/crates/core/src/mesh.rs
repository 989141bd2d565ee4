//! Structured simplicial meshes of a box and the vertex-displacement pass
//! that keeps every mesh vertex away from the level set.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QuadError, Result};
use crate::field::ScalarField;
use crate::geometry::{direction_sign, signed_measure, BoxDomain, Point};

/// Which box faces a vertex lies on: bit `2k` for the low face of axis `k`,
/// bit `2k + 1` for the high face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundaryMask(pub u8);

impl BoundaryMask {
    pub fn on_axis(self, axis: usize) -> bool {
        self.0 & (0b11 << (2 * axis)) != 0
    }

    pub fn is_interior(self) -> bool {
        self.0 == 0
    }

    /// Number of axes along which the vertex is pinned.
    pub fn pinned_axes(self, dim: usize) -> usize {
        (0..dim).filter(|&k| self.on_axis(k)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh<const D: usize> {
    pub domain: BoxDomain<D>,
    pub vertices: Vec<Point<D>>,
    /// Flat vertex indices, `D + 1` per simplex.
    simplices: Vec<usize>,
    pub boundary: Vec<BoundaryMask>,
    /// Subdivisions along the shortest box axis.
    pub n: usize,
    /// Cells per axis.
    pub cells: [usize; D],
    /// Largest cell width over the axes; the displacement length scale.
    pub h_cell: f64,
    /// Largest simplex diameter.
    pub h: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DisplacementConfig {
    pub c: f64,
    pub max_passes: usize,
}

impl Default for DisplacementConfig {
    fn default() -> Self {
        DisplacementConfig {
            c: 0.25,
            max_passes: 3,
        }
    }
}

impl DisplacementConfig {
    pub fn new(c: f64, max_passes: usize) -> Result<Self> {
        if !(c > 0.0 && c < 0.5) {
            return Err(QuadError::Config(format!("displacement coefficient c = {c} must lie in (0, 1/2)")));
        }
        if max_passes == 0 {
            return Err(QuadError::Config("max_passes must be at least 1".into()));
        }
        Ok(DisplacementConfig { c, max_passes })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MeshValidationReport {
    /// Minimum over vertices of the estimated distance to the level set
    /// divided by `h_cell` (corners excluded).
    pub min_clearance_ratio: f64,
    pub max_sign_changes_per_edge: usize,
    pub ok: bool,
}

fn cells_per_axis<const D: usize>(domain: &BoxDomain<D>, n: usize) -> [usize; D] {
    let shortest = (0..D).map(|k| domain.extent(k)).fold(f64::INFINITY, f64::min);
    let mut cells = [n; D];
    for (k, c) in cells.iter_mut().enumerate() {
        let ratio = domain.extent(k) / shortest;
        *c = ((n as f64 * ratio) - 1e-9).ceil().max(1.0) as usize;
    }
    cells
}

fn grid_coordinate<const D: usize>(domain: &BoxDomain<D>, cells: &[usize; D], axis: usize, i: usize) -> f64 {
    if i == cells[axis] {
        domain.hi[axis]
    } else {
        domain.lo[axis] + domain.extent(axis) * (i as f64 / cells[axis] as f64)
    }
}

fn boundary_bits(i: usize, cells: usize, axis: usize) -> u8 {
    let mut b = 0;
    if i == 0 {
        b |= 1 << (2 * axis);
    }
    if i == cells {
        b |= 1 << (2 * axis + 1);
    }
    b
}

impl<const D: usize> SimplicialMesh<D> {
    pub fn dim(&self) -> usize {
        D
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len() / (D + 1)
    }

    pub fn simplex(&self, k: usize) -> &[usize] {
        &self.simplices[k * (D + 1)..(k + 1) * (D + 1)]
    }

    pub fn simplex_points(&self, k: usize) -> Vec<Point<D>> {
        self.simplex(k).iter().map(|&i| self.vertices[i]).collect()
    }

    pub fn signed_measure(&self, k: usize) -> f64 {
        signed_measure(&self.simplex_points(k))
    }

    pub fn total_measure(&self) -> f64 {
        crate::assemble::compensated_sum((0..self.num_simplices()).map(|k| self.signed_measure(k).abs()))
    }

    fn max_diameter(&self) -> f64 {
        let mut h = 0.0f64;
        for k in 0..self.num_simplices() {
            let s = self.simplex(k);
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    h = h.max(self.vertices[s[i]].distance(&self.vertices[s[j]]));
                }
            }
        }
        h
    }

    /// Every distinct edge as an ordered vertex pair.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.num_simplices() * (D + 1) * D / 2);
        for k in 0..self.num_simplices() {
            let s = self.simplex(k);
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    edges.push((s[i].min(s[j]), s[i].max(s[j])));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Text dump: `v x y [z]` per vertex, then `s i0 i1 i2 [i3]` per simplex.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vertices {
            write!(w, "v")?;
            for c in v.0 {
                write!(w, " {c:.17e}")?;
            }
            writeln!(w)?;
        }
        for k in 0..self.num_simplices() {
            write!(w, "s")?;
            for i in self.simplex(k) {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Build a mesh from vertices and simplices, flipping each simplex to
    /// positive orientation.
    fn assemble(
        domain: BoxDomain<D>,
        n: usize,
        cells: [usize; D],
        vertices: Vec<Point<D>>,
        boundary: Vec<BoundaryMask>,
        mut simplices: Vec<usize>,
    ) -> Self {
        for s in simplices.chunks_mut(D + 1) {
            let pts: Vec<Point<D>> = s.iter().map(|&i| vertices[i]).collect();
            if signed_measure(&pts) < 0.0 {
                s.swap(0, 1);
            }
        }
        let h_cell = (0..D)
            .map(|k| domain.extent(k) / cells[k] as f64)
            .fold(0.0, f64::max);
        let mut mesh = SimplicialMesh {
            domain,
            vertices,
            simplices,
            boundary,
            n,
            cells,
            h_cell,
            h: 0.0,
        };
        mesh.h = mesh.max_diameter();
        mesh
    }
}

/// `2 n_x n_y` right triangles, every cell cut along the same diagonal.
pub fn triangulate_rectangle(domain: &BoxDomain<2>, n: usize) -> Result<SimplicialMesh<2>> {
    if n == 0 {
        return Err(QuadError::Config("n must be at least 1".into()));
    }
    let cells = cells_per_axis(domain, n);
    let [nx, ny] = cells;
    let idx = |i: usize, j: usize| i + (nx + 1) * j;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity(vertices.capacity());
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point([
                grid_coordinate(domain, &cells, 0, i),
                grid_coordinate(domain, &cells, 1, j),
            ]));
            boundary.push(BoundaryMask(boundary_bits(i, nx, 0) | boundary_bits(j, ny, 1)));
        }
    }
    let mut simplices = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            simplices.extend_from_slice(&[v00, v10, v11]);
            simplices.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Ok(SimplicialMesh::assemble(*domain, n, cells, vertices, boundary, simplices))
}

/// Five tetrahedra per cell: four corner tetrahedra and a central one. Cells
/// alternate orientation in a checkerboard so that the face diagonals of
/// neighbouring cells coincide (every diagonal joins two vertices with even
/// global index sum).
pub fn tetrahedralize_box(domain: &BoxDomain<3>, n: usize) -> Result<SimplicialMesh<3>> {
    if n == 0 {
        return Err(QuadError::Config("n must be at least 1".into()));
    }
    let cells = cells_per_axis(domain, n);
    let [nx, ny, nz] = cells;
    let idx = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    let mut boundary = Vec::with_capacity(vertices.capacity());
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Point([
                    grid_coordinate(domain, &cells, 0, i),
                    grid_coordinate(domain, &cells, 1, j),
                    grid_coordinate(domain, &cells, 2, k),
                ]));
                boundary.push(BoundaryMask(
                    boundary_bits(i, nx, 0) | boundary_bits(j, ny, 1) | boundary_bits(k, nz, 2),
                ));
            }
        }
    }
    let mut simplices = Vec::with_capacity(20 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |a: usize, b: usize, c: usize| idx(i + a, j + b, k + c);
                // local corners whose parity matches the cell's form the central tet
                let even_cell = (i + j + k) % 2 == 0;
                let mut central = Vec::with_capacity(4);
                let mut tips = Vec::with_capacity(4);
                for c in 0..2 {
                    for b in 0..2 {
                        for a in 0..2 {
                            if ((a + b + c) % 2 == 0) == even_cell {
                                central.push((a, b, c));
                            } else {
                                tips.push((a, b, c));
                            }
                        }
                    }
                }
                simplices.extend(central.iter().map(|&(a, b, c)| corner(a, b, c)));
                for &(a, b, c) in &tips {
                    simplices.push(corner(a, b, c));
                    simplices.push(corner(1 - a, b, c));
                    simplices.push(corner(a, 1 - b, c));
                    simplices.push(corner(a, b, 1 - c));
                }
            }
        }
    }
    Ok(SimplicialMesh::assemble(*domain, n, cells, vertices, boundary, simplices))
}

/// Gradient with the components normal to the vertex's box faces removed.
fn tangential_gradient<const D: usize>(grad: Point<D>, mask: BoundaryMask) -> Point<D> {
    let mut g = grad;
    for k in 0..D {
        if mask.on_axis(k) {
            g[k] = 0.0;
        }
    }
    g
}

/// First-order distance from a vertex to the level set, measured within the
/// box faces the vertex is confined to. `None` for box corners, which never
/// move.
pub fn vertex_clearance<const D: usize>(
    field: &dyn ScalarField<D>,
    p: &Point<D>,
    mask: BoundaryMask,
) -> Option<f64> {
    if mask.pinned_axes(D) == D {
        return None;
    }
    let (f, grad) = field.value_and_gradient(p);
    let g = tangential_gradient(grad, mask).norm();
    Some(if f == 0.0 { 0.0 } else { f.abs() / g })
}

/// Pushes every vertex closer than `c h_cell` to the level set a distance
/// `c h_cell` along `sgn(F) grad F` (tangential part only on box faces).
pub fn displace_vertices<const D: usize>(
    mesh: &SimplicialMesh<D>,
    field: &dyn ScalarField<D>,
    cfg: &DisplacementConfig,
) -> Result<SimplicialMesh<D>> {
    let step = cfg.c * mesh.h_cell;
    let mut out = mesh.clone();
    for pass in 0..cfg.max_passes {
        // later passes only rescue vertices that landed near another branch
        let threshold = if pass == 0 { step } else { 0.5 * step };
        let moves: Vec<Option<Point<D>>> = out
            .vertices
            .par_iter()
            .zip(out.boundary.par_iter())
            .map(|(p, &mask)| {
                if mask.pinned_axes(D) == D {
                    return None;
                }
                let (f, grad) = field.value_and_gradient(p);
                let g = tangential_gradient(grad, mask);
                let gn = g.norm();
                if !(gn > 0.0) || f.abs() >= threshold * gn {
                    return None;
                }
                let mut moved = *p + g * (direction_sign(f) * step / gn);
                for k in 0..D {
                    moved[k] = moved[k].clamp(mesh.domain.lo[k], mesh.domain.hi[k]);
                }
                Some(moved)
            })
            .collect();
        let mut any = false;
        for (v, m) in out.vertices.iter_mut().zip(moves) {
            if let Some(m) = m {
                *v = m;
                any = true;
            }
        }
        if !any {
            break;
        }
    }

    let floor = 0.5 * step;
    for (i, (p, &mask)) in out.vertices.iter().zip(&out.boundary).enumerate() {
        if let Some(d) = vertex_clearance(field, p, mask) {
            if !(d >= floor) {
                return Err(QuadError::DisplacementFailed(format!(
                    "vertex {i} at {:?} has clearance {d:.3e} < {floor:.3e}",
                    p.0
                )));
            }
        }
    }
    let min_measure = 1e-14 * mesh.h.powi(D as i32);
    for k in 0..out.num_simplices() {
        let m = out.signed_measure(k);
        if !(m > min_measure) {
            return Err(QuadError::DisplacementFailed(format!(
                "simplex {k} inverted or degenerate (measure {m:.3e})"
            )));
        }
    }
    out.h = out.max_diameter();
    Ok(out)
}

/// Empirical check of the mesh against the level set: vertex clearance and
/// the number of sign changes of `F` sampled along each edge.
pub fn validate_mesh<const D: usize>(
    mesh: &SimplicialMesh<D>,
    field: &dyn ScalarField<D>,
    c: f64,
    samples_per_edge: usize,
) -> MeshValidationReport {
    let min_clearance_ratio = mesh
        .vertices
        .par_iter()
        .zip(mesh.boundary.par_iter())
        .filter_map(|(p, &mask)| vertex_clearance(field, p, mask))
        .map(|d| d / mesh.h_cell)
        .reduce(|| f64::INFINITY, f64::min);
    let samples = samples_per_edge.max(1);
    let max_sign_changes_per_edge = mesh
        .edges()
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (mesh.vertices[i], mesh.vertices[j]);
            let mut changes = 0;
            let mut prev = direction_sign(field.value(&a));
            for s in 1..=samples {
                let cur = direction_sign(field.value(&a.lerp(&b, s as f64 / samples as f64)));
                if cur != prev {
                    changes += 1;
                }
                prev = cur;
            }
            changes
        })
        .max()
        .unwrap_or(0);
    MeshValidationReport {
        min_clearance_ratio,
        max_sign_changes_per_edge,
        ok: min_clearance_ratio >= 0.5 * c && max_sign_changes_per_edge <= 1,
    }
}
