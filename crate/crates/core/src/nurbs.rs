//! Biquadratic NURBS patches over a contact grid.
//!
//! Each grid cell becomes one patch with a 3×3 control net: the four
//! contacts at the corners, the four edge control points at the edge
//! midpoints and their average in the centre. With knots `[0,0,0,1,1,1]`
//! and unit weights the patch is a biquadratic Bézier.
//!
//! Net index `P[i][j]`: `i` follows `u` (grid columns, +X) and `j` follows
//! `v` (grid rows, +Y).

use crate::curvature::{central_control_point, control_point, ControlPoint};
use crate::error::{Error, Result};
use crate::mesh::{TriangleMesh, MIN_TRIANGLE_AREA};
use crate::probe::{ContactGrid, ContactSample};
use crate::surface::lerp;
use crate::Vec3;

pub const DEGREE: usize = 2;
pub const CLAMPED_KNOTS: [f64; 6] = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];

/// Cox–de Boor basis `N_{i,p}(u)`. `0/0` terms vanish and the last
/// non-empty span is closed at the final knot so that `u = 1` interpolates.
pub fn basis_function(i: usize, p: usize, u: f64, knots: &[f64]) -> Result<f64> {
    if knots.len() < p + 2 || i + p + 1 >= knots.len() {
        return Err(Error::InvalidInput(format!(
            "basis index {i} of degree {p} out of range for {} knots",
            knots.len()
        )));
    }
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if !(u >= first && u <= last) {
        return Err(Error::InvalidInput(format!("parameter {u} outside [{first}, {last}]")));
    }
    Ok(cox_de_boor(i, p, u, knots))
}

fn cox_de_boor(i: usize, p: usize, u: f64, knots: &[f64]) -> f64 {
    if p == 0 {
        let (lo, hi) = (knots[i], knots[i + 1]);
        let last = knots[knots.len() - 1];
        let inside = lo <= u && u < hi;
        let closing_span = u == last && lo < hi && hi == last;
        return if inside || closing_span { 1.0 } else { 0.0 };
    }
    let mut out = 0.0;
    let left_den = knots[i + p] - knots[i];
    if left_den != 0.0 {
        out += (u - knots[i]) / left_den * cox_de_boor(i, p - 1, u, knots);
    }
    let right_den = knots[i + p + 1] - knots[i + 1];
    if right_den != 0.0 {
        out += (knots[i + p + 1] - u) / right_den * cox_de_boor(i + 1, p - 1, u, knots);
    }
    out
}

fn quadratic_basis(u: f64, knots: &[f64; 6]) -> [f64; 3] {
    [0, 1, 2].map(|i| cox_de_boor(i, DEGREE, u, knots))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NurbsPatch {
    pub net: [[Vec3; 3]; 3],
    pub weights: [[f64; 3]; 3],
    pub knots_u: [f64; 6],
    pub knots_v: [f64; 6],
}

impl NurbsPatch {
    /// Unit weights and clamped uniform knots.
    pub fn bezier(net: [[Vec3; 3]; 3]) -> Self {
        Self {
            net,
            weights: [[1.0; 3]; 3],
            knots_u: CLAMPED_KNOTS,
            knots_v: CLAMPED_KNOTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().flatten().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("patch weights must be positive".into()));
        }
        for k in [&self.knots_u, &self.knots_v] {
            if k.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidInput("knot vector must be non-decreasing".into()));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, u: f64, v: f64) -> Vec3 {
        evaluate_patch(self, u, v)
    }
}

/// Rational tensor-product evaluation at `(u, v) ∈ [0, 1]²`.
pub fn evaluate_patch(patch: &NurbsPatch, u: f64, v: f64) -> Vec3 {
    let nu = quadratic_basis(u, &patch.knots_u);
    let nv = quadratic_basis(v, &patch.knots_v);
    let mut num = Vec3::zeros();
    let mut den = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let w = nu[i] * nv[j] * patch.weights[i][j];
            num += patch.net[i][j] * w;
            den += w;
        }
    }
    num / den
}

/// Edge control point tagged with the two grid nodes it joins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeControlPoint {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub point: ControlPoint,
}

/// Patch for one grid cell.
///
/// `corners` are `(r,c), (r,c+1), (r+1,c), (r+1,c+1)`; `edges` are bottom
/// `(r,c)→(r,c+1)`, left `(r,c)→(r+1,c)`, right `(r,c+1)→(r+1,c+1)` and top
/// `(r+1,c)→(r+1,c+1)`.
pub fn assemble_patch(corners: [&ContactSample; 4], edges: [&EdgeControlPoint; 4]) -> Result<NurbsPatch> {
    let (r, c) = corners[0].grid_index;
    let expect = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)];
    for (k, (s, e)) in corners.iter().zip(expect).enumerate() {
        if s.grid_index != e {
            return Err(Error::InvalidInput(format!(
                "corner {k} has grid index {:?}, expected {e:?}",
                s.grid_index
            )));
        }
    }
    let expect_edges = [(0, 1), (0, 2), (1, 3), (2, 3)].map(|(a, b)| (expect[a], expect[b]));
    for (k, (e, (a, b))) in edges.iter().zip(expect_edges).enumerate() {
        if (e.from, e.to) != (a, b) {
            return Err(Error::InvalidInput(format!(
                "edge {k} joins {:?}→{:?}, expected {a:?}→{b:?}",
                e.from, e.to
            )));
        }
    }

    let [bottom, left, right, top] = edges.map(|e| e.point.position);
    let [p00, p20, p02, p22] = corners.map(|s| s.position);
    let center = central_control_point(bottom, left, right, top);
    Ok(NurbsPatch::bezier([
        [p00, left, p02],
        [bottom, center, top],
        [p20, right, p22],
    ]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    /// Cells per row / column: `(rows − 1, cols − 1)` of the source grid.
    pub cell_rows: usize,
    pub cell_cols: usize,
    /// Row-major.
    pub patches: Vec<NurbsPatch>,
    /// Edge control points along rows: `(r, c) → (r, c + 1)`.
    pub row_edges: Vec<EdgeControlPoint>,
    /// Edge control points along columns: `(r, c) → (r + 1, c)`.
    pub col_edges: Vec<EdgeControlPoint>,
}

impl PatchGrid {
    pub fn patch(&self, row: usize, col: usize) -> &NurbsPatch {
        &self.patches[row * self.cell_cols + col]
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

fn edge_between(a: &ContactSample, b: &ContactSample) -> Result<EdgeControlPoint> {
    let point = control_point(a.position, a.normal, b.position, b.normal).map_err(|e| Error::ControlPoint {
        a: a.grid_index,
        b: b.grid_index,
        source: Box::new(e),
    })?;
    Ok(EdgeControlPoint {
        from: a.grid_index,
        to: b.grid_index,
        point,
    })
}

/// One control point per adjacent contact pair, one patch per cell.
pub fn build_patch_grid(grid: &ContactGrid) -> Result<PatchGrid> {
    let (rows, cols) = (grid.rows, grid.cols);
    if rows < 2 || cols < 2 || grid.samples.len() != rows * cols {
        return Err(Error::IncompleteGrid(format!(
            "{rows} × {cols} grid with {} samples",
            grid.samples.len()
        )));
    }

    let mut row_edges = Vec::with_capacity(rows * (cols - 1));
    for r in 0..rows {
        for c in 0..cols - 1 {
            row_edges.push(edge_between(grid.get(r, c), grid.get(r, c + 1))?);
        }
    }
    let mut col_edges = Vec::with_capacity((rows - 1) * cols);
    for r in 0..rows - 1 {
        for c in 0..cols {
            col_edges.push(edge_between(grid.get(r, c), grid.get(r + 1, c))?);
        }
    }

    let mut patches = Vec::with_capacity((rows - 1) * (cols - 1));
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            let corners = [grid.get(r, c), grid.get(r, c + 1), grid.get(r + 1, c), grid.get(r + 1, c + 1)];
            let edges = [
                &row_edges[r * (cols - 1) + c],
                &col_edges[r * cols + c],
                &col_edges[r * cols + c + 1],
                &row_edges[(r + 1) * (cols - 1) + c],
            ];
            patches.push(assemble_patch(corners, edges)?);
        }
    }

    Ok(PatchGrid {
        cell_rows: rows - 1,
        cell_cols: cols - 1,
        patches,
        row_edges,
        col_edges,
    })
}

/// Sample every patch on a `d × d` parameter lattice and triangulate.
///
/// Vertices on shared patch boundaries are emitted once. Triangles are
/// grouped by patch in row-major order, `2(d−1)²` per patch, split along the
/// `(u, v) → (u+1, v+1)` diagonal and wound counter-clockwise seen from +Z.
pub fn tessellate(patch_grid: &PatchGrid, d: usize) -> Result<TriangleMesh> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("tessellation density must be ≥ 2, got {d}")));
    }
    if patch_grid.is_empty() {
        return Err(Error::Empty("patch grid"));
    }
    let step = d - 1;
    let nu = patch_grid.cell_cols * step + 1;
    let nv = patch_grid.cell_rows * step + 1;

    let mut vertices = Vec::with_capacity(nu * nv);
    for gj in 0..nv {
        let pr = (gj / step).min(patch_grid.cell_rows - 1);
        let v = lerp(0.0, 1.0, gj - pr * step, d);
        for gi in 0..nu {
            let pc = (gi / step).min(patch_grid.cell_cols - 1);
            let u = lerp(0.0, 1.0, gi - pc * step, d);
            vertices.push(evaluate_patch(patch_grid.patch(pr, pc), u, v));
        }
    }

    let mut triangles = Vec::with_capacity(patch_grid.len() * 2 * step * step);
    let index = |gi: usize, gj: usize| (gj * nu + gi) as u32;
    for pr in 0..patch_grid.cell_rows {
        for pc in 0..patch_grid.cell_cols {
            for j in 0..step {
                for i in 0..step {
                    let (gi, gj) = (pc * step + i, pr * step + j);
                    let a = index(gi, gj);
                    let b = index(gi + 1, gj);
                    let c = index(gi + 1, gj + 1);
                    let e = index(gi, gj + 1);
                    for tri in [[a, b, c], [a, c, e]] {
                        let [p, q, s] = tri.map(|k| vertices[k as usize]);
                        if 0.5 * (q - p).cross(&(s - p)).norm() > MIN_TRIANGLE_AREA {
                            triangles.push(tri);
                        }
                    }
                }
            }
        }
    }
    Ok(TriangleMesh::new(vertices, triangles))
}
