//! Uniform meshes on the unit square.
//!
//! Field cells are indexed row-major with x fastest: cell (i, j) has index `j * n_side + i`.
//! The triangular mesh uses the same convention for its vertices on the `(n_side+1)²` lattice.

use crate::error::{Error, Result};

/// Diameter of the unit square.
pub const DIAM: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldMesh {
    pub n_side: usize,
    pub h: f64,
    pub centers: Vec<[f64; 2]>,
    pub mass_diag: Vec<f64>,
}

pub fn build_field_mesh(n_side: usize) -> Result<FieldMesh> {
    if n_side == 0 {
        return Err(Error::invalid("field mesh needs n_side >= 1"));
    }
    let h = 1.0 / n_side as f64;
    let mut centers = Vec::with_capacity(n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            centers.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
        }
    }
    let mass_diag = vec![h * h; n_side * n_side];
    Ok(FieldMesh { n_side, h, centers, mass_diag })
}

impl FieldMesh {
    pub fn n(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_side + i
    }

    /// Cell containing `x`, using `floor(x / h)` per axis; points on the right/top
    /// boundary map to the last cell.
    pub fn locate(&self, x: [f64; 2]) -> Result<usize> {
        if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
            return Err(Error::invalid(format!("point {x:?} outside the unit square")));
        }
        let n = self.n_side;
        let i = ((x[0] * n as f64).floor() as usize).min(n - 1);
        let j = ((x[1] * n as f64).floor() as usize).min(n - 1);
        Ok(self.index(i, j))
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.centers[a], self.centers[b]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundaryTag {
    pub west: bool,
    pub east: bool,
    pub south: bool,
    pub north: bool,
}

impl BoundaryTag {
    pub fn is_interior(&self) -> bool {
        !(self.west || self.east || self.south || self.north)
    }

    pub fn on_boundary(&self) -> bool {
        !self.is_interior()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub n_side: usize,
    pub h: f64,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<BoundaryTag>,
}

/// Each square is split along its lower-left to upper-right diagonal into
/// `[v00, v10, v11]` and `[v00, v11, v01]`, both counter-clockwise.
pub fn build_tri_mesh(n_side: usize) -> Result<TriMesh> {
    if n_side == 0 {
        return Err(Error::invalid("triangular mesh needs n_side >= 1"));
    }
    let h = 1.0 / n_side as f64;
    let nv = n_side + 1;
    let mut vertices = Vec::with_capacity(nv * nv);
    let mut tags = Vec::with_capacity(nv * nv);
    for j in 0..nv {
        for i in 0..nv {
            vertices.push([i as f64 * h, j as f64 * h]);
            tags.push(BoundaryTag {
                west: i == 0,
                east: i == n_side,
                south: j == 0,
                north: j == n_side,
            });
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            let v00 = j * nv + i;
            let v10 = v00 + 1;
            let v01 = v00 + nv;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Ok(TriMesh { n_side, h, vertices, triangles, tags })
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Triangle containing `x` in the closed square; ties go to the lower triangle.
    pub fn locate(&self, x: [f64; 2]) -> Result<usize> {
        if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
            return Err(Error::invalid(format!("point {x:?} outside the unit square")));
        }
        let n = self.n_side;
        let i = ((x[0] * n as f64).floor() as usize).min(n - 1);
        let j = ((x[1] * n as f64).floor() as usize).min(n - 1);
        let lx = x[0] * n as f64 - i as f64;
        let ly = x[1] * n as f64 - j as f64;
        let sq = 2 * (j * n + i);
        Ok(if ly <= lx { sq } else { sq + 1 })
    }

    /// Barycentric coordinates of `x` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, x: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let l1 = ((x[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (x[1] - pa[1])) / det;
        let l2 = ((pb[0] - pa[0]) * (x[1] - pa[1]) - (x[0] - pa[0]) * (pb[1] - pa[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}
