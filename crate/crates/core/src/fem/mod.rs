//! P1 finite elements for `-div(exp(θ) grad p) = f` on the unit square.
//!
//! The coefficient is constant per triangle, read from the field cell that contains the
//! triangle's centroid. Dirichlet nodes are eliminated and the remaining SPD system is solved
//! with a banded Cholesky factorisation or, for large meshes, Jacobi-preconditioned CG.

pub mod sparse;

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{build_tri_mesh, FieldMesh, TriMesh};
pub use sparse::{band_cholesky_solve, cg_solve, Csr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    /// `p = 1` on the west edge, `p = 0` on the east edge, no flux north and south.
    FlowCell,
    HomogeneousDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Zero,
    /// Nine Gaussian bumps centred on the lattice `(n/4, m/4)`, n, m = 1..3.
    GaussianGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Direct up to `DIRECT_LIMIT` free nodes.
    #[default]
    Auto,
    Direct,
    Cg,
}

pub const DIRECT_LIMIT: usize = 40_000;
pub const CG_TOL: f64 = 1e-10;

const SOURCE_VAR: f64 = 0.001;

/// Degree-5 seven-point rule on the reference triangle: barycentric points and weights
/// (weights sum to one).
const QUAD: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_1;
    const T: f64 = 1.0 / 3.0;
    [
        ([T, T, T], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

#[derive(Debug, Clone)]
pub struct FemProblem {
    pub mesh: TriMesh,
    pub bc: Bc,
    pub source: Source,
    pub solver: LinearSolver,
    /// Field cell for each triangle.
    pub cell_of_tri: Vec<usize>,
    pub field_n: usize,
    /// Unit-coefficient local stiffness per triangle.
    local: Vec<[[f64; 3]; 3]>,
    /// Prescribed nodal values; `None` marks a free node.
    dirichlet: Vec<Option<f64>>,
    free_id: Vec<usize>,
    free_nodes: Vec<usize>,
    /// Free-free pattern and, per triangle, the slot of each local pair (usize::MAX if absent).
    pattern: Csr,
    slots: Vec<[[usize; 3]; 3]>,
    load: Vec<f64>,
}

impl FemProblem {
    /// Only the two studied configurations are accepted: flow cell without source, or
    /// homogeneous Dirichlet with the Gaussian source.
    pub fn new(fem_n_side: usize, field: &FieldMesh, bc: Bc, source: Source) -> Result<Self> {
        match (bc, source) {
            (Bc::FlowCell, Source::Zero) | (Bc::HomogeneousDirichlet, Source::GaussianGrid) => {}
            _ => return Err(Error::invalid(format!("unsupported boundary/source pair {bc:?}/{source:?}"))),
        }
        let mesh = build_tri_mesh(fem_n_side)?;
        let nt = mesh.triangles.len();
        let cell_of_tri = (0..nt).map(|t| field.locate(mesh.centroid(t))).collect::<Result<Vec<_>>>()?;
        let local = (0..nt).map(|t| local_stiffness(&mesh, t)).collect();

        let dirichlet: Vec<Option<f64>> = mesh
            .tags
            .iter()
            .map(|tag| match bc {
                Bc::FlowCell if tag.west => Some(1.0),
                Bc::FlowCell if tag.east => Some(0.0),
                Bc::FlowCell => None,
                Bc::HomogeneousDirichlet => tag.on_boundary().then_some(0.0),
            })
            .collect();
        let mut free_id = vec![usize::MAX; mesh.n_vertices()];
        let mut free_nodes = Vec::new();
        for (v, d) in dirichlet.iter().enumerate() {
            if d.is_none() {
                free_id[v] = free_nodes.len();
                free_nodes.push(v);
            }
        }

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); free_nodes.len()];
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if free_id[a] != usize::MAX && free_id[b] != usize::MAX {
                        rows[free_id[a]].push(free_id[b]);
                    }
                }
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = Csr::from_pattern(rows);
        let slots = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut s = [[usize::MAX; 3]; 3];
                for (a, &va) in tri.iter().enumerate() {
                    for (b, &vb) in tri.iter().enumerate() {
                        if free_id[va] != usize::MAX && free_id[vb] != usize::MAX {
                            s[a][b] = pattern.position(free_id[va], free_id[vb]).unwrap();
                        }
                    }
                }
                s
            })
            .collect();

        let load = match source {
            Source::Zero => vec![0.0; mesh.n_vertices()],
            Source::GaussianGrid => load_vector(&mesh, gaussian_source),
        };
        Ok(FemProblem {
            mesh,
            bc,
            source,
            solver: LinearSolver::Auto,
            cell_of_tri,
            field_n: field.n(),
            local,
            dirichlet,
            free_id,
            free_nodes,
            pattern,
            slots,
            load,
        })
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    /// `exp(θ)` per triangle.
    pub fn coefficients(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.field_n {
            return Err(Error::invalid(format!("field has length {}, expected {}", theta.len(), self.field_n)));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("field contains non-finite values"));
        }
        Ok(self.cell_of_tri.iter().map(|&c| theta[c].exp()).collect())
    }

    /// Nodal load vector `∫ f φ_i`.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Free-node system and right-hand side for the given triangle coefficients.
    pub fn system(&self, kappa: &[f64]) -> (Csr, Vec<f64>) {
        let mut a = self.pattern.clone();
        let mut rhs: Vec<f64> = self.free_nodes.iter().map(|&v| self.load[v]).collect();
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let k = kappa[t];
            let loc = &self.local[t];
            for a_ in 0..3 {
                let fa = self.free_id[tri[a_]];
                if fa == usize::MAX {
                    continue;
                }
                for b in 0..3 {
                    let v = k * loc[a_][b];
                    match self.dirichlet[tri[b]] {
                        None => a.vals[self.slots[t][a_][b]] += v,
                        Some(g) => rhs[fa] -= v * g,
                    }
                }
            }
        }
        (a, rhs)
    }

    /// Nodal solution for the field `theta`.
    pub fn solve(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let kappa = self.coefficients(theta)?;
        let (a, rhs) = self.system(&kappa);
        let direct = match self.solver {
            LinearSolver::Auto => self.n_free() <= DIRECT_LIMIT,
            LinearSolver::Direct => true,
            LinearSolver::Cg => false,
        };
        let x = if self.n_free() == 0 {
            Vec::new()
        } else if direct {
            band_cholesky_solve(&a, &rhs)?
        } else {
            cg_solve(&a, &rhs, CG_TOL, 20 * self.n_free() + 100)?
        };
        Ok(self
            .dirichlet
            .iter()
            .enumerate()
            .map(|(v, d)| d.unwrap_or_else(|| x[self.free_id[v]]))
            .collect())
    }

    /// `ψᵀ K(θ) p` with `ψ` the nodal indicator of the west edge. For the flow cell this is the
    /// magnitude of the boundary flux, positive when pressure drops from west to east.
    pub fn outflow_qoi(&self, theta: &[f64], p: &[f64]) -> Result<f64> {
        if p.len() != self.mesh.n_vertices() {
            return Err(Error::invalid("nodal vector has the wrong length"));
        }
        let kappa = self.coefficients(theta)?;
        let mut q = 0.0;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            for a in 0..3 {
                if self.mesh.tags[tri[a]].west {
                    let row: f64 = (0..3).map(|b| self.local[t][a][b] * p[tri[b]]).sum();
                    q += kappa[t] * row;
                }
            }
        }
        Ok(q)
    }
}

pub fn solve_pde(prob: &FemProblem, theta: &[f64]) -> Result<Vec<f64>> {
    prob.solve(theta)
}

pub fn outflow_qoi(prob: &FemProblem, theta: &[f64], p: &[f64]) -> Result<f64> {
    prob.outflow_qoi(theta, p)
}

fn local_stiffness(mesh: &TriMesh, t: usize) -> [[f64; 3]; 3] {
    let tri = mesh.triangles[t];
    let p = tri.map(|v| mesh.vertices[v]);
    let area = mesh.signed_area(t).abs();
    let mut bx = [0.0; 3];
    let mut by = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        bx[i] = p[j][1] - p[k][1];
        by[i] = p[k][0] - p[j][0];
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (bx[i] * bx[j] + by[i] * by[j]) / (4.0 * area);
        }
    }
    k
}

fn load_vector(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|v| mesh.vertices[v]);
        let area = mesh.signed_area(t).abs();
        for (lam, w) in QUAD {
            let x = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            let fx = w * area * f(x);
            for a in 0..3 {
                load[tri[a]] += fx * lam[a];
            }
        }
    }
    load
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Sum of nine products of univariate normal densities (variance 0.001) centred at
/// `(n/4, m/4)`, n, m = 1..3.
pub fn gaussian_source(x: [f64; 2]) -> f64 {
    let gx: f64 = (1..=3).map(|n| normal_pdf(x[0], 0.25 * n as f64, SOURCE_VAR)).sum();
    let gy: f64 = (1..=3).map(|m| normal_pdf(x[1], 0.25 * m as f64, SOURCE_VAR)).sum();
    gx * gy
}

/// Point values of the piecewise-linear interpolant of `p`.
pub fn observe(mesh: &TriMesh, p: &[f64], points: &[[f64; 2]]) -> Result<Vec<f64>> {
    if p.len() != mesh.n_vertices() {
        return Err(Error::invalid("nodal vector has the wrong length"));
    }
    points
        .iter()
        .map(|&x| {
            let t = mesh.locate(x)?;
            let lam = mesh.barycentric(t, x);
            let tri = mesh.triangles[t];
            Ok((0..3).map(|a| lam[a] * p[tri[a]]).sum())
        })
        .collect()
}

/// Interior lattice `(i/m, j/m)`, i, j = 1..m-1, x fastest.
pub fn observation_lattice(m: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for j in 1..m {
        for i in 1..m {
            pts.push([i as f64 / m as f64, j as f64 / m as f64]);
        }
    }
    pts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    /// Diagonal entry of the noise covariance.
    pub noise_var: f64,
}

impl Observation {
    pub fn new(points: Vec<[f64; 2]>, values: Vec<f64>, noise_var: f64) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::invalid("observation points and values differ in length"));
        }
        if !(noise_var > 0.0) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        if points.iter().any(|x| !(x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0)) {
            return Err(Error::invalid("observation points must be interior"));
        }
        Ok(Observation { points, values, noise_var })
    }
}

/// CSV with columns x, y, p.
pub fn write_nodal_csv(path: &Path, mesh: &TriMesh, p: &[f64]) -> Result<()> {
    crate::io::write_csv(path, &["x", "y", "p"], mesh.vertices.iter().zip(p).map(|(v, &pv)| vec![v[0], v[1], pv]))
}
