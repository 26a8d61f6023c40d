use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};

use crate::covariance::{CovMatrix, GridCovariance};
use crate::error::{Error, Result};
use crate::linalg::{mul, mul_tn};

const PANEL_ROWS: usize = 128;

fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `Wᵀ C_k W` for every offset table, streaming over row panels of the dense matrices so
/// that no N × N matrix is ever stored.
pub fn project_tables(w: &Mat<f64>, tables: &[GridCovariance]) -> Result<Vec<Mat<f64>>> {
    let n = w.nrows();
    let r = w.ncols();
    if tables.iter().any(|t| t.n() != n) {
        return Err(Error::invalid("component size does not match the basis"));
    }
    let mut out: Vec<Mat<f64>> = (0..tables.len()).map(|_| Mat::zeros(r, r)).collect();
    if tables.is_empty() {
        return Ok(out);
    }
    let proto = &tables[0];
    let mut offsets = vec![0u32; PANEL_ROWS * n];
    let mut y = Mat::zeros(PANEL_ROWS, r);
    for r0 in (0..n).step_by(PANEL_ROWS) {
        let nr = PANEL_ROWS.min(n - r0);
        for b in 0..n {
            for a in 0..nr {
                offsets[b * nr + a] = proto.offset(r0 + a, b) as u32;
            }
        }
        let wr = w.subrows(r0, nr);
        for (k, t) in tables.iter().enumerate() {
            let panel = Mat::from_fn(nr, n, |a, b| t.table[offsets[b * nr + a] as usize]);
            let mut yv = y.subrows_mut(0, nr);
            matmul(yv.as_mut(), Accum::Replace, panel.as_ref(), w.as_ref(), 1.0, Par::Seq);
            matmul(out[k].as_mut(), Accum::Add, wr.transpose(), yv.as_ref(), 1.0, Par::Seq);
        }
    }
    out.iter_mut().for_each(symmetrize);
    Ok(out)
}

pub fn project_grid(w: &Mat<f64>, g: &GridCovariance) -> Result<Mat<f64>> {
    Ok(project_tables(w, std::slice::from_ref(g))?.pop().unwrap())
}

/// `Wᵀ C_k W` for dense or matrix-free components.
pub fn project_components(w: &Mat<f64>, comps: &[CovMatrix]) -> Result<Vec<Mat<f64>>> {
    comps
        .iter()
        .map(|c| {
            if c.n() != w.nrows() {
                return Err(Error::invalid("component size does not match the basis"));
            }
            match c {
                CovMatrix::Dense(m) => {
                    let mut p = mul_tn(w.as_ref(), mul(m.as_ref(), w.as_ref()).as_ref());
                    symmetrize(&mut p);
                    Ok(p)
                }
                CovMatrix::MatrixFree(g) => project_grid(w, g),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{HyperParams, Kernel};
    use crate::linalg::frobenius;
    use crate::mesh::build_field_mesh;

    #[test]
    fn panels_match_dense_projection() {
        // 13² = 169 unknowns spans two panels
        let m = build_field_mesh(13).unwrap();
        let g = GridCovariance::from_kernel(&m, &Kernel::Exponential, HyperParams::new(0.3, 1.0));
        let w = Mat::from_fn(169, 7, |i, j| ((i * 7 + j * 13) as f64 * 0.1).sin());
        let a = project_grid(&w, &g).unwrap();
        let b = project_components(&w, &[CovMatrix::Dense(g.dense())]).unwrap().pop().unwrap();
        assert!(frobenius((&a - &b).as_ref()) < 1e-12 * frobenius(b.as_ref()));
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(a[(i, j)], a[(j, i)]);
            }
        }
    }

    #[test]
    fn single_vector() {
        let m = build_field_mesh(3).unwrap();
        let g = GridCovariance::from_kernel(&m, &Kernel::Exponential, HyperParams::new(0.5, 1.0));
        let psi = Mat::from_fn(9, 1, |i, _| if i == 4 { 3.0 } else { 0.0 });
        let p = project_grid(&psi, &g).unwrap();
        assert!((p[(0, 0)] - 9.0 * g.entry(4, 4)).abs() < 1e-15);
    }
}
