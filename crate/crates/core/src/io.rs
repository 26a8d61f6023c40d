//! Binary matrix files and CSV helpers.
//!
//! Matrix format: u32 rows, u32 cols (little endian), then row-major little-endian f64.

use faer::Mat;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_matrix(path: &Path, m: &Mat<f64>) -> Result<()> {
    let (r, c) = (m.nrows(), m.ncols());
    if r > u32::MAX as usize || c > u32::MAX as usize {
        return Err(Error::invalid("matrix too large for the binary format"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(r as u32).to_le_bytes())?;
    w.write_all(&(c as u32).to_le_bytes())?;
    for i in 0..r {
        for j in 0..c {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Mat<f64>> {
    let mut rd = BufReader::new(File::open(path)?);
    let mut b4 = [0u8; 4];
    rd.read_exact(&mut b4)?;
    let r = u32::from_le_bytes(b4) as usize;
    rd.read_exact(&mut b4)?;
    let c = u32::from_le_bytes(b4) as usize;
    let mut buf = vec![0u8; r * c * 8];
    rd.read_exact(&mut buf)?;
    let mut extra = [0u8; 1];
    if rd.read(&mut extra)? != 0 {
        return Err(Error::invalid(format!("{}: trailing bytes after {r}x{c} matrix", path.display())));
    }
    Ok(Mat::from_fn(r, c, |i, j| {
        let o = (i * c + j) * 8;
        f64::from_le_bytes(buf[o..o + 8].try_into().unwrap())
    }))
}

/// Writes `(index, value)` rows with 1-based indices.
pub fn write_eigenvalues_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic CSV writer from a header and rows of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.17e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = Mat::from_fn(3, 2, |i, j| i as f64 * 10.0 + j as f64 + 0.125);
        write_matrix(&p, &m).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 8 + 6 * 8);
        assert_eq!(&bytes[..8], &[3, 0, 0, 0, 2, 0, 0, 0]);
        // row-major: second value is m[0,1]
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.125);
        assert_eq!(read_matrix(&p).unwrap(), m);
    }

    #[test]
    fn eigenvalue_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_eigenvalues_csv(&p, &[2.0, 0.5]).unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        assert!(s.starts_with("index,value\n1,2.0"));
    }
}
