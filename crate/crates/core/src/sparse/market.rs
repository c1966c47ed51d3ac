//! Matrix Market coordinate format (real, general, 1-based indices).

use super::CsrMatrix;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

pub fn write_matrix<W: Write>(a: &CsrMatrix, mut w: W) -> Result<()> {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for r in 0..a.nrows() {
        let (cs, vs) = a.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v);
        }
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))??;
    let h = header.to_ascii_lowercase();
    if !h.starts_with("%%matrixmarket matrix coordinate") {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    if !(h.contains("real") || h.contains("integer")) || !h.contains("general") {
        return Err(Error::Parse(format!("only real general matrices are supported: {header}")));
    }
    let mut size: Option<(usize, usize, usize)> = None;
    let mut t = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(Error::Parse(format!("bad size line: {line}")));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
                let sz = (p(f[0])?, p(f[1])?, p(f[2])?);
                t.reserve(sz.2);
                size = Some(sz);
            }
            Some((m, n, _)) => {
                if f.len() != 3 {
                    return Err(Error::Parse(format!("bad entry line: {line}")));
                }
                let i: usize = f[0].parse().map_err(|_| Error::Parse(format!("bad row in: {line}")))?;
                let j: usize = f[1].parse().map_err(|_| Error::Parse(format!("bad column in: {line}")))?;
                let v: f64 = f[2].parse().map_err(|_| Error::Parse(format!("bad value in: {line}")))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse(format!("index out of range: {line}")));
                }
                t.push((i - 1, j - 1, v));
            }
        }
    }
    let (m, n, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if t.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", t.len())));
    }
    CsrMatrix::from_triplets(m, n, &t)
}

/// Writes a dense vector as a Matrix Market array (one column).
pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:.17e}");
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_entries() {
        let a = CsrMatrix::from_triplets(3, 2, &[(0, 1, 1.5), (2, 0, -1e-300), (1, 1, 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&a, &mut buf).unwrap();
        let b = read_matrix(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_symmetric_storage() {
        let s = "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 2.0\n";
        assert!(read_matrix(s.as_bytes()).is_err());
    }
}
