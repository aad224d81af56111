//! Matrix Market coordinate export and import (real symmetric, lower triangle).

use std::io::{BufRead, Write};

use super::operator::SparseOperator;
use crate::error::{Error, Result};

pub fn write_mtx<W: Write>(op: &SparseOperator, mut w: W) -> Result<()> {
    if !op.is_symmetric() {
        return Err(Error::Solver("refusing to export a non-symmetric operator as symmetric".into()));
    }
    let lower: Vec<_> = op.triples.iter().filter(|t| t.0 >= t.1).collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", op.dim, op.dim, lower.len())?;
    for &&(i, j, v) in &lower {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_mtx<R: BufRead>(r: R) -> Result<SparseOperator> {
    let mut lines = r.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
    let (_, header) = lines.next().ok_or(bad(0, "empty file"))?;
    let header = header?;
    if !header.to_ascii_lowercase().starts_with("%%matrixmarket matrix coordinate real symmetric") {
        return Err(bad(0, "unsupported Matrix Market header"));
    }
    let mut dim = None;
    let mut triples = Vec::new();
    for (n, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if dim.is_none() {
            let [r, c, _] = f.as_slice() else { return Err(bad(n, "bad size line")) };
            let r: usize = r.parse().map_err(|_| bad(n, "bad row count"))?;
            if c.parse::<usize>().ok() != Some(r) {
                return Err(bad(n, "matrix is not square"));
            }
            dim = Some(r);
            continue;
        }
        let [i, j, v] = f.as_slice() else { return Err(bad(n, "bad entry line")) };
        let i: u64 = i.parse().map_err(|_| bad(n, "bad row index"))?;
        let j: u64 = j.parse().map_err(|_| bad(n, "bad column index"))?;
        let v: f64 = v.parse().map_err(|_| bad(n, "bad value"))?;
        if i == 0 || j == 0 {
            return Err(bad(n, "indices are 1-based"));
        }
        triples.push((i - 1, j - 1, v));
        if i != j {
            triples.push((j - 1, i - 1, v));
        }
    }
    Ok(SparseOperator::from_triples(dim.ok_or(bad(0, "missing size line"))?, triples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let h = SparseOperator::from_triples(3, vec![(0, 0, 0.5), (0, 2, -0.5), (2, 0, -0.5), (1, 1, 1.0)]);
        let mut buf = Vec::new();
        write_mtx(&h, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n"));
        assert!(text.contains("3 1 -5e-1"));
        assert_eq!(read_mtx(buf.as_slice()).unwrap(), h);
    }
}
