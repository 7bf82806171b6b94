//! MatrixMarket text I/O for dense real matrices.
//!
//! Reads `coordinate` and `array` layouts with `real`, `integer` or `pattern`
//! fields and `general`, `symmetric` or `skew-symmetric` symmetry. Writes
//! `array real general` or `coordinate real symmetric`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    read_matrix_market(File::open(path)?)
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, format!("bad header '{header}'")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" | "integer" => Field::Real,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter_map(|(i, l)| match l {
        Ok(l) => {
            let t = l.trim().to_string();
            (!t.is_empty() && !t.starts_with('%')).then_some(Ok((i + 1, t)))
        }
        Err(e) => Some(Err(e)),
    });
    let (size_line, size) = data.next().ok_or_else(|| parse_err(2, "missing size line"))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| parse_err(size_line, e.to_string())))
        .collect::<Result<_>>()?;
    let expected = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(parse_err(size_line, "wrong number of size fields"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric storage needs a square matrix"));
    }
    let mut m = DenseMatrix::zeros(rows, cols);
    let sign = if symmetry == Symmetry::Skew { -1.0 } else { 1.0 };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let (ln, l) = data.next().ok_or_else(|| parse_err(0, "fewer entries than declared"))??;
                let mut it = l.split_whitespace();
                let mut idx = || -> Result<usize> {
                    let t = it.next().ok_or_else(|| parse_err(ln, "missing index"))?;
                    let v: usize = t.parse().map_err(|_| parse_err(ln, format!("bad index '{t}'")))?;
                    Ok(v)
                };
                let (i, j) = (idx()?, idx()?);
                let v = match field {
                    Field::Pattern => 1.0,
                    Field::Real => {
                        let t = it.next().ok_or_else(|| parse_err(ln, "missing value"))?;
                        t.parse::<f64>().map_err(|_| parse_err(ln, format!("bad value '{t}'")))?
                    }
                };
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) out of range")));
                }
                m[(i - 1, j - 1)] = v;
                if symmetry != Symmetry::General && i != j {
                    m[(j - 1, i - 1)] = sign * v;
                }
            }
        }
        Layout::Array => {
            // column-major; symmetric storage lists the lower triangle only
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..rows {
                    let (ln, l) = data.next().ok_or_else(|| parse_err(0, "fewer entries than declared"))??;
                    let v: f64 = l
                        .split_whitespace()
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|_| parse_err(ln, format!("bad value '{l}'")))?;
                    m[(i, j)] = v;
                    if symmetry != Symmetry::General && i != j {
                        m[(j, i)] = sign * v;
                    }
                }
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("MatrixMarket entries".into()));
    }
    Ok(m)
}

/// Writes `array real general`, full column-major.
pub fn write_matrix_market_array<W: Write>(writer: W, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for v in m.iter() {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the lower triangle of a symmetric matrix as `coordinate real
/// symmetric`, skipping exact zeros.
pub fn write_matrix_market_symmetric<W: Write>(writer: W, m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidParameter("symmetric output needs a square matrix".into()));
    }
    let n = m.nrows();
    let mut entries = Vec::new();
    for j in 0..n {
        for i in j..n {
            if m[(i, j)] != 0.0 {
                entries.push((i + 1, j + 1, m[(i, j)]));
            }
        }
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{n} {n} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{i} {j} {v:e}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2.0\n2 1 -1\n3 3 5e0\n3 2 0.5\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], -1.0);
        assert_eq!(m[(2, 1)], 0.5);
        assert_eq!(m[(1, 2)], 0.5);
        assert_eq!(m[(2, 2)], 5.0);
    }

    #[test]
    fn array_general_and_skew() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        let text = "%%MatrixMarket matrix array real skew-symmetric\n2 2\n7\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m, DenseMatrix::from_row_slice(2, 2, &[0.0, -7.0, 7.0, 0.0]));
    }

    #[test]
    fn pattern_and_integer() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m[(0, 2)], 1.0);
        assert_eq!(m[(1, 0)], 1.0);
        let text = "%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 3\n";
        assert_eq!(read_matrix_market(text.as_bytes()).unwrap()[(0, 0)], 3.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_matrix_market("hello\n".as_bytes()).is_err());
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_matrix_market(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(text.as_bytes()).is_err());
    }

    #[test]
    fn round_trips() {
        let m = DenseMatrix::from_row_slice(2, 3, &[1.5, -2.0, 0.0, 1e-300, 4.0, 3.25]);
        let mut buf = Vec::new();
        write_matrix_market_array(&mut buf, &m).unwrap();
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), m);

        let s = DenseMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.0, 0.1, 3.0, -1.0, 0.0, -1.0, 1.0]);
        let mut buf = Vec::new();
        write_matrix_market_symmetric(&mut buf, &s).unwrap();
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), s);
    }
}
