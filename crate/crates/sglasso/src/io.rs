use crate::error::{Error, Result};
use crate::mat::{Matrix, SymMatrix};

/// 17 significant digits: enough that every f64 parses back bit-identical.
fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn parse_cell(s: &str, row: usize, col: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        location: format!("row {}, column {}", row + 1, col + 1),
        message: format!("expected a number, found {s:?}"),
    })
}

/// Row-major, header-free CSV.
pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| fmt(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            row.push(parse_cell(cell, i, j)?);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    location: format!("row {}", i + 1),
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            location: "row 1".into(),
            message: "no data rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

/// Nested-array JSON with the same 17-digit convention.
pub fn matrix_to_json(m: &Matrix) -> String {
    let mut out = String::from("[");
    for i in 0..m.rows() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt(m[(i, j)]));
        }
        out.push(']');
    }
    out.push(']');
    out
}

pub fn matrix_from_json(text: &str) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: "json".into(),
        message: e.to_string(),
    })?;
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Parse {
            location: "json".into(),
            message: "empty matrix".into(),
        });
    }
    let w = rows[0].len();
    if rows.iter().any(|r| r.len() != w) {
        return Err(Error::Parse {
            location: "json".into(),
            message: "ragged rows".into(),
        });
    }
    Matrix::from_rows(&rows)
}

pub fn sym_to_csv(m: &SymMatrix) -> String {
    matrix_to_csv(&m.to_matrix())
}

pub fn sym_from_csv(text: &str) -> Result<SymMatrix> {
    let m = matrix_from_csv(text)?;
    SymMatrix::from_matrix(&m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut gen = RngStream::new(60, 0).generator();
        let m = Matrix::from_fn(4, 3, |_, _| {
            // Exercise exponents across the double range.
            let e: i32 = gen.gen_range(-300..300);
            let mant: f64 = gen.gen_range(-1.0..1.0);
            mant * 10f64.powi(e)
        });
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut gen = RngStream::new(60, 1).generator();
        let m = Matrix::from_fn(3, 5, |_, _| gen.gen_range(-1e6..1e6));
        let back = matrix_from_json(&matrix_to_json(&m)).unwrap();
        assert_eq!(m.as_slice(), back.as_slice());
    }

    #[test]
    fn special_values_survive() {
        let m = Matrix::from_rows(&[vec![0.0, -0.0], vec![f64::MIN_POSITIVE, f64::MAX]]).unwrap();
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn parse_error_names_the_cell() {
        let err = matrix_from_csv("1.0,2.0\n3.0,oops\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("row 2"), "{text}");
        assert!(text.contains("column 2"), "{text}");
    }

    #[test]
    fn ragged_input_rejected() {
        assert!(matrix_from_csv("1.0,2.0\n3.0\n").is_err());
        assert!(matrix_from_json("[[1.0,2.0],[3.0]]").is_err());
        assert!(matrix_from_csv("").is_err());
    }

    #[test]
    fn sym_round_trip() {
        let s = SymMatrix::from_fn(3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let back = sym_from_csv(&sym_to_csv(&s)).unwrap();
        assert_eq!(s.as_slice(), back.as_slice());
        // A plainly asymmetric matrix is refused.
        assert!(sym_from_csv("1.0,2.0\n5.0,1.0\n").is_err());
    }
}
