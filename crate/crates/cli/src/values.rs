//! Parsers for command-line vectors and coefficient matrices.

use std::fmt;

use noncollide::model::{tridiagonal_matrix, uniform_matrix, Matrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueError(pub String);

impl fmt::Display for ValueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValueError {}

/// Comma-separated finite reals, e.g. `"0, 3.5, -1e-3"`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, ValueError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ValueError("expected at least one number".into()));
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let v: f64 = item
                .parse()
                .map_err(|_| ValueError(format!("not a number: {item:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ValueError(format!("not finite: {item:?}")))
            }
        })
        .collect()
}

/// Interaction coefficients in one of three forms.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    /// `uniform: c`; the same value for every pair.
    Uniform(f64),
    /// `tridiagonal: c` or `tridiagonal: c_1, …, c_{d−1}`; neighbours only.
    Tridiagonal(Vec<f64>),
    /// `full: r_1; r_2; …` with comma-separated rows.
    Full(Vec<Vec<f64>>),
}

pub fn parse_coefficients(text: &str) -> Result<Coefficients, ValueError> {
    let (kind, body) = text
        .split_once(':')
        .ok_or_else(|| ValueError("expected \"uniform: c\", \"tridiagonal: c, ...\" or \"full: row; row; ...\"".into()))?;
    match kind.trim() {
        "uniform" => match parse_vector(body)?[..] {
            [c] => Ok(Coefficients::Uniform(c)),
            _ => Err(ValueError("uniform takes exactly one value".into())),
        },
        "tridiagonal" => Ok(Coefficients::Tridiagonal(parse_vector(body)?)),
        "full" => {
            let rows = body.split(';').map(parse_vector).collect::<Result<Vec<_>, _>>()?;
            let d = rows.len();
            if rows.iter().any(|r| r.len() != d) {
                return Err(ValueError(format!("full matrix must be square with {d} columns per row")));
            }
            Ok(Coefficients::Full(rows))
        }
        other => Err(ValueError(format!("unknown coefficient form {other:?}"))),
    }
}

impl Coefficients {
    /// The `d × d` matrix. Sign, symmetry and positivity are checked later by
    /// the solver.
    pub fn to_matrix(&self, d: usize) -> Result<Matrix, ValueError> {
        match self {
            Coefficients::Uniform(c) => Ok(uniform_matrix(d, *c)),
            Coefficients::Tridiagonal(edges) if edges.len() == 1 => Ok(tridiagonal_matrix(d, edges[0])),
            Coefficients::Tridiagonal(edges) => {
                if edges.len() + 1 != d {
                    return Err(ValueError(format!(
                        "tridiagonal needs 1 or {} values for d = {d}, got {}",
                        d.saturating_sub(1),
                        edges.len()
                    )));
                }
                let mut m = Matrix::zeros(d, d);
                for (i, &e) in edges.iter().enumerate() {
                    m[(i, i + 1)] = e;
                    m[(i + 1, i)] = e;
                }
                Ok(m)
            }
            Coefficients::Full(rows) => {
                if rows.len() != d {
                    return Err(ValueError(format!("full matrix is {0}x{0}, expected {d}x{d}", rows.len())));
                }
                Ok(Matrix::from_fn(d, d, |i, j| rows[i][j]))
            }
        }
    }
}
