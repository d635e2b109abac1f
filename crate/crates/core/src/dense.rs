use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries ({rows}x{cols})", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(Dense { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: format!("{cols} columns"),
                    got: format!("{} columns in row {r}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Dense {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Parses a feature TSV (`node x_0 .. x_{d-1}` per line, `#` comments).
/// Every node in `0..n` must appear exactly once.
pub fn load_features(text: &str, n: usize) -> Result<Dense> {
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let v: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "missing node id".into(),
            })?;
        let vals = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad feature value: {e}"),
            })?;
        if vals.is_empty() || width.is_some_and(|w| w != vals.len()) {
            return Err(Error::Parse {
                line: line_no,
                msg: "inconsistent number of feature columns".into(),
            });
        }
        width = Some(vals.len());
        if v >= n {
            return Err(Error::Validation(format!("line {line_no}: node {v} outside 0..{n}")));
        }
        if rows[v].replace(vals).is_some() {
            return Err(Error::Validation(format!("line {line_no}: node {v} listed twice")));
        }
    }
    let d = width.ok_or_else(|| Error::Validation("feature file is empty".into()))?;
    let mut out = Dense::zeros(n, d);
    for (v, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::Validation(format!("node {v} has no features")))?;
        out.row_mut(v).copy_from_slice(&row);
    }
    Ok(out)
}

impl std::ops::Index<(usize, usize)> for Dense {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Dense {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}
