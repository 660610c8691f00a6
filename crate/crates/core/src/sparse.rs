//! Symmetric sparse matrices in compressed-row form.
//!
//! Both triangles are stored so that [`CsrMatrix::matvec`] is a plain CSR
//! kernel. MatrixMarket input is restricted to `coordinate real symmetric`
//! (integer values are read as reals); the file lists one triangle and the
//! reader mirrors it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking structure and symmetry.
    pub fn new(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n] != values.len() {
            return Err(Error::InvalidStructure(
                "row_offsets must start at 0 and end at the number of stored values".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidStructure(
                "col_indices and values differ in length".into(),
            ));
        }
        for row in 0..n {
            let (start, end) = (row_offsets[row], row_offsets[row + 1]);
            if start > end {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decreases at row {row}"
                )));
            }
            let cols = &col_indices[start..end];
            if cols.iter().any(|&c| c >= n) {
                return Err(Error::InvalidStructure(format!(
                    "column index out of range in row {row}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "column indices not strictly increasing in row {row}"
                )));
            }
        }
        let matrix = CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        };
        for row in 0..n {
            for (col, value) in matrix.row(row) {
                if matrix.get(col, row) != Some(value) {
                    return Err(Error::InvalidStructure(format!(
                        "entry ({row}, {col}) has no equal mirror"
                    )));
                }
            }
        }
        Ok(matrix)
    }

    /// Builds the full symmetric matrix from one triangle given as 0-based
    /// `(row, col, value)` triplets. Each unordered position may appear once.
    pub fn from_triangle(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut expanded = Vec::with_capacity(2 * entries.len());
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            expanded.push((i, j, v));
            if i != j {
                expanded.push((j, i, v));
            }
        }
        expanded.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = expanded
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::InvalidStructure(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut row_offsets = vec![0usize; n + 1];
        for &(i, _, _) in &expanded {
            row_offsets[i + 1] += 1;
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let col_indices = expanded.iter().map(|e| e.1).collect();
        let values = expanded.iter().map(|e| e.2).collect();
        Ok(CsrMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        CsrMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Keeps the entries of a dense row-major symmetric matrix that are not zero.
    pub fn from_dense(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        let lower: Vec<_> = (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = entries[i * n + j];
                (v != 0.0).then_some((i, j, v))
            })
            .collect();
        let matrix = Self::from_triangle(n, &lower)?;
        let dense = matrix.to_dense();
        if dense != entries {
            return Err(Error::InvalidStructure("dense input is not symmetric".into()));
        }
        Ok(matrix)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored values (both triangles).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of one row in increasing column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        let cols = &self.col_indices[range.clone()];
        cols.binary_search(&j)
            .ok()
            .map(|pos| self.values[range.start + pos])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).unwrap_or(0.0)).collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                dense[i * self.n + j] = v;
            }
        }
        dense
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(v, &mut out)?;
        Ok(out)
    }

    /// `out = A v`, accumulating each row left to right.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(v.len())?;
        self.check_len(out.len())?;
        for (i, yi) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                sum += self.values[p] * v[self.col_indices[p]];
            }
            *yi = sum;
        }
        Ok(())
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        let av = self.matvec(v)?;
        Ok(dot(v, &av))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// Serializes the lower triangle as a `coordinate real symmetric` file.
    pub fn to_matrix_market(&self) -> String {
        let lower: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, lower.len());
        for (i, j, v) in lower {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub object: String,
    pub format: String,
    pub field: String,
    pub symmetry: String,
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
}

fn mm_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MatrixMarket(format!("line {line}: {msg}"))
}

fn parse_banner(line: &str) -> Result<[String; 4]> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("%%MatrixMarket") {
        return Err(mm_error(1, "missing %%MatrixMarket banner"));
    }
    let mut tags: [String; 4] = Default::default();
    for tag in tags.iter_mut() {
        *tag = tokens
            .next()
            .ok_or_else(|| mm_error(1, "banner needs object, format, field and symmetry"))?
            .to_ascii_lowercase();
    }
    let [object, format, field, symmetry] = &tags;
    if object != "matrix" {
        return Err(mm_error(1, format!("unsupported object '{object}'")));
    }
    if format != "coordinate" {
        return Err(mm_error(1, format!("unsupported format '{format}'")));
    }
    if field != "real" && field != "integer" {
        return Err(mm_error(1, format!("unsupported field '{field}', values are required")));
    }
    if symmetry != "symmetric" {
        return Err(mm_error(1, format!("symmetry must be 'symmetric', got '{symmetry}'")));
    }
    Ok(tags)
}

fn parse_real(token: &str) -> Option<f64> {
    token
        .parse()
        .ok()
        .or_else(|| token.replace(['D', 'd'], "e").parse().ok())
}

/// Reads the header and the triangle entries (0-based) of a MatrixMarket file.
pub fn parse_matrix_market_triplets(
    text: &str,
) -> Result<(MatrixMarketHeader, Vec<(usize, usize, f64)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty input".into()))?;
    let [object, format, field, symmetry] = parse_banner(banner)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| mm_error(size_line, "malformed size line")))
        .collect::<Result<_>>()?;
    let [rows, cols, nonzeros] = dims[..] else {
        return Err(mm_error(size_line, "size line needs rows, cols and nonzeros"));
    };
    if rows != cols {
        return Err(mm_error(size_line, format!("matrix is not square ({rows}x{cols})")));
    }

    let mut entries = Vec::with_capacity(nonzeros);
    for (line_no, line) in body {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(mm_error(line_no, "expected 'row col value'"));
        }
        let i: usize = tokens[0]
            .parse()
            .map_err(|_| mm_error(line_no, "malformed row index"))?;
        let j: usize = tokens[1]
            .parse()
            .map_err(|_| mm_error(line_no, "malformed column index"))?;
        let v = parse_real(tokens[2]).ok_or_else(|| mm_error(line_no, "malformed value"))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(mm_error(
                line_no,
                format!("index ({i}, {j}) out of range for {rows}x{cols}"),
            ));
        }
        // symmetric files hold one triangle; normalize to lower
        let (i, j) = if i >= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        entries.push((i, j, v));
    }
    if entries.len() != nonzeros {
        return Err(Error::MatrixMarket(format!(
            "declared {nonzeros} entries, found {}",
            entries.len()
        )));
    }
    let header = MatrixMarketHeader {
        object,
        format,
        field,
        symmetry,
        rows,
        cols,
        nonzeros,
    };
    Ok((header, entries))
}

pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let (header, entries) = parse_matrix_market_triplets(text)?;
    CsrMatrix::from_triangle(header.rows, &entries).map_err(|e| match e {
        Error::InvalidStructure(msg) => Error::MatrixMarket(msg),
        other => other,
    })
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MatrixMarket(format!("{}: {e}", path.display())))?;
    parse_matrix_market(&text)
}
