//! Dense reference computations. O(n³), for tests and validation runs only.

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};
use crate::tridiag::{bisect, SymTridiagonal};

/// Largest dimension the dense oracle accepts.
pub const ORACLE_LIMIT: usize = 5000;

/// Bisection tolerance for oracle spectra, relative to the Gershgorin width.
/// Bisection stops earlier once the bracket can no longer be split.
pub const ORACLE_EIG_TOL: f64 = 1e-15;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    entries: Vec<f64>,
}

impl DenseSym {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidStructure(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(DenseSym { n, entries })
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        if a.n() > ORACLE_LIMIT {
            return Err(Error::TooLarge {
                n: a.n(),
                limit: ORACLE_LIMIT,
            });
        }
        Ok(DenseSym {
            n: a.n(),
            entries: a.to_dense(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.entries.chunks(self.n.max(1)).map(|row| dot(row, v)).collect()
    }
}

/// Orthogonal reduction to tridiagonal form by Householder reflectors.
///
/// Off-diagonal signs are dropped (a diagonal ±1 similarity), so the result
/// has `γ ≥ 0`.
pub fn householder_tridiagonalize(a: &DenseSym) -> SymTridiagonal {
    let n = a.n;
    let mut m = a.entries.clone();
    let mut gamma = Vec::with_capacity(n.saturating_sub(1));
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let lo = k + 1;
        let norm = (lo..n).map(|i| m[i * n + k].powi(2)).sum::<f64>().sqrt();
        let x0 = m[lo * n + k];
        // reflect onto −sign(x0)‖x‖ e₁ so that v₀ = x0 + sign(x0)‖x‖ does not cancel
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        for i in lo..n {
            v[i] = m[i * n + k];
        }
        v[lo] -= alpha;
        let vnorm_sq: f64 = (lo..n).map(|i| v[i] * v[i]).sum();
        if vnorm_sq == 0.0 || norm == 0.0 {
            gamma.push(x0.abs());
            continue;
        }
        let scale = vnorm_sq.sqrt();
        for vi in &mut v[lo..n] {
            *vi /= scale;
        }
        // A ← H A H on the trailing block, H = I − 2vvᵀ
        for i in lo..n {
            p[i] = (lo..n).map(|j| m[i * n + j] * v[j]).sum();
        }
        let vp: f64 = (lo..n).map(|i| v[i] * p[i]).sum();
        for i in lo..n {
            p[i] -= vp * v[i];
        }
        for i in lo..n {
            for j in lo..=i {
                let upd = m[i * n + j] - 2.0 * (v[i] * p[j] + p[i] * v[j]);
                m[i * n + j] = upd;
                m[j * n + i] = upd;
            }
        }
        gamma.push(alpha.abs());
        for i in lo + 1..n {
            m[i * n + k] = 0.0;
            m[k * n + i] = 0.0;
        }
    }
    let omega = (0..n).map(|i| m[i * n + i]).collect();
    SymTridiagonal::new(omega, gamma).expect("n diagonal and n-1 off-diagonal entries")
}

/// Full spectrum, ascending.
pub fn dense_eigenvalues(a: &DenseSym) -> Vec<f64> {
    crate::tridiag::eigenvalues(&householder_tridiagonalize(a), ORACLE_EIG_TOL)
}

/// `(lower bound on λ_min, upper bound on λ_max)`, bisected to rounding level.
pub fn spectrum_bounds(a: &DenseSym) -> (f64, f64) {
    let t = householder_tridiagonalize(a);
    match t.dim() {
        0 => (f64::NAN, f64::NAN),
        k => (bisect(&t, 0, ORACLE_EIG_TOL).0, bisect(&t, k - 1, ORACLE_EIG_TOL).1),
    }
}

/// Lower Cholesky factor, row-major.
fn cholesky(a: &DenseSym, shift: f64) -> Result<Vec<f64>> {
    let n = a.n;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a.get(i, j) - if i == j { shift } else { 0.0 } - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotSpd { row: i, pivot: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        y[i] = (y[i] - dot(&l[i * n..i * n + i], &y[..i])) / l[i * n + i];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| l[j * n + i] * y[j]).sum();
        y[i] = (y[i] - s) / l[i * n + i];
    }
    y
}

/// `b − A x` with each row accumulated in doubled precision.
fn accurate_residual(a: &DenseSym, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..a.n)
        .map(|i| {
            let (mut hi, mut lo) = (b[i], 0.0);
            for (aij, xj) in a.entries[i * a.n..(i + 1) * a.n].iter().zip(x) {
                let p = -aij * xj;
                let pe = (-aij).mul_add(*xj, -p);
                let s = hi + p;
                let bb = s - hi;
                lo += (hi - (s - bb)) + (p - bb) + pe;
                hi = s;
            }
            hi + lo
        })
        .collect()
}

/// Cholesky solve followed by two steps of refinement against an
/// accurately accumulated residual.
pub fn exact_solve(a: &DenseSym, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            got: b.len(),
        });
    }
    let l = cholesky(a, 0.0)?;
    let mut x = cholesky_solve(&l, a.n, b);
    for _ in 0..2 {
        let r = accurate_residual(a, b, &x);
        let dx = cholesky_solve(&l, a.n, &r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Ok(x)
}

/// Unit eigenvector of the smallest eigenvalue by shifted inverse
/// iteration, sign fixed so that its largest component is positive.
pub fn smallest_eigenvector(a: &DenseSym) -> Result<(f64, Vec<f64>)> {
    let n = a.n;
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let (lmin, lmax) = spectrum_bounds(a);
    let gap = (1e-6 * lmin.abs()).max(1e3 * n as f64 * f64::EPSILON * lmax.abs());
    let l = cholesky(a, lmin - gap)?;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618).sin()).collect();
    for _ in 0..6 {
        v = cholesky_solve(&l, n, &v);
        let s = norm2(&v);
        v.iter_mut().for_each(|x| *x /= s);
    }
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let av = a.matvec(&v);
    Ok((dot(&v, &av), v))
}

/// True errors of an iterate against a reference solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueErrors {
    pub anorm: f64,
    pub l2: f64,
    pub rel_anorm: f64,
    pub rel_l2: f64,
}

pub fn true_errors(a: &CsrMatrix, x_true: &[f64], x_k: &[f64]) -> Result<TrueErrors> {
    Truth::new(a, x_true.to_vec())?.errors(x_k)
}

/// Reference solution with its norms cached, for repeated error queries.
#[derive(Debug, Clone)]
pub struct Truth<'a> {
    a: &'a CsrMatrix,
    x: Vec<f64>,
    x_anorm: f64,
    x_norm: f64,
}

impl<'a> Truth<'a> {
    pub fn new(a: &'a CsrMatrix, x: Vec<f64>) -> Result<Self> {
        let x_anorm = a.quadratic_form(&x)?.sqrt();
        let x_norm = norm2(&x);
        Ok(Truth { a, x, x_anorm, x_norm })
    }

    pub fn solution(&self) -> &[f64] {
        &self.x
    }

    pub fn anorm(&self) -> f64 {
        self.x_anorm
    }

    pub fn errors(&self, x_k: &[f64]) -> Result<TrueErrors> {
        if x_k.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: x_k.len(),
            });
        }
        let e: Vec<f64> = self.x.iter().zip(x_k).map(|(x, y)| x - y).collect();
        let anorm = self.a.quadratic_form(&e)?.max(0.0).sqrt();
        let l2 = norm2(&e);
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        Ok(TrueErrors {
            anorm,
            l2,
            rel_anorm: ratio(anorm, self.x_anorm),
            rel_l2: ratio(l2, self.x_norm),
        })
    }
}
