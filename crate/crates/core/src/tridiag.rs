//! Dense symmetric tridiagonal kernels.
//!
//! Everything here is O(k) per call for a k×k matrix: Sturm counts, LDLᵀ
//! solves, entries of the inverse, and the one-row extensions that place
//! prescribed quadrature nodes in the spectrum. Extremal eigenvalues come
//! from bisection on the Sturm count, O(k log(1/tol)).

use crate::error::{Error, Result};

/// Bisection stops after this many halvings even if `tol` is below the
/// floating-point resolution of the bracket.
const MAX_BISECTION_STEPS: usize = 256;

/// Default bisection tolerance, relative to the Gershgorin width.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Symmetric tridiagonal matrix: diagonal `omega`, off-diagonal `gamma`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymTridiagonal {
    omega: Vec<f64>,
    gamma: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(omega: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if omega.len() != gamma.len() + 1 && !(omega.is_empty() && gamma.is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal needs {} off-diagonal entries, got {}",
                omega.len().saturating_sub(1),
                gamma.len()
            )));
        }
        Ok(SymTridiagonal { omega, gamma })
    }

    pub fn identity(k: usize) -> Self {
        SymTridiagonal {
            omega: vec![1.0; k],
            gamma: vec![0.0; k.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Appends a row: `coupling` links the current last row to the new one.
    /// The coupling is ignored for the first row.
    pub fn push(&mut self, coupling: f64, diagonal: f64) {
        if !self.omega.is_empty() {
            self.gamma.push(coupling);
        }
        self.omega.push(diagonal);
    }

    /// The leading `j×j` block.
    pub fn leading(&self, j: usize) -> SymTridiagonal {
        let j = j.min(self.dim());
        SymTridiagonal {
            omega: self.omega[..j].to_vec(),
            gamma: self.gamma[..j.saturating_sub(1)].to_vec(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let k = self.dim();
        (0..k)
            .map(|i| {
                let mut s = self.omega[i] * v[i];
                if i > 0 {
                    s += self.gamma[i - 1] * v[i - 1];
                }
                if i + 1 < k {
                    s += self.gamma[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Gershgorin interval `[lo, hi]` containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let k = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..k {
            let mut radius = 0.0;
            if i > 0 {
                radius += self.gamma[i - 1].abs();
            }
            if i + 1 < k {
                radius += self.gamma[i].abs();
            }
            lo = lo.min(self.omega[i] - radius);
            hi = hi.max(self.omega[i] + radius);
        }
        (lo, hi)
    }

    /// Infinity norm (largest absolute row sum).
    pub fn norm(&self) -> f64 {
        let k = self.dim();
        (0..k)
            .map(|i| {
                let mut s = self.omega[i].abs();
                if i > 0 {
                    s += self.gamma[i - 1].abs();
                }
                if i + 1 < k {
                    s += self.gamma[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    fn pivot_floor(&self) -> f64 {
        (f64::EPSILON * self.norm()).max(f64::MIN_POSITIVE)
    }

    /// Dense row-major copy, for tests and the oracle.
    pub fn to_dense(&self) -> Vec<f64> {
        let k = self.dim();
        let mut d = vec![0.0; k * k];
        for i in 0..k {
            d[i * k + i] = self.omega[i];
            if i + 1 < k {
                d[i * k + i + 1] = self.gamma[i];
                d[(i + 1) * k + i] = self.gamma[i];
            }
        }
        d
    }
}

/// `J − σI = L D Lᵀ` with `L` unit lower bidiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagFactor {
    pub pivots: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub shift: f64,
}

impl TridiagFactor {
    /// Fails on an exactly zero (or non-finite) pivot.
    pub fn new(j: &SymTridiagonal, shift: f64) -> Result<Self> {
        let k = j.dim();
        let mut pivots = Vec::with_capacity(k);
        let mut multipliers = Vec::with_capacity(k.saturating_sub(1));
        for i in 0..k {
            let mut d = j.omega[i] - shift;
            if i > 0 {
                let g = j.gamma[i - 1];
                let l = g / pivots[i - 1];
                multipliers.push(l);
                d -= l * g;
            }
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular(i));
            }
            pivots.push(d);
        }
        Ok(TridiagFactor {
            pivots,
            multipliers,
            shift,
        })
    }

    /// Number of eigenvalues of `J` below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.pivots.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let k = self.pivots.len();
        if rhs.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        for i in 1..k {
            x[i] -= self.multipliers[i - 1] * x[i - 1];
        }
        for (xi, d) in x.iter_mut().zip(&self.pivots) {
            *xi /= d;
        }
        for i in (0..k.saturating_sub(1)).rev() {
            x[i] -= self.multipliers[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Number of eigenvalues of `J` strictly below `sigma`.
///
/// A pivot that vanishes is replaced by `ε‖J‖`, so an eigenvalue sitting
/// exactly at `sigma` is not counted.
pub fn sturm_count(j: &SymTridiagonal, sigma: f64) -> usize {
    let floor = j.pivot_floor();
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..j.dim() {
        d = if i == 0 {
            j.omega[0] - sigma
        } else {
            let g = j.gamma[i - 1];
            j.omega[i] - sigma - g * g / d
        };
        if d.abs() < floor {
            d = if d < 0.0 { -floor } else { floor };
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bracket for bisection: Gershgorin interval widened so that every
/// eigenvalue lies strictly inside.
fn search_interval(j: &SymTridiagonal) -> (f64, f64) {
    let (lo, hi) = j.gershgorin();
    let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + j.pivot_floor();
    (lo - pad, hi + pad)
}

/// Bisection for the `index`-th smallest eigenvalue (0-based). Returns the
/// final bracket `(lo, hi)` with `lo ≤ λ ≤ hi`.
pub fn bisect(j: &SymTridiagonal, index: usize, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = search_interval(j);
    let abs_tol = tol * (hi - lo);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(j, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Smallest and largest eigenvalues of `J` by Sturm bisection.
///
/// `tol` is relative to the Gershgorin width. The smallest eigenvalue is
/// reported at the lower end of its final bracket and the largest at the
/// upper end, so `f ≤ λ_min(J)` and `g ≥ λ_max(J)`.
pub fn extremal_eigenvalues(j: &SymTridiagonal, tol: f64) -> (f64, f64) {
    match j.dim() {
        0 => (f64::NAN, f64::NAN),
        1 => (j.omega[0], j.omega[0]),
        k => {
            let (lo, hi) = j.gershgorin();
            if lo == hi {
                return (lo, hi);
            }
            (bisect(j, 0, tol).0, bisect(j, k - 1, tol).1)
        }
    }
}

/// All eigenvalues in ascending order, each the midpoint of its bracket.
pub fn eigenvalues(j: &SymTridiagonal, tol: f64) -> Vec<f64> {
    (0..j.dim())
        .map(|i| {
            let (lo, hi) = bisect(j, i, tol);
            0.5 * (lo + hi)
        })
        .collect()
}

/// `J⁻¹ rhs` through `LDLᵀ`.
pub fn ldl_solve(j: &SymTridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    TridiagFactor::new(j, 0.0)?.solve(rhs)
}

/// Entries of `J⁻¹` and `J⁻²` that the error formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseEntries {
    /// `e₁ᵀ J⁻¹ e₁`
    pub t1: f64,
    /// `e_kᵀ J⁻² e₁`
    pub s: f64,
    /// `e_kᵀ J⁻¹ e₁`
    pub u: f64,
    /// `e₁ᵀ J⁻² e₁`
    pub t2: f64,
}

pub fn inverse_entries(j: &SymTridiagonal) -> Result<InverseEntries> {
    let k = j.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("empty tridiagonal".into()));
    }
    let factor = TridiagFactor::new(j, 0.0)?;
    let mut e1 = vec![0.0; k];
    e1[0] = 1.0;
    let y = factor.solve(&e1)?;
    let z = factor.solve(&y)?;
    Ok(InverseEntries {
        t1: y[0],
        s: z[k - 1],
        u: y[k - 1],
        t2: y.iter().map(|v| v * v).sum(),
    })
}

/// Factors `J − zI`, nudging `z` by `ε‖J‖` once if it hits an eigenvalue.
fn shifted_factor(j: &SymTridiagonal, z: f64) -> Result<TridiagFactor> {
    TridiagFactor::new(j, z).or_else(|_| TridiagFactor::new(j, z - j.pivot_floor()))
}

/// Last pivots of `J` and `J − zI` together with their difference, the
/// latter by its own recurrence so that it keeps full relative accuracy
/// when `z` is small next to `‖J‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotGap {
    /// Shift actually used (moved by the pivot guard if needed).
    pub shift: f64,
    pub pivot: f64,
    pub shifted_pivot: f64,
    pub gap: f64,
}

pub fn shifted_pivot_gap(j: &SymTridiagonal, z: f64) -> Result<PivotGap> {
    let attempt = |z: f64| -> Result<PivotGap> {
        let k = j.dim();
        if k == 0 {
            return Err(Error::InvalidArgument("empty tridiagonal".into()));
        }
        let mut d = j.omega[0];
        let mut ds = j.omega[0] - z;
        let mut gap = z;
        for i in 1..k {
            let g2 = j.gamma[i - 1] * j.gamma[i - 1];
            gap = z + g2 * gap / (d * ds);
            d = j.omega[i] - g2 / d;
            ds = j.omega[i] - z - g2 / ds;
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular(i));
            }
            if ds == 0.0 || !ds.is_finite() {
                return Err(Error::Singular(i));
            }
        }
        if d == 0.0 || ds == 0.0 {
            return Err(Error::Singular(0));
        }
        Ok(PivotGap {
            shift: z,
            pivot: d,
            shifted_pivot: ds,
            gap,
        })
    };
    attempt(z).or_else(|_| attempt(z - j.pivot_floor()))
}

fn last_unit(k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k];
    e[k - 1] = 1.0;
    e
}

/// Gauss-Radau extension: appends a row coupled by `gamma_k` whose diagonal
/// makes `z` an exact eigenvalue of the `(k+1)×(k+1)` result.
pub fn radau_extend(j: &SymTridiagonal, gamma_k: f64, z: f64) -> Result<SymTridiagonal> {
    let k = j.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("empty tridiagonal".into()));
    }
    let delta = shifted_factor(j, z)?.solve(&last_unit(k))?;
    let omega_hat = z + gamma_k * gamma_k * delta[k - 1];
    let mut out = j.clone();
    out.push(gamma_k, omega_hat);
    Ok(out)
}

/// Gauss-Lobatto extension: appends a row whose diagonal and coupling make
/// both `a` and `b` exact eigenvalues. Requires `a < λ_min(J)` and
/// `λ_max(J) < b`.
pub fn lobatto_extend(j: &SymTridiagonal, a: f64, b: f64) -> Result<SymTridiagonal> {
    let k = j.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("empty tridiagonal".into()));
    }
    if !(a < b) || sturm_count(j, a) != 0 || sturm_count(j, b) != k {
        return Err(Error::Bracketing { a, b });
    }
    let e_k = last_unit(k);
    let delta = shifted_factor(j, a)?.solve(&e_k)?[k - 1];
    let mu = shifted_factor(j, b)?.solve(&e_k)?[k - 1];
    let gamma_sq = (b - a) / (delta - mu);
    if !(gamma_sq > 0.0) || !gamma_sq.is_finite() {
        return Err(Error::Bracketing { a, b });
    }
    let omega_hat = a + delta * gamma_sq;
    let mut out = j.clone();
    out.push(gamma_sq.sqrt(), omega_hat);
    Ok(out)
}
