//! Instrumented conjugate gradients.
//!
//! Besides the usual update the state keeps every step length `α_i`, every
//! ratio `β_i = ‖r_i‖²/‖r_{i−1}‖²`, and the squared residual norms. These
//! are exactly the numbers needed to assemble the Jacobi matrix of the
//! underlying Lanczos process:
//!
//! ```text
//! ω_k = 1/α_{k−1} + β_{k−1}/α_{k−2},   γ_k = √β_k / α_{k−1},   β_0 = 0, α_{−1} = 1
//! ```

use crate::error::{Error, Result};
use crate::sparse::{dot, CsrMatrix};
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone)]
pub struct CgState {
    /// Number of completed steps.
    pub k: usize,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub d: Vec<f64>,
    /// `α_0 … α_{k−1}`
    pub alpha_hist: Vec<f64>,
    /// `β_1 … β_k`
    pub beta_hist: Vec<f64>,
    /// `‖r_0‖² … ‖r_k‖²`
    pub r_norm_sq_hist: Vec<f64>,
    pub r0_norm_sq: f64,
    /// `‖x_k‖²_A`, updated incrementally when `x_0 = 0`.
    pub xk_anorm_sq: f64,
    pub b_norm: f64,
    pub rel_residue: f64,
    incremental_anorm: bool,
    ad: Vec<f64>,
}

/// Starts CG from `x0`. A zero initial residual leaves the state converged.
pub fn cg_init(a: &CsrMatrix, b: &[f64], x0: &[f64]) -> Result<CgState> {
    let n = a.n();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Err(Error::ZeroRhs);
    }
    let ax = a.matvec(x0)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let r0_norm_sq = dot(&r, &r);
    let incremental_anorm = x0.iter().all(|&v| v == 0.0);
    Ok(CgState {
        k: 0,
        x: x0.to_vec(),
        d: r.clone(),
        alpha_hist: Vec::new(),
        beta_hist: Vec::new(),
        r_norm_sq_hist: vec![r0_norm_sq],
        r0_norm_sq,
        xk_anorm_sq: dot(x0, &ax),
        b_norm,
        rel_residue: r0_norm_sq.sqrt() / b_norm,
        incremental_anorm,
        ad: vec![0.0; n],
        r,
    })
}

impl CgState {
    /// The residual is exactly zero.
    pub fn converged(&self) -> bool {
        self.r_norm_sq() == 0.0
    }

    pub fn r_norm_sq(&self) -> f64 {
        *self.r_norm_sq_hist.last().expect("history starts with r_0")
    }

    /// Whether `xk_anorm_sq` is maintained by the `Σ α_i‖r_i‖²` identity.
    pub fn incremental_anorm(&self) -> bool {
        self.incremental_anorm
    }

    /// One CG update. Fails if `dᵀAd ≤ 0`, i.e. `A` is not SPD.
    pub fn step(&mut self, a: &CsrMatrix) -> Result<()> {
        if self.converged() {
            return Err(Error::AlreadyConverged(self.k));
        }
        a.matvec_into(&self.d, &mut self.ad)?;
        let curvature = dot(&self.d, &self.ad);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite {
                iteration: self.k,
                curvature,
            });
        }
        let rr = self.r_norm_sq();
        let alpha = rr / curvature;
        for (xi, di) in self.x.iter_mut().zip(&self.d) {
            *xi += alpha * di;
        }
        for (ri, adi) in self.r.iter_mut().zip(&self.ad) {
            *ri -= alpha * adi;
        }
        let rr_new = dot(&self.r, &self.r);
        let beta = rr_new / rr;
        for (di, ri) in self.d.iter_mut().zip(&self.r) {
            *di = ri + beta * *di;
        }

        self.alpha_hist.push(alpha);
        self.beta_hist.push(beta);
        self.r_norm_sq_hist.push(rr_new);
        self.k += 1;
        self.rel_residue = rr_new.sqrt() / self.b_norm;
        if self.incremental_anorm {
            self.xk_anorm_sq += alpha * rr;
        } else {
            self.xk_anorm_sq = a.quadratic_form(&self.x)?;
        }
        Ok(())
    }

    /// `‖b − A x_k‖ / ‖r_k‖ − 1` measured against the recursively updated residual.
    pub fn residual_drift(&self, a: &CsrMatrix, b: &[f64]) -> Result<f64> {
        let ax = a.matvec(&self.x)?;
        let gap: f64 = b
            .iter()
            .zip(&ax)
            .zip(&self.r)
            .map(|((bi, axi), ri)| (bi - axi - ri).powi(2))
            .sum();
        Ok(gap.sqrt())
    }
}

/// Appends the next row of the Jacobi matrix from the CG histories.
///
/// For the new row `m` (1-based) this needs `α_{m−1}`; the coupling to the
/// previous row, `γ_{m−1}`, also needs `β_{m−1}` and `α_{m−2}`.
pub fn recurrence_append(
    j: &mut SymTridiagonal,
    alpha_hist: &[f64],
    beta_hist: &[f64],
) -> Result<()> {
    let m = j.dim() + 1;
    if alpha_hist.len() < m || beta_hist.len() < m - 1 {
        return Err(Error::InvalidArgument(format!(
            "row {m} of the Jacobi matrix needs alpha_{} and beta_{}",
            m - 1,
            m - 1
        )));
    }
    let alpha = alpha_hist[m - 1];
    let (beta_prev, alpha_prev) = if m == 1 {
        (0.0, 1.0)
    } else {
        (beta_hist[m - 2], alpha_hist[m - 2])
    };
    if beta_prev < 0.0 {
        return Err(Error::Breakdown {
            index: m - 1,
            value: beta_prev,
        });
    }
    let omega = 1.0 / alpha + beta_prev / alpha_prev;
    j.push(beta_prev.sqrt() / alpha_prev, omega);
    Ok(())
}

/// `γ_k = √β_k / α_{k−1}`, the coupling from `J_k` to the next row.
pub fn jacobi_coupling(alpha_hist: &[f64], beta_hist: &[f64], k: usize) -> Result<f64> {
    if k == 0 || alpha_hist.len() < k || beta_hist.len() < k {
        return Err(Error::InvalidArgument(format!(
            "gamma_{k} needs alpha_{} and beta_{k}",
            k.saturating_sub(1)
        )));
    }
    let beta = beta_hist[k - 1];
    if beta < 0.0 {
        return Err(Error::Breakdown {
            index: k,
            value: beta,
        });
    }
    Ok(beta.sqrt() / alpha_hist[k - 1])
}
