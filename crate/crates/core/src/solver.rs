//! End-to-end instrumented solve.

use std::time::{Duration, Instant};

use crate::cg::{cg_init, jacobi_coupling, recurrence_append, CgState};
use crate::error::{Error, Result};
use crate::estimators::{estimate, hs_lower_bound, stopping_check, Criterion, ErrorEstimate};
use crate::extrapolate::{EigenTrace, Variant, DEFAULT_WINDOW};
use crate::oracle::TrueErrors;
use crate::sparse::{norm2, CsrMatrix};
use crate::tridiag::{extremal_eigenvalues, SymTridiagonal, DEFAULT_EIG_TOL};

pub const DEFAULT_DELAY: usize = 4;

/// Where the quadrature nodes `a ≤ λ_min` and `b ≥ λ_max` come from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EigSource {
    /// Look-ahead underestimate `ã_k` and the padded largest Ritz value.
    #[default]
    Estimated,
    Fixed { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub tol: f64,
    /// Defaults to `10 n`.
    pub max_iter: Option<usize>,
    pub criterion: Criterion,
    /// Iterate `j = k − delay` is certified at iteration `k`.
    pub delay: usize,
    pub window: usize,
    pub variant: Variant,
    pub eig_source: EigSource,
    /// Bisection tolerance for the extremal Ritz values.
    pub eig_tol: f64,
    /// Starting guess; zero when `None`.
    pub x0: Option<Vec<f64>>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-8,
            max_iter: None,
            criterion: Criterion::RelAnorm,
            delay: DEFAULT_DELAY,
            window: DEFAULT_WINDOW,
            variant: Variant::OverN,
            eig_source: EigSource::Estimated,
            eig_tol: DEFAULT_EIG_TOL,
            x0: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.delay < 1 {
            return bad("delay must be at least 1".into());
        }
        if self.window < 2 {
            return bad(format!("window must be at least 2, got {}", self.window));
        }
        if !(self.eig_tol > 0.0) {
            return bad(format!("eigenvalue tolerance must be positive, got {}", self.eig_tol));
        }
        if let EigSource::Fixed { a, b } = self.eig_source {
            if !(a > 0.0 && a < b) {
                return bad(format!("fixed nodes need 0 < a < b, got a = {a}, b = {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The selected criterion fell below the tolerance.
    Criterion,
    /// The residual became exactly zero.
    ExactResidual,
    MaxIterations,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Criterion => "criterion",
            StopReason::ExactResidual => "exact-residual",
            StopReason::MaxIterations => "max-iterations",
        })
    }
}

/// State after iteration `k`, plus the estimate for iterate `k` once it
/// has been computed (at iteration `k + delay`, or at the end).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub rel_residue: f64,
    pub r_norm_sq: f64,
    pub f: f64,
    pub g: f64,
    pub a_tilde: f64,
    pub alpha_under: f64,
    pub xk_anorm_sq: f64,
    pub xk_norm: f64,
    pub estimate: Option<ErrorEstimate>,
    pub truth: Option<TrueErrors>,
    /// CG update, including the product with `A`.
    pub step_time: Duration,
    /// Jacobi row, Ritz values, look-ahead and quadrature rules.
    pub estimator_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Iterations `1..=iterations`.
    pub records: Vec<IterationRecord>,
    /// Estimate for the starting guess.
    pub initial_estimate: Option<ErrorEstimate>,
    pub initial_truth: Option<TrueErrors>,
    pub trace: EigenTrace,
    pub jacobi: SymTridiagonal,
    pub alpha_hist: Vec<f64>,
    pub beta_hist: Vec<f64>,
    pub r_norm_sq_hist: Vec<f64>,
    pub b_norm: f64,
}

impl SolveReport {
    /// Estimate for iterate `j` (0 is the starting guess).
    pub fn estimate_for(&self, j: usize) -> Option<&ErrorEstimate> {
        if j == 0 {
            self.initial_estimate.as_ref()
        } else {
            self.records.get(j - 1)?.estimate.as_ref()
        }
    }

    pub fn estimates(&self) -> impl Iterator<Item = &ErrorEstimate> {
        self.initial_estimate
            .iter()
            .chain(self.records.iter().filter_map(|r| r.estimate.as_ref()))
    }

    pub fn converged(&self) -> bool {
        self.stop_reason != StopReason::MaxIterations
    }
}

pub fn solve(a: &CsrMatrix, b: &[f64], config: &SolveConfig) -> Result<SolveReport> {
    solve_observed(a, b, config, |_| None)
}

/// As [`solve`], calling `observe` on the state after every iteration
/// (and once before the first); its result is stored with the record.
pub fn solve_observed<F>(a: &CsrMatrix, b: &[f64], config: &SolveConfig, mut observe: F) -> Result<SolveReport>
where
    F: FnMut(&CgState) -> Option<TrueErrors>,
{
    config.validate()?;
    let n = a.n();
    let zero = vec![0.0; n];
    let mut state = cg_init(a, b, config.x0.as_deref().unwrap_or(&zero))?;
    let max_iter = config.max_iter.unwrap_or(10 * n.max(1));
    let mut trace = EigenTrace::new(n, config.window, config.variant);
    let mut jacobi = SymTridiagonal::default();
    let mut records: Vec<IterationRecord> = Vec::new();
    let initial_truth = observe(&state);
    let mut norms = vec![(state.xk_anorm_sq, norm2(&state.x))];
    let mut initial_estimate = None;

    let stop_reason = loop {
        if state.converged() {
            break StopReason::ExactResidual;
        }
        if state.k >= max_iter {
            break StopReason::MaxIterations;
        }
        let t0 = Instant::now();
        state.step(a)?;
        let step_time = t0.elapsed();
        let t1 = Instant::now();
        let k = state.k;
        recurrence_append(&mut jacobi, &state.alpha_hist, &state.beta_hist)?;
        let (f, g) = extremal_eigenvalues(&jacobi, config.eig_tol);
        let a_tilde = trace.push(f, g)?;
        let xk_norm = norm2(&state.x);
        norms.push((state.xk_anorm_sq, xk_norm));

        let latest = if k >= config.delay {
            let j = k - config.delay;
            let est = estimate_window(&state, &jacobi, &trace, config, j, &norms)?;
            Some(est)
        } else {
            None
        };
        let estimator_time = t1.elapsed();
        let truth = observe(&state);
        records.push(IterationRecord {
            k,
            rel_residue: state.rel_residue,
            r_norm_sq: state.r_norm_sq(),
            f: *trace.f_seq.last().expect("pushed above"),
            g: *trace.g_seq.last().expect("pushed above"),
            a_tilde,
            alpha_under: *trace.alpha_seq.last().expect("pushed above"),
            xk_anorm_sq: state.xk_anorm_sq,
            xk_norm,
            estimate: None,
            truth,
            step_time,
            estimator_time,
        });
        let stop = stopping_check(latest.as_ref(), state.rel_residue, config.criterion, config.tol);
        if let Some(est) = latest {
            attach(&mut records, &mut initial_estimate, est);
        }
        if state.converged() {
            break StopReason::ExactResidual;
        }
        if stop {
            break StopReason::Criterion;
        }
    };

    // certify the trailing iterates that never reached a full delay
    let k = state.k;
    if k > 0 {
        let first = (k + 1).saturating_sub(config.delay);
        for j in first..=k {
            let est = estimate_window(&state, &jacobi, &trace, config, j, &norms)?;
            attach(&mut records, &mut initial_estimate, est);
        }
    }

    Ok(SolveReport {
        x: state.x.clone(),
        iterations: k,
        stop_reason,
        records,
        initial_estimate,
        initial_truth,
        trace,
        jacobi,
        alpha_hist: state.alpha_hist.clone(),
        beta_hist: state.beta_hist.clone(),
        r_norm_sq_hist: state.r_norm_sq_hist.clone(),
        b_norm: state.b_norm,
    })
}

fn attach(records: &mut [IterationRecord], initial: &mut Option<ErrorEstimate>, est: ErrorEstimate) {
    match est.k_estimated {
        0 => *initial = Some(est),
        j => records[j - 1].estimate = Some(est),
    }
}

fn estimate_window(
    state: &CgState,
    jacobi: &SymTridiagonal,
    trace: &EigenTrace,
    config: &SolveConfig,
    j: usize,
    norms: &[(f64, f64)],
) -> Result<ErrorEstimate> {
    let k = state.k;
    let gamma_k = jacobi_coupling(&state.alpha_hist, &state.beta_hist, k)?;
    let (a_used, b_used) = match config.eig_source {
        EigSource::Estimated => (
            trace.a_tilde().expect("trace has k entries"),
            trace.b_estimate().expect("trace has k entries"),
        ),
        EigSource::Fixed { a, b } => (a, b),
    };
    let (xj_anorm_sq, xj_norm) = norms[j];
    let mut est = estimate(
        jacobi,
        gamma_k,
        state.r0_norm_sq,
        j,
        a_used,
        b_used,
        xj_anorm_sq,
        xj_norm,
    )?;
    est.hs_lower = hs_lower_bound(&state.alpha_hist, &state.r_norm_sq_hist, j, k);
    Ok(est)
}
