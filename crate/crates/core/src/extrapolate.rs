//! Look-ahead underestimates of `λ_min(A)` from the Ritz sequence.
//!
//! The smallest Ritz values `f_1 ≥ f_2 ≥ … > 0` approach `λ_min(A)` only
//! slowly. Each new value is pushed down by an exponential look-ahead
//!
//! ```text
//! ã_k = f_k · exp(−α_k · F(k, N)),   F = (N−k)/N  or  (N−k)/k
//! ```
//!
//! where the decay rate `α_k` is the least-squares slope of
//! `ln(f_i / f_k)` against `(k−i)/k` over the last `m` points.

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;

/// Safety factor applied to the largest Ritz value.
pub const LARGEST_SAFETY: f64 = 1e-8;

/// Look-ahead scaling `F(k, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// `(N − k) / N`: uniformly stiff.
    #[default]
    OverN,
    /// `(N − k) / k`: aggressive early, stiff near the end.
    OverK,
}

/// Least-squares decay rate of the log-ratios over the trailing window.
///
/// `f_seq[i − 1]` holds `f_i`; `k` is 1-based. Fewer than `m` earlier points
/// are used when `k ≤ m`; `k = 1` gives 0.
pub fn regress_decay(f_seq: &[f64], k: usize, m: usize) -> Result<f64> {
    if k == 0 || k > f_seq.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside a sequence of length {}",
            f_seq.len()
        )));
    }
    let start = k.saturating_sub(m).max(1);
    for i in start..=k {
        let v = f_seq[i - 1];
        if !(v > 0.0) {
            return Err(Error::NonPositive { index: i, value: v });
        }
    }
    let f_k = f_seq[k - 1];
    let kf = k as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in start..k {
        let w = (k - i) as f64 / kf;
        num += w * (f_seq[i - 1] / f_k).ln();
        den += w * w;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// `ã_k = f_k exp(−α F(k, N))`. The look-ahead distance is clamped at zero
/// once `k ≥ N`, so `ã_k = f_k` from then on.
pub fn underestimate(f_k: f64, alpha_under: f64, k: usize, n: usize, variant: Variant) -> f64 {
    let ahead = n.saturating_sub(k) as f64;
    let scale = match variant {
        Variant::OverN => ahead / n as f64,
        Variant::OverK => ahead / k.max(1) as f64,
    };
    if scale == 0.0 {
        return f_k;
    }
    f_k * (-alpha_under * scale).exp()
}

/// Largest Ritz value nudged upwards so that it sits strictly above `λ_max(J_k)`.
pub fn largest_estimate(g_seq: &[f64], k: usize) -> f64 {
    g_seq[k - 1] * (1.0 + LARGEST_SAFETY)
}

/// Mean of `(f_k − f_{k+1}) / (f_{k−1} − f_k)` over the terms with a
/// non-zero denominator. `None` when no term is defined.
pub fn beta_metric(f_seq: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> = f_seq
        .windows(3)
        .filter(|w| w[0] != w[1])
        .map(|w| (w[1] - w[2]) / (w[0] - w[1]))
        .collect();
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}

/// `Σ (a − ã_k)² / Σ (f_k − a)²`: how much of the Ritz-value gap the
/// look-ahead removed (0 is perfect).
pub fn delta_metric(f_seq: &[f64], a_tilde_seq: &[f64], a: f64) -> Option<f64> {
    let num: f64 = a_tilde_seq.iter().map(|t| (a - t).powi(2)).sum();
    let den: f64 = f_seq.iter().map(|f| (f - a).powi(2)).sum();
    (den > 0.0).then(|| num / den)
}

/// Per-solve record of the extremal Ritz values and the look-ahead.
#[derive(Debug, Clone)]
pub struct EigenTrace {
    pub f_seq: Vec<f64>,
    pub g_seq: Vec<f64>,
    pub a_tilde_seq: Vec<f64>,
    pub alpha_seq: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub variant: Variant,
}

impl EigenTrace {
    pub fn new(n: usize, m: usize, variant: Variant) -> Self {
        EigenTrace {
            f_seq: Vec::new(),
            g_seq: Vec::new(),
            a_tilde_seq: Vec::new(),
            alpha_seq: Vec::new(),
            m,
            n,
            variant,
        }
    }

    pub fn len(&self) -> usize {
        self.f_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_seq.is_empty()
    }

    /// Records the extremal Ritz values of the next `J_k` and returns `ã_k`.
    ///
    /// Bisection noise can break monotonicity, so `f` is clamped to be
    /// non-increasing and `g` non-decreasing. Until three points exist no
    /// slope can be fitted and `ã_k = f_k / e`.
    pub fn push(&mut self, f_raw: f64, g_raw: f64) -> Result<f64> {
        let k = self.f_seq.len() + 1;
        let f = self.f_seq.last().map_or(f_raw, |&prev| f_raw.min(prev));
        let g = self.g_seq.last().map_or(g_raw, |&prev| g_raw.max(prev));
        if !(f > 0.0) {
            return Err(Error::NonPositive { index: k, value: f });
        }
        self.f_seq.push(f);
        self.g_seq.push(g);
        let alpha = regress_decay(&self.f_seq, k, self.m)?;
        let a_tilde = underestimate(f, alpha, k, self.n, self.variant);
        self.alpha_seq.push(alpha);
        self.a_tilde_seq.push(a_tilde);
        Ok(a_tilde)
    }

    pub fn a_tilde(&self) -> Option<f64> {
        self.a_tilde_seq.last().copied()
    }

    pub fn b_estimate(&self) -> Option<f64> {
        (!self.g_seq.is_empty()).then(|| largest_estimate(&self.g_seq, self.g_seq.len()))
    }

    pub fn beta_metric(&self) -> Option<f64> {
        beta_metric(&self.f_seq)
    }

    pub fn delta_metric(&self, a: f64) -> Option<f64> {
        delta_metric(&self.f_seq, &self.a_tilde_seq, a)
    }
}
