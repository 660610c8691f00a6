//! Quadrature bounds on the CG error.
//!
//! With `x_0 = 0`, `‖x − x_j‖²_A = ‖r_0‖² (e₁ᵀJ_N⁻¹e₁ − e₁ᵀJ_j⁻¹e₁)`. The
//! unreachable `J_N` is replaced by `J_k`, `k = j + d`, or by a one-row
//! extension of `J_k` that prescribes a node: Gauss (no node, lower bound),
//! Gauss-Radau at `a ≤ λ_min` (upper) or at `b ≥ λ_max` (lower), and
//! Gauss-Lobatto at both (upper).
//!
//! The differences `T̂ − T_j` are never formed by subtraction. Both
//! `e₁ᵀJ_m⁻¹e₁` and `e₁ᵀJ_m⁻²e₁` grow by positive increments as `m` grows,
//! and those increments follow from O(1) recurrences on the LDLᵀ pivots.
//! Summing the increments between `j` and the extension keeps full relative
//! accuracy far below `10⁻¹⁶ ‖ε_0‖²_A`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tridiag::{shifted_pivot_gap, sturm_count, SymTridiagonal};

/// Quantity compared against the tolerance to stop the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Criterion {
    /// Relative A-norm error, Gauss-Lobatto upper bound.
    #[default]
    RelAnorm,
    /// Relative l2 error estimate.
    RelL2,
    /// `‖r_k‖ / ‖b‖`.
    RelResidue,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::RelAnorm, Criterion::RelL2, Criterion::RelResidue];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::RelAnorm => "rel-anorm",
            Criterion::RelL2 => "rel-l2",
            Criterion::RelResidue => "rel-residue",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rel-anorm" | "anorm" => Ok(Criterion::RelAnorm),
            "rel-l2" | "l2" => Ok(Criterion::RelL2),
            "rel-residue" | "residue" => Ok(Criterion::RelResidue),
            other => Err(Error::InvalidArgument(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Set of rules whose value is not a usable bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RuleFlags(u8);

impl RuleFlags {
    pub const GAUSS: RuleFlags = RuleFlags(1);
    pub const RADAU_UPPER: RuleFlags = RuleFlags(1 << 1);
    pub const RADAU_LOWER: RuleFlags = RuleFlags(1 << 2);
    pub const LOBATTO: RuleFlags = RuleFlags(1 << 3);
    pub const L2: RuleFlags = RuleFlags(1 << 4);
    /// The relative l2 error is undefined (`x_j = 0`).
    pub const REL_L2: RuleFlags = RuleFlags(1 << 5);

    const NAMES: [(RuleFlags, &'static str); 6] = [
        (RuleFlags::GAUSS, "gauss"),
        (RuleFlags::RADAU_UPPER, "radau_upper"),
        (RuleFlags::RADAU_LOWER, "radau_lower"),
        (RuleFlags::LOBATTO, "lobatto"),
        (RuleFlags::L2, "l2"),
        (RuleFlags::REL_L2, "rel_l2"),
    ];

    pub fn empty() -> Self {
        RuleFlags(0)
    }

    pub fn all() -> Self {
        RuleFlags(0b11_1111)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: RuleFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn intersects(self, other: RuleFlags) -> bool {
        self.0 & other.0 != 0
    }

    pub fn insert(&mut self, other: RuleFlags) {
        self.0 |= other.0;
    }

    pub fn set(&mut self, other: RuleFlags, on: bool) {
        if on {
            self.insert(other);
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl std::ops::BitOr for RuleFlags {
    type Output = RuleFlags;

    fn bitor(self, rhs: RuleFlags) -> RuleFlags {
        RuleFlags(self.0 | rhs.0)
    }
}

impl fmt::Display for RuleFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let names: Vec<&str> = Self::NAMES
            .iter()
            .filter(|(flag, _)| self.contains(*flag))
            .map(|(_, name)| *name)
            .collect();
        f.write_str(&names.join("|"))
    }
}

/// Squared A-norm error bounds for one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnormBounds {
    pub gauss_lower: f64,
    pub radau_upper: f64,
    pub radau_lower: f64,
    pub lobatto_upper: f64,
    pub failed: RuleFlags,
}

/// Everything known about the error of iterate `j`, computed at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub k_estimated: usize,
    pub k_current: usize,
    /// Squared A-norm bounds.
    pub gauss_lower: f64,
    pub radau_upper: f64,
    pub radau_lower: f64,
    pub lobatto_upper: f64,
    /// `Σ_{i=j}^{k−1} α_i‖r_i‖²`, the Gauss value by a second route.
    pub hs_lower: f64,
    /// Squared l2 error estimate (not a guaranteed bound).
    pub l2_estimate: f64,
    pub rel_anorm_upper: f64,
    pub rel_l2_estimate: f64,
    pub a_used: f64,
    pub b_used: f64,
    pub failed: RuleFlags,
}

/// Per-row data of the top-down `LDLᵀ` of `J`, for every leading block `J_m`:
/// the pivot `d_m`, `u_m = e_mᵀJ_m⁻¹e₁`, `s_m = e_mᵀJ_m⁻²e₁`,
/// `w_m = ‖J_m⁻¹e_m‖²` and the increments of `e₁ᵀJ_m⁻¹e₁` and `e₁ᵀJ_m⁻²e₁`.
#[derive(Debug, Clone)]
struct Moments {
    pivot: Vec<f64>,
    u: Vec<f64>,
    s: Vec<f64>,
    w: Vec<f64>,
    inc1: Vec<f64>,
    inc2: Vec<f64>,
}

/// `None` once a pivot is not positive, i.e. `J` is not numerically SPD.
fn moments(jk: &SymTridiagonal) -> Option<Moments> {
    let k = jk.dim();
    let omega = jk.omega();
    let gamma = jk.gamma();
    let mut m = Moments {
        pivot: Vec::with_capacity(k),
        u: Vec::with_capacity(k),
        s: Vec::with_capacity(k),
        w: Vec::with_capacity(k),
        inc1: Vec::with_capacity(k),
        inc2: Vec::with_capacity(k),
    };
    for i in 0..k {
        if i == 0 {
            let d = omega[0];
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            m.pivot.push(d);
            m.u.push(1.0 / d);
            m.s.push(1.0 / (d * d));
            m.w.push(1.0 / (d * d));
            m.inc1.push(1.0 / d);
            m.inc2.push(1.0 / (d * d));
            continue;
        }
        let g = gamma[i - 1];
        let d = omega[i] - g * g / m.pivot[i - 1];
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        let (inc1, inc2) = increments(m.u[i - 1], m.s[i - 1], m.w[i - 1], g * g, d);
        let (u, s, w) = (m.u[i - 1], m.s[i - 1], m.w[i - 1]);
        m.u.push(-g * u / d);
        m.s.push(-(g / d) * (s + g * g * u / d * w) - g * u / (d * d));
        m.w.push(g * g / (d * d) * w + 1.0 / (d * d));
        m.pivot.push(d);
        m.inc1.push(inc1);
        m.inc2.push(inc2);
    }
    Some(m)
}

/// Growth of `e₁ᵀJ⁻¹e₁` and `e₁ᵀJ⁻²e₁` when a row with coupling² `g2` and
/// new last pivot `sigma` is appended to a block with entries `(u, s, w)`.
/// Every term has the same sign, so nothing cancels.
fn increments(u: f64, s: f64, w: f64, g2: f64, sigma: f64) -> (f64, f64) {
    let t = g2 * u / sigma;
    (t * u, t * (2.0 * s + t * w) + g2 * u * u / (sigma * sigma))
}

/// Increments of the Gauss-Radau extension with node `z`, or `None` if the
/// shifted factorization breaks down.
fn radau_increments(jk: &SymTridiagonal, m: &Moments, gamma_k: f64, z: f64) -> Option<(f64, f64)> {
    let k = jk.dim();
    if gamma_k == 0.0 {
        return Some((0.0, 0.0));
    }
    let pg = shifted_pivot_gap(jk, z).ok()?;
    let g2 = gamma_k * gamma_k;
    // last pivot of the extension: ω̂ − γ²/d_k with ω̂ = z + γ²/d_k(z)
    let sigma = pg.shift + g2 * pg.gap / (pg.pivot * pg.shifted_pivot);
    let r = increments(m.u[k - 1], m.s[k - 1], m.w[k - 1], g2, sigma);
    (r.0.is_finite() && r.1.is_finite()).then_some(r)
}

/// Increments of the Gauss-Lobatto extension with nodes `a` and `b`.
fn lobatto_increments(
    jk: &SymTridiagonal,
    m: &Moments,
    gamma_k: f64,
    a: f64,
    b: f64,
) -> Option<(f64, f64)> {
    let k = jk.dim();
    if gamma_k == 0.0 {
        return Some((0.0, 0.0));
    }
    let pa = shifted_pivot_gap(jk, a).ok()?;
    let pb = shifted_pivot_gap(jk, b).ok()?;
    let g2 = (pb.shift - pa.shift) / (1.0 / pa.shifted_pivot - 1.0 / pb.shifted_pivot);
    if !(g2 > 0.0 && g2.is_finite()) {
        return None;
    }
    let sigma = pa.shift + g2 * pa.gap / (pa.pivot * pa.shifted_pivot);
    let r = increments(m.u[k - 1], m.s[k - 1], m.w[k - 1], g2, sigma);
    (r.0.is_finite() && r.1.is_finite()).then_some(r)
}

fn check_window(jk: &SymTridiagonal, j: usize) -> Result<()> {
    if jk.is_empty() || j > jk.dim() {
        return Err(Error::InvalidArgument(format!(
            "iterate j = {j} needs a Jacobi matrix of order ≥ max(j, 1), got {}",
            jk.dim()
        )));
    }
    Ok(())
}

/// Validity of a squared quantity: finite and non-negative.
fn usable(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

struct Rules {
    bounds: AnormBounds,
    radau_a: Option<(f64, f64)>,
    moments: Option<Moments>,
}

/// Relative margin by which the prescribed nodes are moved away from the
/// spectrum. A node on a converged Ritz value makes the extension singular;
/// moving `a` down or `b` up keeps every bound valid.
pub const NODE_MARGIN: f64 = 1.5e-8;

/// Nodes actually used for `a_est ≤ λ_min` and `b_est ≥ λ_max`.
pub fn widened_nodes(a_est: f64, b_est: f64) -> (f64, f64) {
    (a_est - NODE_MARGIN * a_est.abs(), b_est + NODE_MARGIN * b_est.abs())
}

fn evaluate(jk: &SymTridiagonal, gamma_k: f64, r0_norm_sq: f64, j: usize, a: f64, b: f64) -> Rules {
    let k = jk.dim();
    let (a, b) = widened_nodes(a, b);
    let Some(m) = moments(jk) else {
        return Rules {
            bounds: AnormBounds {
                gauss_lower: f64::NAN,
                radau_upper: f64::NAN,
                radau_lower: f64::NAN,
                lobatto_upper: f64::NAN,
                failed: RuleFlags::all(),
            },
            radau_a: None,
            moments: None,
        };
    };
    let gauss_sum: f64 = m.inc1[j..k].iter().sum();
    let gauss = r0_norm_sq * gauss_sum;
    let radau_a = radau_increments(jk, &m, gamma_k, a);
    let radau_b = radau_increments(jk, &m, gamma_k, b);
    let lob = lobatto_increments(jk, &m, gamma_k, a, b);
    let with = |inc: Option<(f64, f64)>| inc.map_or(f64::NAN, |(i1, _)| r0_norm_sq * (gauss_sum + i1));
    let radau_upper = with(radau_a);
    let radau_lower = with(radau_b);
    let lobatto_upper = with(lob);

    let exact = gamma_k == 0.0;
    let a_below = exact || sturm_count(jk, a) == 0;
    let b_above = exact || sturm_count(jk, b) == k;
    let mut failed = RuleFlags::empty();
    failed.set(RuleFlags::GAUSS, !usable(gauss));
    failed.set(RuleFlags::RADAU_UPPER, !usable(radau_upper) || !a_below);
    failed.set(RuleFlags::RADAU_LOWER, !usable(radau_lower) || !b_above);
    failed.set(RuleFlags::LOBATTO, !usable(lobatto_upper) || !a_below || !b_above);
    Rules {
        bounds: AnormBounds {
            gauss_lower: gauss,
            radau_upper,
            radau_lower,
            lobatto_upper,
            failed,
        },
        radau_a,
        moments: Some(m),
    }
}

/// Gauss, Gauss-Radau (at `a_est` and `b_est`) and Gauss-Lobatto bounds on
/// `‖x − x_j‖²_A`, from `J_k` and the coupling `gamma_k` to its next row.
///
/// A rule whose value is negative or non-finite, or whose prescribed node
/// lies inside the Ritz interval, is flagged rather than dropped.
pub fn anorm_bounds(
    jk: &SymTridiagonal,
    gamma_k: f64,
    r0_norm_sq: f64,
    j: usize,
    a_est: f64,
    b_est: f64,
) -> Result<AnormBounds> {
    check_window(jk, j)?;
    Ok(evaluate(jk, gamma_k, r0_norm_sq, j, a_est, b_est).bounds)
}

/// `Σ_{i=j}^{k−1} α_i ‖r_i‖²`.
pub fn hs_lower_bound(alpha_hist: &[f64], r_norm_sq_hist: &[f64], j: usize, k: usize) -> f64 {
    (j..k).map(|i| alpha_hist[i] * r_norm_sq_hist[i]).sum()
}

/// `sqrt(bound / (bound + ‖x_j‖²_A))`; 0 when both are 0.
pub fn relative_anorm(bound_sq: f64, xk_anorm_sq: f64) -> f64 {
    let total = bound_sq + xk_anorm_sq;
    if total == 0.0 {
        return 0.0;
    }
    (bound_sq / total).sqrt()
}

fn l2_from(
    rules: &Rules,
    r0_norm_sq: f64,
    j: usize,
    k: usize,
    anorm_radau_lower: f64,
) -> (f64, bool) {
    let (Some(m), Some((_, ext2))) = (&rules.moments, rules.radau_a) else {
        return (f64::NAN, false);
    };
    let sum2: f64 = m.inc2[j..k].iter().sum::<f64>() + ext2;
    let correction = if j == 0 {
        0.0
    } else {
        2.0 * (m.s[j - 1] / m.u[j - 1]) * anorm_radau_lower
    };
    let v = r0_norm_sq * sum2 - correction;
    (v, usable(v))
}

/// Estimate of `‖x − x_j‖²`:
/// `‖r_0‖² (T̂₂ − e₁ᵀJ_j⁻²e₁) − 2 (s_j/u_j) ‖ε_j‖²_A`, with `T̂₂` taken from the
/// Gauss-Radau extension at `a_est` and the A-norm term from the Radau
/// lower bound.
pub fn l2_estimate(
    jk: &SymTridiagonal,
    gamma_k: f64,
    r0_norm_sq: f64,
    j: usize,
    a_est: f64,
    b_est: f64,
    anorm_radau_lower: f64,
) -> Result<f64> {
    check_window(jk, j)?;
    let rules = evaluate(jk, gamma_k, r0_norm_sq, j, a_est, b_est);
    Ok(l2_from(&rules, r0_norm_sq, j, jk.dim(), anorm_radau_lower).0)
}

/// `sqrt(l2_est_sq) / ‖x_j‖`; `None` when `x_j = 0`.
pub fn relative_l2(l2_est_sq: f64, xk_norm: f64) -> Option<f64> {
    (xk_norm > 0.0).then(|| l2_est_sq.sqrt() / xk_norm)
}

/// All rules for iterate `j` from `J_k`, including the relative forms.
/// `xj_anorm_sq` and `xj_norm` are `‖x_j‖²_A` and `‖x_j‖`.
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    jk: &SymTridiagonal,
    gamma_k: f64,
    r0_norm_sq: f64,
    j: usize,
    a_est: f64,
    b_est: f64,
    xj_anorm_sq: f64,
    xj_norm: f64,
) -> Result<ErrorEstimate> {
    check_window(jk, j)?;
    let k = jk.dim();
    let rules = evaluate(jk, gamma_k, r0_norm_sq, j, a_est, b_est);
    let mut failed = rules.bounds.failed;
    let (l2, l2_ok) = l2_from(&rules, r0_norm_sq, j, k, rules.bounds.radau_lower);
    failed.set(
        RuleFlags::L2,
        !l2_ok || failed.intersects(RuleFlags::RADAU_UPPER | RuleFlags::RADAU_LOWER),
    );
    let lob = rules.bounds.lobatto_upper;
    let rel_anorm_upper = if usable(lob) {
        relative_anorm(lob, xj_anorm_sq)
    } else {
        f64::NAN
    };
    let rel_l2_estimate = match relative_l2(l2, xj_norm) {
        Some(v) if l2_ok => v,
        Some(_) => f64::NAN,
        None => {
            failed.insert(RuleFlags::REL_L2);
            f64::NAN
        }
    };
    Ok(ErrorEstimate {
        k_estimated: j,
        k_current: k,
        gauss_lower: rules.bounds.gauss_lower,
        radau_upper: rules.bounds.radau_upper,
        radau_lower: rules.bounds.radau_lower,
        lobatto_upper: lob,
        hs_lower: f64::NAN,
        l2_estimate: l2,
        rel_anorm_upper,
        rel_l2_estimate,
        a_used: widened_nodes(a_est, b_est).0,
        b_used: widened_nodes(a_est, b_est).1,
        failed,
    })
}

/// Whether the selected quantity is valid and below `tol`. A flagged rule
/// never stops the solve.
pub fn stopping_check(
    estimate: Option<&ErrorEstimate>,
    rel_residue: f64,
    criterion: Criterion,
    tol: f64,
) -> bool {
    match criterion {
        Criterion::RelResidue => rel_residue < tol,
        Criterion::RelAnorm => estimate.is_some_and(|e| {
            !e.failed.contains(RuleFlags::LOBATTO) && e.rel_anorm_upper < tol
        }),
        Criterion::RelL2 => estimate.is_some_and(|e| {
            !e.failed.intersects(RuleFlags::L2 | RuleFlags::REL_L2) && e.rel_l2_estimate < tol
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tridiag::{inverse_entries, lobatto_extend, radau_extend};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    /// `J_2` of CG on `diag(1,2)`, `b = (1,1)`; CG terminates so `γ_2 = 0`.
    fn diag_chain() -> SymTridiagonal {
        SymTridiagonal::new(vec![1.5, 1.5], vec![0.5]).unwrap()
    }

    fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> SymTridiagonal {
        let gamma: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(0.1..1.0)).collect();
        let omega = (0..k)
            .map(|i| {
                let left = if i > 0 { gamma[i - 1] } else { 0.0 };
                let right = if i + 1 < k { gamma[i] } else { 0.0 };
                left + right + rng.gen_range(0.05..2.0)
            })
            .collect();
        SymTridiagonal::new(omega, gamma).unwrap()
    }

    #[test]
    fn diag_chain_bounds_are_exact() {
        let b = anorm_bounds(&diag_chain(), 0.0, 2.0, 1, 1.0 - 1e-8, 2.0 + 1e-8).unwrap();
        for v in [b.gauss_lower, b.radau_upper, b.radau_lower, b.lobatto_upper] {
            assert!(rel(v, 1.0 / 6.0) <= 1e-14, "{v}");
        }
        assert!(b.failed.is_empty());
        let hs = hs_lower_bound(&[2.0 / 3.0, 0.75], &[2.0, 2.0 / 9.0], 1, 2);
        assert!(rel(hs, 1.0 / 6.0) <= 1e-15);
        assert!(rel(relative_anorm(1.0 / 6.0, 4.0 / 3.0), 1.0 / 3.0) <= 1e-15);
    }

    #[test]
    fn diag_chain_l2() {
        let j = diag_chain();
        let l2 = l2_estimate(&j, 0.0, 2.0, 1, 1.0, 2.0, 1.0 / 6.0).unwrap();
        assert!(rel(l2, 5.0 / 36.0) <= 1e-14, "{l2}");
        let x1_norm = (8.0f64 / 9.0).sqrt();
        let r = relative_l2(5.0 / 36.0, x1_norm).unwrap();
        assert!(rel(r, 10f64.sqrt() / 8.0) <= 1e-15);
        let e = estimate(&j, 0.0, 2.0, 1, 1.0, 2.0, 4.0 / 3.0, x1_norm).unwrap();
        assert!(rel(e.rel_l2_estimate, 10f64.sqrt() / 8.0) <= 1e-14);
        assert!(rel(e.rel_anorm_upper, 1.0 / 3.0) <= 1e-14);
    }

    #[test]
    fn identity_has_zero_error() {
        let j = SymTridiagonal::identity(1);
        let e = estimate(&j, 0.0, 5.0, 1, 0.5, 2.0, 5.0, 5f64.sqrt()).unwrap();
        for v in [e.gauss_lower, e.radau_upper, e.radau_lower, e.lobatto_upper, e.l2_estimate] {
            assert_eq!(v, 0.0);
        }
        assert_eq!(e.rel_anorm_upper, 0.0);
        assert!(e.failed.is_empty());
    }

    #[test]
    fn relative_forms_edge_cases() {
        assert_eq!(relative_anorm(0.0, 3.0), 0.0);
        assert_eq!(relative_anorm(2.0, 0.0), 1.0);
        assert_eq!(relative_anorm(0.0, 0.0), 0.0);
        assert_eq!(relative_l2(0.0, 2.0), Some(0.0));
        assert_eq!(relative_l2(1.0, 0.0), None);
    }

    #[test]
    fn recurrences_match_explicit_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let k = rng.gen_range(1..25);
            let jk = random_spd(&mut rng, k);
            let m = moments(&jk).unwrap();
            let mut t1 = 0.0;
            let mut t2 = 0.0;
            for i in 1..=k {
                t1 += m.inc1[i - 1];
                t2 += m.inc2[i - 1];
                let ie = inverse_entries(&jk.leading(i)).unwrap();
                assert!(rel(t1, ie.t1) <= 1e-12);
                assert!(rel(t2, ie.t2) <= 1e-12);
                assert!(rel(m.u[i - 1], ie.u) <= 1e-12);
                assert!(rel(m.s[i - 1], ie.s) <= 1e-12);
            }
        }
    }

    #[test]
    fn extensions_match_explicit_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = rng.gen_range(2..20);
            let jk = random_spd(&mut rng, k);
            let (f, g) = crate::tridiag::extremal_eigenvalues(&jk, 1e-13);
            let gamma_k = rng.gen_range(0.1..1.0);
            let base = inverse_entries(&jk).unwrap();
            let bounds = anorm_bounds(&jk, gamma_k, 1.0, 0, 0.7 * f, 1.2 * g).unwrap();
            let (a, b) = widened_nodes(0.7 * f, 1.2 * g);
            assert!(bounds.failed.is_empty());

            let ra = inverse_entries(&radau_extend(&jk, gamma_k, a).unwrap()).unwrap();
            assert!(rel(bounds.radau_upper, ra.t1) <= 1e-11);
            let rb = inverse_entries(&radau_extend(&jk, gamma_k, b).unwrap()).unwrap();
            assert!(rel(bounds.radau_lower, rb.t1) <= 1e-11);
            let lo = inverse_entries(&lobatto_extend(&jk, a, b).unwrap()).unwrap();
            assert!(rel(bounds.lobatto_upper, lo.t1) <= 1e-11);
            assert!(rel(bounds.gauss_lower, base.t1) <= 1e-12);

            assert!(bounds.gauss_lower <= bounds.radau_upper);
            assert!(bounds.radau_lower <= bounds.radau_upper);

            let l2 = l2_estimate(&jk, gamma_k, 1.0, 0, 0.7 * f, 1.2 * g, bounds.radau_lower).unwrap();
            assert!(rel(l2, ra.t2) <= 1e-11);
        }
    }

    #[test]
    fn node_inside_ritz_interval_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let jk = random_spd(&mut rng, 8);
        let (f, g) = crate::tridiag::extremal_eigenvalues(&jk, 1e-12);
        let b = anorm_bounds(&jk, 0.4, 1.0, 3, 1.5 * f, 1.01 * g).unwrap();
        assert!(b.failed.contains(RuleFlags::RADAU_UPPER));
        assert!(b.failed.contains(RuleFlags::LOBATTO));
        assert!(!b.failed.contains(RuleFlags::GAUSS));
        assert!(!b.failed.contains(RuleFlags::RADAU_LOWER));
    }

    #[test]
    fn window_is_validated() {
        assert!(anorm_bounds(&diag_chain(), 0.0, 2.0, 3, 1.0, 2.0).is_err());
        assert!(anorm_bounds(&SymTridiagonal::default(), 0.0, 2.0, 0, 1.0, 2.0).is_err());
    }

    fn est(rel_anorm: f64, failed: RuleFlags) -> ErrorEstimate {
        ErrorEstimate {
            k_estimated: 3,
            k_current: 7,
            gauss_lower: 0.0,
            radau_upper: 0.0,
            radau_lower: 0.0,
            lobatto_upper: 0.0,
            hs_lower: 0.0,
            l2_estimate: 0.0,
            rel_anorm_upper: rel_anorm,
            rel_l2_estimate: rel_anorm,
            a_used: 1.0,
            b_used: 2.0,
            failed,
        }
    }

    #[test]
    fn stopping_rules() {
        let ok = est(1e-9, RuleFlags::empty());
        assert!(stopping_check(Some(&ok), 1.0, Criterion::RelAnorm, 1e-8));
        assert!(stopping_check(Some(&ok), 1.0, Criterion::RelL2, 1e-8));
        assert!(!stopping_check(Some(&ok), 1.0, Criterion::RelResidue, 1e-8));
        assert!(stopping_check(None, 1e-9, Criterion::RelResidue, 1e-8));
        assert!(!stopping_check(None, 1e-9, Criterion::RelAnorm, 1e-8));
        let bad = est(1e-9, RuleFlags::LOBATTO | RuleFlags::L2);
        assert!(!stopping_check(Some(&bad), 1.0, Criterion::RelAnorm, 1e-8));
        assert!(!stopping_check(Some(&bad), 1.0, Criterion::RelL2, 1e-8));
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert_eq!("REL_ANORM".parse::<Criterion>().unwrap(), Criterion::RelAnorm);
        assert!("energy".parse::<Criterion>().is_err());
        assert_eq!(RuleFlags::empty().to_string(), "none");
        assert_eq!((RuleFlags::GAUSS | RuleFlags::L2).to_string(), "gauss|l2");
    }
}
