//! Driver behind the `krylov-certify` binary: right-hand sides, instrumented
//! solves, CSV traces and reports.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use krylov_certify::estimators::{stopping_check, Criterion, ErrorEstimate, RuleFlags};
use krylov_certify::oracle::{exact_solve, smallest_eigenvector, spectrum_bounds, TrueErrors, Truth};
use krylov_certify::solver::solve_observed;
use krylov_certify::sparse::read_matrix_market;
use krylov_certify::{CsrMatrix, DenseSym, EigSource, SolveConfig, SolveReport, StopReason, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_PERTURBATION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum RhsMode {
    Ones,
    File(PathBuf),
    /// Unit eigenvector of `λ_min`, each component scaled by `1 + u`,
    /// `u ~ U(−scale, scale)`.
    EigminPerturbed { scale: f64 },
}

impl FromStr for RhsMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "ones" => Ok(RhsMode::Ones),
            None if s == "eigmin" => Ok(RhsMode::EigminPerturbed {
                scale: DEFAULT_PERTURBATION,
            }),
            Some(("file", path)) if !path.is_empty() => Ok(RhsMode::File(path.into())),
            Some(("eigmin", scale)) => {
                let scale: f64 = scale.parse().with_context(|| format!("bad perturbation '{scale}'"))?;
                if !(0.0..1.0).contains(&scale) {
                    bail!("perturbation must lie in [0, 1), got {scale}");
                }
                Ok(RhsMode::EigminPerturbed { scale })
            }
            _ => bail!("unknown right-hand side '{s}', expected ones, file:PATH or eigmin[:SCALE]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EigMode {
    #[default]
    Estimated,
    /// Dense extremal eigenvalues of `A`.
    Oracle,
    Fixed { a: f64, b: f64 },
}

impl FromStr for EigMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "estimated" => Ok(EigMode::Estimated),
            None if s == "oracle" => Ok(EigMode::Oracle),
            Some(("fixed", ab)) => {
                let (a, b) = ab
                    .split_once(',')
                    .ok_or_else(|| anyhow!("expected fixed:A,B, got '{s}'"))?;
                let a: f64 = a.trim().parse().with_context(|| format!("bad node '{a}'"))?;
                let b: f64 = b.trim().parse().with_context(|| format!("bad node '{b}'"))?;
                Ok(EigMode::Fixed { a, b })
            }
            _ => bail!("unknown eigenvalue source '{s}', expected estimated, oracle or fixed:A,B"),
        }
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "over-n" => Ok(Variant::OverN),
        "over-k" => Ok(Variant::OverK),
        _ => bail!("unknown variant '{s}', expected over-n or over-k"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub matrix_path: PathBuf,
    pub rhs: RhsMode,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub criterion: Criterion,
    pub delay: usize,
    pub window: usize,
    pub variant: Variant,
    pub eig: EigMode,
    pub seed: u64,
    /// Add the true-error columns (dense reference solve).
    pub validate: bool,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolveConfig::default();
        RunConfig {
            matrix_path: PathBuf::new(),
            rhs: RhsMode::Ones,
            tol: s.tol,
            max_iter: None,
            criterion: s.criterion,
            delay: s.delay,
            window: s.window,
            variant: s.variant,
            eig: EigMode::Estimated,
            seed: 0,
            validate: false,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn oracle_enabled(&self) -> bool {
        self.validate || self.eig == EigMode::Oracle
    }

    fn solve_config(&self, spectrum: Option<(f64, f64)>) -> Result<SolveConfig> {
        let eig_source = match self.eig {
            EigMode::Estimated => EigSource::Estimated,
            EigMode::Fixed { a, b } => EigSource::Fixed { a, b },
            EigMode::Oracle => {
                let (a, b) = spectrum.ok_or_else(|| anyhow!("oracle nodes need the dense spectrum"))?;
                EigSource::Fixed { a, b }
            }
        };
        let cfg = SolveConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            criterion: self.criterion,
            delay: self.delay,
            window: self.window,
            variant: self.variant,
            eig_source,
            ..SolveConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_matrix(path: &Path) -> Result<CsrMatrix> {
    let a = read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?;
    log::info!("{}: n = {}, nnz = {}", path.display(), a.n(), a.nnz());
    Ok(a)
}

/// Whitespace-separated numbers; lines starting with `%` or `#` are skipped.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let x: f64 = tok
                .parse()
                .with_context(|| format!("{}:{}: bad number '{tok}'", path.display(), no + 1))?;
            v.push(x);
        }
    }
    Ok(v)
}

pub fn make_rhs(mode: &RhsMode, a: &CsrMatrix, seed: u64) -> Result<Vec<f64>> {
    let n = a.n();
    match mode {
        RhsMode::Ones => Ok(vec![1.0; n]),
        RhsMode::File(path) => {
            let b = read_vector(path)?;
            if b.len() != n {
                bail!("{} holds {} values, the matrix has order {n}", path.display(), b.len());
            }
            Ok(b)
        }
        RhsMode::EigminPerturbed { scale } => {
            let dense = DenseSym::from_csr(a)?;
            let (_, mut v) = smallest_eigenvector(&dense)?;
            if *scale > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for x in &mut v {
                    *x *= 1.0 + rng.gen_range(-scale..*scale);
                }
            }
            Ok(v)
        }
    }
}

/// Dense reference data for validation runs.
#[derive(Debug, Clone)]
pub struct OracleInfo {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub x_anorm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub n: usize,
    pub report: SolveReport,
    pub oracle: Option<OracleInfo>,
    /// `‖r_k‖_A / ‖b‖_A` for `k = 0..=iterations`, oracle runs only.
    pub residue_anorm: Vec<f64>,
}

impl SolveOutcome {
    /// True errors of iterate `k` (0 is the starting guess).
    pub fn truth(&self, k: usize) -> Option<TrueErrors> {
        match k {
            0 => self.report.initial_truth,
            k => self.report.records.get(k - 1)?.truth,
        }
    }

    pub fn delta_metric(&self) -> Option<f64> {
        let o = self.oracle.as_ref()?;
        self.report.trace.delta_metric(o.lambda_min)
    }

    pub fn beta_metric(&self) -> Option<f64> {
        self.report.trace.beta_metric()
    }
}

pub fn run(cfg: &RunConfig, a: &CsrMatrix, b: &[f64]) -> Result<SolveOutcome> {
    let oracle = if cfg.oracle_enabled() {
        let dense = DenseSym::from_csr(a)?;
        let (lo, hi) = spectrum_bounds(&dense);
        let x = exact_solve(&dense, b)?;
        Some((lo, hi, x))
    } else {
        None
    };
    let solve_cfg = cfg.solve_config(oracle.as_ref().map(|o| (o.0, o.1)))?;
    let truth = match &oracle {
        Some((_, _, x)) => Some(Truth::new(a, x.clone())?),
        None => None,
    };
    let b_anorm = a.quadratic_form(b)?.sqrt();
    let mut residue_anorm = Vec::new();
    let report = solve_observed(a, b, &solve_cfg, |s| {
        let t = truth.as_ref()?;
        let ra = a.quadratic_form(&s.r).map(|q| q.max(0.0).sqrt() / b_anorm);
        residue_anorm.push(ra.unwrap_or(f64::NAN));
        t.errors(&s.x).ok()
    })?;
    log::info!(
        "{} iterations, stop: {}, relative residue {:e}",
        report.iterations,
        report.stop_reason,
        report.records.last().map_or(1.0, |r| r.rel_residue)
    );
    Ok(SolveOutcome {
        n: a.n(),
        report,
        oracle: match (oracle, truth) {
            (Some((lambda_min, lambda_max, _)), Some(t)) => Some(OracleInfo {
                lambda_min,
                lambda_max,
                x_anorm: t.anorm(),
            }),
            _ => None,
        },
        residue_anorm,
    })
}

/// Allowance for comparing a bound with a true squared A-norm error `t`:
/// rounding in the bound sums and in the reference solution.
pub fn rounding_allowance(n: usize, t: f64, x_anorm: f64) -> f64 {
    1e-12 * t + 16.0 * n as f64 * f64::EPSILON * t.sqrt() * x_anorm
}

/// Rules whose value contradicts the true squared A-norm error `t`.
pub fn violations(e: &ErrorEstimate, t: f64, allowance: f64) -> RuleFlags {
    let mut v = RuleFlags::empty();
    v.set(RuleFlags::GAUSS, e.gauss_lower > t + allowance);
    v.set(RuleFlags::RADAU_UPPER, e.radau_upper < t - allowance);
    v.set(RuleFlags::RADAU_LOWER, e.radau_lower > t + allowance);
    v.set(RuleFlags::LOBATTO, e.lobatto_upper < t - allowance);
    v
}

const COLUMNS: [&str; 16] = [
    "k",
    "rel_residue",
    "f_k",
    "g_k",
    "a_tilde",
    "gauss_lower",
    "radau_upper",
    "radau_lower",
    "lobatto_upper",
    "rel_anorm_upper",
    "l2_estimate",
    "rel_l2_estimate",
    "failed_flags",
    "estimated_at",
    "a_used",
    "b_used",
];

const ORACLE_COLUMNS: [&str; 7] = [
    "true_anorm",
    "true_rel_anorm",
    "true_l2",
    "true_rel_l2",
    "rel_residue_l2",
    "rel_residue_anorm",
    "oracle_violations",
];

fn num(x: f64) -> String {
    // no "-0e0"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:e}")
}

/// One row per iteration. Absolute error columns hold squared norms.
pub fn write_csv<W: Write>(outcome: &SolveOutcome, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if outcome.oracle.is_some() {
        header.extend(ORACLE_COLUMNS);
    }
    w.write_record(&header)?;
    for rec in &outcome.report.records {
        let mut row = vec![
            rec.k.to_string(),
            num(rec.rel_residue),
            num(rec.f),
            num(rec.g),
            num(rec.a_tilde),
        ];
        match &rec.estimate {
            Some(e) => row.extend([
                num(e.gauss_lower),
                num(e.radau_upper),
                num(e.radau_lower),
                num(e.lobatto_upper),
                num(e.rel_anorm_upper),
                num(e.l2_estimate),
                num(e.rel_l2_estimate),
                e.failed.to_string(),
                e.k_current.to_string(),
                num(e.a_used),
                num(e.b_used),
            ]),
            None => row.extend(std::iter::repeat(String::new()).take(11)),
        }
        if let Some(o) = &outcome.oracle {
            let t = rec.truth.ok_or_else(|| anyhow!("missing true errors at k = {}", rec.k))?;
            let tsq = t.anorm * t.anorm;
            let v = rec
                .estimate
                .as_ref()
                .map(|e| violations(e, tsq, rounding_allowance(outcome.n, tsq, o.x_anorm)));
            row.extend([
                num(tsq),
                num(t.rel_anorm),
                num(t.l2 * t.l2),
                num(t.rel_l2),
                num(rec.rel_residue),
                num(outcome.residue_anorm.get(rec.k).copied().unwrap_or(f64::NAN)),
                v.map_or(String::new(), |v| v.to_string()),
            ]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), num)
}

pub fn summary(outcome: &SolveOutcome) -> String {
    let r = &outcome.report;
    let flagged = r.estimates().filter(|e| !e.failed.is_empty()).count();
    let mut s = format!(
        "iterations: {}\nstop reason: {}\nrelative residue: {}\nflagged estimates: {flagged}\ndelta metric: {}\nbeta metric: {}\n",
        r.iterations,
        r.stop_reason,
        num(r.records.last().map_or(1.0, |x| x.rel_residue)),
        opt(outcome.delta_metric()),
        opt(outcome.beta_metric()),
    );
    if let Some(o) = &outcome.oracle {
        let violated = r
            .estimates()
            .filter(|e| {
                outcome.truth(e.k_estimated).is_some_and(|t| {
                    let tsq = t.anorm * t.anorm;
                    !violations(e, tsq, rounding_allowance(outcome.n, tsq, o.x_anorm)).is_empty()
                })
            })
            .count();
        let last = outcome.truth(r.iterations).map(|t| t.rel_anorm);
        s += &format!(
            "lambda_min: {}\nlambda_max: {}\ntrue relative A-norm error: {}\nestimates violating the truth: {violated}\n",
            num(o.lambda_min),
            num(o.lambda_max),
            opt(last),
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
}

impl fmt::Display for SpectrumReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "lambda_min: {:e}", self.lambda_min)?;
        writeln!(f, "lambda_max: {:e}", self.lambda_max)?;
        writeln!(f, "kappa: {:e}", self.kappa)
    }
}

pub fn spectrum(a: &CsrMatrix) -> Result<SpectrumReport> {
    let dense = DenseSym::from_csr(a)?;
    let (lambda_min, lambda_max) = spectrum_bounds(&dense);
    Ok(SpectrumReport {
        n: a.n(),
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
    })
}

/// Where one stopping rule would have stopped the shared run.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionStop {
    pub criterion: Criterion,
    pub stop: Option<usize>,
    pub rel_residue: f64,
    pub truth: Option<TrueErrors>,
}

/// The shared run for [`compare`]: residue-driven, well past `tol`, with
/// the true errors recorded when the matrix is small enough.
pub fn compare_config(cfg: &RunConfig, n: usize) -> RunConfig {
    RunConfig {
        criterion: Criterion::RelResidue,
        tol: (cfg.tol * 1e-4).max(1e-14),
        validate: n <= krylov_certify::oracle::ORACLE_LIMIT,
        ..cfg.clone()
    }
}

/// Replays each criterion against the trace: at iteration `k` a rule sees
/// the residue of `k` and the estimate for `k − delay`, as the solver does.
pub fn compare(outcome: &SolveOutcome, criteria: &[Criterion], tol: f64, delay: usize) -> Vec<CriterionStop> {
    let r = &outcome.report;
    criteria
        .iter()
        .map(|&criterion| {
            let hit = (1..=r.iterations).find(|&k| {
                let latest = (k >= delay)
                    .then(|| r.estimate_for(k - delay))
                    .flatten()
                    .filter(|e| e.k_current == k);
                let rel_residue = r.records[k - 1].rel_residue;
                rel_residue == 0.0 || stopping_check(latest, rel_residue, criterion, tol)
            });
            let stop = hit.or((r.stop_reason == StopReason::ExactResidual).then_some(r.iterations));
            CriterionStop {
                criterion,
                stop,
                rel_residue: stop
                    .and_then(|k| r.records.get(k.checked_sub(1)?))
                    .map_or(f64::NAN, |x| x.rel_residue),
                truth: stop.and_then(|k| outcome.truth(k)),
            }
        })
        .collect()
}

pub fn format_compare(rows: &[CriterionStop]) -> String {
    let mut s = format!(
        "{:<12} {:>8} {:>14} {:>14} {:>14}\n",
        "criterion", "stop_k", "rel_residue", "true_rel_anorm", "true_rel_l2"
    );
    for row in rows {
        let stop = row.stop.map_or_else(|| "never".to_string(), |k| k.to_string());
        let (ta, tl) = row
            .truth
            .map_or(("n/a".to_string(), "n/a".to_string()), |t| (num(t.rel_anorm), num(t.rel_l2)));
        s += &format!(
            "{:<12} {:>8} {:>14} {:>14} {:>14}\n",
            row.criterion.name(),
            stop,
            num(row.rel_residue),
            ta,
            tl
        );
    }
    s
}
