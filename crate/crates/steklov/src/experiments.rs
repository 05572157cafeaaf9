//! Experiment runner: kernel certification batches, reconstruction exports,
//! convergence ladders (sup-norm, Luxemburg, modular), and
//! modular-inequality audits, with deterministic CSV/JSON persistence.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelCertificate};
use crate::operator::{default_grid, SteklovOperator, SteklovParams};
use crate::orlicz::{
    check_modular_inequality, find_modular_lambda, luxemburg_norm, modular, InequalityReport,
    InequalityVerdict, Modular, PhiFunction,
};
use crate::quad::QuadratureSpec;
use crate::signals::Signal;

/// Schema tag embedded in every persisted report.
pub const SCHEMA_VERSION: u32 = 1;

/// Depth of the geometric λ ladder used by the "auto" resolution.
pub const LAMBDA_LADDER_BUDGET: u32 = 40;

/// Relative tolerance for Luxemburg-norm bisection inside experiments.
pub const LUX_REL_TOL: f64 = 1e-8;

/// λ is either fixed or resolved from the membership ladder with the
/// `(2^r - 1) M_0(χ)` safety factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Value(f64),
    Auto(AutoTag),
}

/// The literal string `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Auto(AutoTag::Auto)
    }
}

impl LambdaSpec {
    /// Resolves to a concrete λ. "auto" probes `I^φ[λ̄ f]` down the
    /// geometric ladder and divides the largest finite λ̄ by
    /// `(2^r - 1) M_0(χ)`, so the resolved λ always satisfies the
    /// inequality precondition `λ (2^r - 1) M_0(χ) <= λ̄`.
    pub fn resolve(
        &self,
        phi: &PhiFunction,
        f: &Signal,
        kernel: &Kernel,
        r: u32,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        match self {
            LambdaSpec::Value(v) => {
                if !(*v > 0.0) {
                    return Err(Error::Config("lambda must be > 0".into()));
                }
                Ok(*v)
            }
            LambdaSpec::Auto(_) => {
                let bar = find_modular_lambda(
                    phi,
                    |x| f.eval(x),
                    &f.breakpoints,
                    LAMBDA_LADDER_BUDGET,
                    spec,
                )?
                .ok_or_else(|| {
                    Error::Membership(format!(
                        "signal '{}' has no finite modular for {} down to 2^-{LAMBDA_LADDER_BUDGET}",
                        f.id(),
                        phi.id()
                    ))
                })?;
                let m0 = kernel.m0()?;
                Ok(bar / ((2f64.powi(r as i32) - 1.0) * m0))
            }
        }
    }
}

fn default_w_ladder() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0, 64.0]
}

fn default_grid_points() -> usize {
    401
}

/// Evaluation grid: `points` equispaced nodes, by default on
/// `[-B - 1, B + 1]` where `B` is the signal's support bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: default_grid_points(), x_min: None, x_max: None }
    }
}

impl GridSpec {
    pub fn build(&self, f: &Signal) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        match (self.x_min, self.x_max) {
            (Some(a), Some(b)) => {
                if !(b > a) {
                    return Err(Error::Config("grid needs x_max > x_min".into()));
                }
                let n = self.points;
                Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            }
            (None, None) => {
                let b = f.support_bound.ok_or_else(|| {
                    Error::Config(format!(
                        "signal '{}' has unbounded support; give the grid explicit bounds",
                        f.id()
                    ))
                })?;
                Ok(default_grid(b, self.points))
            }
            _ => Err(Error::Config("give both x_min and x_max or neither".into())),
        }
    }
}

/// One convergence run: signal × kernel × φ × r over a ladder of rates w.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: String,
    pub kernel: String,
    pub phi: String,
    pub r: u32,
    #[serde(default = "default_w_ladder")]
    pub w_ladder: Vec<f64>,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: QuadratureSpec,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Option<ReportFormat>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r < 1 {
            return Err(Error::Config("r must be >= 1".into()));
        }
        for pair in self.w_ladder.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Config("w_ladder must be strictly increasing".into()));
            }
        }
        for &w in &self.w_ladder {
            if w < self.r as f64 {
                return Err(Error::Config(format!(
                    "w = {w} violates the w >= r requirement (r = {})",
                    self.r
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// One w of the ladder. `quad_error` aggregates the coefficient quadrature
/// error and the achieved error of the modular integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub w: f64,
    pub sup_error: f64,
    pub lux_error: f64,
    pub modular_error: f64,
    pub lambda: f64,
    pub tail_bound: f64,
    pub quad_error: f64,
}

/// Ladder verdicts, computed from the reported rows only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub kernel_certified: bool,
    pub sup_decreasing: bool,
    pub lux_decreasing: bool,
    pub modular_decreasing: bool,
    /// last/first ratios; 0 when both endpoints vanish.
    pub sup_ratio: f64,
    pub lux_ratio: f64,
    pub modular_ratio: f64,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.kernel_certified && self.sup_decreasing && self.lux_decreasing && self.modular_decreasing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub signal: String,
    pub kernel: String,
    pub phi: String,
    pub r: u32,
    pub rows: Vec<ConvergenceRow>,
    pub verdicts: Verdicts,
}

/// "Decrease within reported numerical error": each step may exceed the
/// previous value by at most the two rows' error budgets.
fn decreasing_within_error(values: &[f64], errors: &[f64]) -> bool {
    values.windows(2).zip(errors.windows(2)).all(|(v, e)| {
        let slack = e[0].max(0.0) + e[1].max(0.0) + 1e-12;
        v[1] <= v[0] + slack
    })
}

fn last_over_first(values: &[f64]) -> f64 {
    match (values.first(), values.last()) {
        (Some(&a), Some(&b)) if a != 0.0 => b / a,
        (Some(_), Some(&b)) if b == 0.0 => 0.0,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => f64::NAN,
    }
}

/// Tolerances for the certification precondition of a convergence run.
/// Looser than the acceptance-grade defaults: this is a sanity gate, not
/// the certification experiment itself.
pub const PRECONDITION_TOL_POU: f64 = 1e-4;
pub const PRECONDITION_TOL_FT: f64 = 1e-4;
pub const PRECONDITION_K_FT: i64 = 3;

/// Runs the full ladder. A kernel that fails certification still produces
/// rows (the data documents the failure) but flips the certification
/// verdict, which the CLI maps to a verdict-failure exit.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let f = Signal::from_spec(&config.signal)?;
    let kernel = Kernel::from_id(&config.kernel)?;
    let phi = PhiFunction::from_id(&config.phi)?;
    let spec = &config.tolerances;

    let certificate =
        kernel.certify(PRECONDITION_TOL_POU, PRECONDITION_TOL_FT, PRECONDITION_K_FT, spec)?;

    let lambda = config.lambda.resolve(&phi, &f, &kernel, config.r, spec)?;
    let grid = config.grid.build(&f)?;

    let mut rows = Vec::with_capacity(config.w_ladder.len());
    for &w in &config.w_ladder {
        let params = SteklovParams::new(config.r, w)?;
        let op = SteklovOperator::new(&f, params, &kernel, spec)?;
        let values = op.eval_grid(&grid);

        let sup_error = grid
            .iter()
            .zip(&values)
            .filter(|(x, _)| f.is_continuous_at(**x))
            .map(|(x, v)| (v - f.eval(*x)).abs())
            .fold(0.0f64, f64::max);

        let err = |x: f64| op.eval(x) - f.eval(x);
        let lux_error = luxemburg_norm(&phi, err, &f.breakpoints, LUX_REL_TOL, spec)?;
        let m = modular(&phi, err, lambda, &f.breakpoints, spec)?;
        let (modular_error, modular_quad_error) = match m.value {
            Modular::Finite(v) => (v, m.achieved_error),
            Modular::Infinite => (f64::INFINITY, 0.0),
        };

        rows.push(ConvergenceRow {
            w,
            sup_error,
            lux_error,
            modular_error,
            lambda,
            tail_bound: op.tail_bound(),
            quad_error: op.quadrature_error() + modular_quad_error,
        });
    }

    let sup: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    let lux: Vec<f64> = rows.iter().map(|r| r.lux_error).collect();
    let md: Vec<f64> = rows.iter().map(|r| r.modular_error).collect();
    let qe: Vec<f64> = rows.iter().map(|r| r.quad_error).collect();
    let verdicts = Verdicts {
        kernel_certified: certificate.partition_of_unity_ok,
        sup_decreasing: decreasing_within_error(&sup, &qe),
        lux_decreasing: decreasing_within_error(&lux, &qe),
        modular_decreasing: decreasing_within_error(&md, &qe),
        sup_ratio: last_over_first(&sup),
        lux_ratio: last_over_first(&lux),
        modular_ratio: last_over_first(&md),
    };

    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        signal: config.signal.clone(),
        kernel: config.kernel.clone(),
        phi: config.phi.clone(),
        r: config.r,
        rows,
        verdicts,
    })
}

/// One modular-inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub signal: String,
    pub kernel: String,
    pub phi: String,
    pub r: u32,
    pub w: f64,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub tolerances: QuadratureSpec,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub checks: Vec<InequalityReport>,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    /// True iff no check failed; inconclusive checks are reported, not failed.
    pub all_pass: bool,
}

pub fn run_inequality_audit(configs: &[AuditConfig]) -> Result<AuditReport> {
    let mut checks = Vec::with_capacity(configs.len());
    for cfg in configs {
        let f = Signal::from_spec(&cfg.signal)?;
        let kernel = Kernel::from_id(&cfg.kernel)?;
        let phi = PhiFunction::from_id(&cfg.phi)?;
        let params = SteklovParams::new(cfg.r, cfg.w)?;
        let lambda = cfg.lambda.resolve(&phi, &f, &kernel, cfg.r, &cfg.tolerances)?;
        checks.push(check_modular_inequality(&phi, &f, &kernel, params, lambda, &cfg.tolerances)?);
    }
    let passed = checks.iter().filter(|c| c.verdict == InequalityVerdict::Pass).count();
    let failed = checks.iter().filter(|c| c.verdict == InequalityVerdict::Fail).count();
    let inconclusive = checks.len() - passed - failed;
    Ok(AuditReport {
        schema_version: SCHEMA_VERSION,
        passed,
        failed,
        inconclusive,
        all_pass: failed == 0,
        checks,
    })
}

/// Certifies each kernel id in turn.
pub fn run_certify(
    ids: &[String],
    tol_pou: f64,
    tol_ft: f64,
    k_ft: i64,
    spec: &QuadratureSpec,
) -> Result<Vec<KernelCertificate>> {
    ids.iter()
        .map(|id| Kernel::from_id(id)?.certify(tol_pou, tol_ft, k_ft, spec))
        .collect()
}

/// Fixed-width scientific notation so equal values are equal bytes.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with the documented column order; one row per ladder entry.
pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("w,sup_error,lux_error,modular_error,lambda,tail_bound,quad_error\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(row.w),
            fmt_f64(row.sup_error),
            fmt_f64(row.lux_error),
            fmt_f64(row.modular_error),
            fmt_f64(row.lambda),
            fmt_f64(row.tail_bound),
            fmt_f64(row.quad_error),
        ));
    }
    out
}

pub fn report_json(report: &ConvergenceReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn write_report(report: &ConvergenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let body = match format {
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Json => report_json(report)?,
    };
    let mut file = std::fs::File::create(path)?;
    file.write_all(body.as_bytes())?;
    Ok(())
}

/// Reconstruction export: `x, S_w^r f(x), f(x), abs_error` per grid point.
pub fn reconstruction_csv(
    f: &Signal,
    kernel: &Kernel,
    params: SteklovParams,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<String> {
    let op = SteklovOperator::new(f, params, kernel, spec)?;
    let values = op.eval_grid(grid);
    let mut out = String::from("x,reconstruction,signal,abs_error\n");
    for (x, v) in grid.iter().zip(&values) {
        let fx = f.eval(*x);
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(*x),
            fmt_f64(*v),
            fmt_f64(fx),
            fmt_f64((v - fx).abs()),
        ));
    }
    Ok(out)
}
