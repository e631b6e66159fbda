use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use sdot_core::laguerre::{sup_norm, unregularized_residual};
use sdot_core::model::build_problem;
use sdot_core::newton::{fixed_t_oracle, newton_1d, NEWTON_MAX_ITER, NEWTON_TOL, ORACLE_TOL};
use sdot_core::{build_grid, default_resolution, integrate_homotopy, rk3_tableau};
use sdot_core::{HomotopyOptions, NewtonReport, ProblemSpec, QuadratureGrid, Variant};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Time at which the fixed-`t` oracle stands in for Newton where no exact
/// 1-D geometry is available.
pub const SURROGATE_T: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    /// `newton_1d` or `fixed_t_oracle_surrogate`.
    pub kind: String,
    #[serde(flatten)]
    pub report: NewtonReport,
    /// Sup-norm of the unregularized residual at the baseline's `psi`.
    pub error_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub dt: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: Option<u64>,
    pub error_sup: f64,
    pub runtime_seconds: f64,
    /// Runtimes cover the time loop and the terminal residual only.
    pub runtime_convention: String,
    pub psi_final: Vec<f64>,
    pub residual: Vec<f64>,
    pub targets: Vec<Vec<f64>>,
    pub newton_baseline: Option<BaselineReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub n: usize,
    pub dt: f64,
    pub result: Result<RunReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cells: Vec<CellOutcome>,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }
}

pub fn grid_for(cfg: &ExperimentConfig, problem: &ProblemSpec) -> Result<QuadratureGrid, CliError> {
    let (p, o) = default_resolution(problem.dim());
    build_grid(problem.domain(), cfg.quad_panels.unwrap_or(p), cfg.quad_order.unwrap_or(o))
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn homotopy_options(cfg: &ExperimentConfig, dt: f64) -> Result<HomotopyOptions, CliError> {
    let tableau = rk3_tableau(cfg.alpha, cfg.beta).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(HomotopyOptions {
        dt,
        tableau,
        snapshot_times: cfg.snapshot_times.clone(),
        boost_after: cfg.boost_after,
        boost_factor: cfg.boost_factor,
    })
}

/// File stem shared by all outputs of one cell.
pub fn cell_stem(variant: Variant, dim: usize, n: usize, dt: f64) -> String {
    format!("{}_d{dim}_N{n}_dt{dt}", variant.name())
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn baseline(problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<BaselineReport, String> {
    let exact_1d = problem.dim() == 1 && problem.cost().is_quadratic() && problem.variant() != Variant::P4;
    let (kind, report) = if exact_1d {
        let r = newton_1d(problem, &vec![0.0; problem.n()], NEWTON_TOL, NEWTON_MAX_ITER, grid).map_err(|e| e.to_string())?;
        ("newton_1d", r)
    } else {
        let r = fixed_t_oracle(problem, SURROGATE_T, ORACLE_TOL, grid, None).map_err(|e| e.to_string())?;
        ("fixed_t_oracle_surrogate", r)
    };
    let error_sup = if report.psi.iter().all(|v| v.is_finite()) {
        unregularized_residual(problem, &report.psi, grid).map_or(f64::NAN, |r| sup_norm(&r))
    } else {
        f64::NAN
    };
    Ok(BaselineReport {
        kind: kind.into(),
        report,
        error_sup,
    })
}

fn run_cell(cfg: &ExperimentConfig, n: usize, dt: f64, out: &Path, files: &mut Vec<PathBuf>) -> Result<RunReport, CliError> {
    let pcfg = cfg.problem_for(n);
    let problem = build_problem(&pcfg).map_err(|e| CliError::Config(e.to_string()))?;
    let grid = grid_for(cfg, &problem)?;
    let options = homotopy_options(cfg, dt)?;
    let stem = cell_stem(problem.variant(), problem.dim(), problem.n(), dt);
    let traj = integrate_homotopy(&problem, &grid, &options).map_err(|e| CliError::Solver(e.to_string()))?;
    write(out.join(format!("{stem}_trajectory.csv")), &traj.to_csv(), files)?;
    for field in &traj.snapshots {
        write(out.join(format!("{stem}_snapshot_t{}.csv", field.t)), &field.to_csv(), files)?;
    }
    let newton_baseline = if cfg.run_newton_baseline {
        match baseline(&problem, &grid) {
            Ok(b) => Some(b),
            Err(e) => {
                warn!("{stem}: baseline failed: {e}");
                None
            }
        }
    } else {
        None
    };
    let dim = problem.dim();
    let report = RunReport {
        variant: problem.variant(),
        n: problem.n(),
        dim,
        dt,
        alpha: cfg.alpha,
        beta: cfg.beta,
        seed: pcfg.seed,
        error_sup: traj.report.error_sup,
        runtime_seconds: traj.report.runtime_seconds,
        runtime_convention: "solver-only".into(),
        psi_final: traj.report.psi.clone(),
        residual: traj.report.residual.clone(),
        targets: problem.targets().points().iter().map(|p| p[..dim].to_vec()).collect(),
        newton_baseline,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write(out.join(format!("{stem}_report.json")), &json, files)?;
    Ok(report)
}

/// Table with rows `dt` and columns `N`.
fn table(cfg: &ExperimentConfig, cells: &[CellOutcome], cell: impl Fn(&CellOutcome) -> String) -> String {
    let mut s = String::from("dt");
    for n in &cfg.n_list {
        s += &format!(",N={n}");
    }
    s.push('\n');
    for &dt in &cfg.dt_list {
        s += &format!("{dt}");
        for &n in &cfg.n_list {
            let c = cells.iter().find(|c| c.n == n && c.dt == dt).map_or("NAN".to_string(), &cell);
            s += &format!(",{c}");
        }
        s.push('\n');
    }
    s
}

/// Run every `(dt, N)` cell. Solver failures become `NAN` summary cells;
/// configuration and IO errors abort.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    let mut cells = Vec::new();
    for &dt in &cfg.dt_list {
        for &n in &cfg.n_list {
            let result = match run_cell(cfg, n, dt, out, &mut files) {
                Ok(r) => {
                    info!("N = {n}, dt = {dt}: error {:.3e} in {:.2} s", r.error_sup, r.runtime_seconds);
                    Ok(r)
                }
                Err(CliError::Solver(msg)) => {
                    warn!("N = {n}, dt = {dt}: {msg}");
                    Err(msg)
                }
                Err(e) => return Err(e),
            };
            cells.push(CellOutcome { n, dt, result });
        }
    }
    let summary = table(cfg, &cells, |c| match &c.result {
        Ok(r) if r.error_sup.is_finite() => format!("{:e} ({:.3}s)", r.error_sup, r.runtime_seconds),
        _ => "NAN".into(),
    });
    write(out.join("summary.csv"), &summary, &mut files)?;
    if cfg.run_newton_baseline {
        let newton = table(cfg, &cells, |c| match &c.result {
            Ok(RunReport {
                newton_baseline: Some(b),
                ..
            }) if b.report.converged && b.error_sup.is_finite() => {
                format!("{:e} ({} it)", b.error_sup, b.report.iterations)
            }
            _ => "NAN".into(),
        });
        write(out.join("summary_newton.csv"), &newton, &mut files)?;
    }
    Ok(RunSummary { cells, files })
}
