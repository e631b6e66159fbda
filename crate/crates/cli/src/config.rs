use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sdot_core::model::{DensityConfig, ProblemConfig};
use sdot_core::ode::{step_count, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_BOOST_AFTER, DEFAULT_BOOST_FACTOR};
use sdot_core::Variant;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "sdot", version, about = "Entropic homotopy solver for semi-discrete transport problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate every (dt, N) cell and write trajectories, reports and a summary table.
    Run(RunArgs),
    /// Run the acceptance checks and list each with its measured value.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityArg {
    Uniform,
    Gauss,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    pub problem: Option<Variant>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated target counts.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    pub dt: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub density: Option<DensityArg>,
    #[arg(long = "cost-exp")]
    pub cost_exp: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "quad-panels")]
    pub quad_panels: Option<usize>,
    #[arg(long = "quad-order")]
    pub quad_order: Option<usize>,
    /// Stage times above this use a refined grid; 1 or more disables it.
    #[arg(long = "boost-after")]
    pub boost_after: Option<f64>,
    #[arg(long = "boost-factor")]
    pub boost_factor: Option<usize>,
    /// Comma-separated snapshot times on the step lattice.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    /// Also run the Newton baseline.
    #[arg(long)]
    pub newton: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_dt_list")]
    pub dt_list: Vec<f64>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub quad_panels: Option<usize>,
    #[serde(default)]
    pub quad_order: Option<usize>,
    #[serde(default = "default_boost_after")]
    pub boost_after: Option<f64>,
    #[serde(default = "default_boost_factor")]
    pub boost_factor: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub run_newton_baseline: bool,
}

fn default_n_list() -> Vec<usize> {
    vec![2]
}
fn default_dt_list() -> Vec<f64> {
    vec![0.01]
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_boost_after() -> Option<f64> {
    Some(DEFAULT_BOOST_AFTER)
}
fn default_boost_factor() -> usize {
    DEFAULT_BOOST_FACTOR
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::sampled(Variant::P1, 1, 2, 0),
            n_list: default_n_list(),
            dt_list: default_dt_list(),
            snapshot_times: Vec::new(),
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            quad_panels: None,
            quad_order: None,
            boost_after: default_boost_after(),
            boost_factor: DEFAULT_BOOST_FACTOR,
            out_dir: default_out(),
            run_newton_baseline: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Config file (if any) with command-line overrides applied.
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let p = &mut cfg.problem;
        if let Some(v) = args.problem {
            p.variant = v;
            if v == Variant::P3 && p.anchor.is_none() {
                p.anchor = Some(vec![0.5; p.dim]);
            }
            if v == Variant::P4 && p.rho.is_none() {
                p.rho = Some(DensityConfig::gauss());
            }
            if v != Variant::P3 {
                p.anchor = None;
            }
            if v != Variant::P4 {
                p.rho = None;
            }
        }
        if let Some(d) = args.dim {
            p.dim = d;
            if let Some(a) = &mut p.anchor {
                *a = vec![0.5; d];
            }
        }
        if let Some(s) = args.seed {
            p.seed = Some(s);
        }
        if let Some(d) = args.density {
            p.density = match d {
                DensityArg::Uniform => DensityConfig::uniform(),
                DensityArg::Gauss => DensityConfig::gauss(),
            };
        }
        if let Some(c) = args.cost_exp {
            p.cost_exponent = c;
        }
        if let Some(n) = &args.n {
            cfg.n_list = n.clone();
        }
        if let Some(dt) = &args.dt {
            cfg.dt_list = dt.clone();
        }
        if let Some(a) = args.alpha {
            cfg.alpha = a;
        }
        if let Some(b) = args.beta {
            cfg.beta = b;
        }
        if args.quad_panels.is_some() {
            cfg.quad_panels = args.quad_panels;
        }
        if args.quad_order.is_some() {
            cfg.quad_order = args.quad_order;
        }
        if let Some(b) = args.boost_after {
            cfg.boost_after = (b < 1.0).then_some(b);
        }
        if let Some(f) = args.boost_factor {
            cfg.boost_factor = f;
        }
        if let Some(s) = &args.snapshots {
            cfg.snapshot_times = s.clone();
        }
        if args.newton {
            cfg.run_newton_baseline = true;
        }
        if let Some(o) = &args.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(CliError::Config("target counts must be positive".into()));
        }
        if self.dt_list.is_empty() {
            return Err(CliError::Config("no step sizes given".into()));
        }
        let mut coarsest = usize::MAX;
        for &dt in &self.dt_list {
            let n = step_count(dt).map_err(|e| CliError::Config(e.to_string()))?;
            coarsest = coarsest.min(n);
        }
        for &t in &self.snapshot_times {
            let k = t * coarsest as f64;
            if !(0.0..=1.0).contains(&t) || (k - k.round()).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "snapshot time {t} is not on the coarsest step lattice (1/{coarsest})"
                )));
            }
        }
        if (self.problem.targets.is_some() || self.problem.parabola) && self.n_list.len() > 1 {
            return Err(CliError::Config("fixed target layouts cannot sweep N".into()));
        }
        Ok(())
    }

    /// Problem configuration for one sweep cell.
    pub fn problem_for(&self, n: usize) -> ProblemConfig {
        let mut p = self.problem.clone();
        p.n_targets = Some(n);
        if p.seed.is_none() && p.targets.is_none() && !p.parabola {
            p.seed = Some(0);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let args = RunArgs {
            problem: Some(Variant::P4),
            dim: Some(1),
            n: Some(vec![2, 4]),
            dt: Some(vec![0.1, 0.01]),
            snapshots: Some(vec![0.0, 0.5, 1.0]),
            ..RunArgs::default()
        };
        let c = ExperimentConfig::from_args(&args).unwrap();
        assert_eq!(c.problem.variant, Variant::P4);
        assert!(c.problem.rho.is_some());
        assert_eq!(c.n_list, vec![2, 4]);
    }

    #[test]
    fn rejects_off_lattice_snapshots_and_steps() {
        let args = RunArgs {
            dt: Some(vec![0.1, 0.01]),
            snapshots: Some(vec![0.25]),
            ..RunArgs::default()
        };
        assert!(matches!(ExperimentConfig::from_args(&args), Err(CliError::Config(_))));
        let args = RunArgs {
            dt: Some(vec![0.3]),
            ..RunArgs::default()
        };
        assert!(ExperimentConfig::from_args(&args).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&s).unwrap(), c);
        let minimal = r#"{"problem": {"variant": "p2", "dim": 1, "density": {"kind": "uniform"}}}"#;
        let c: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(c.dt_list, vec![0.01]);
    }
}
