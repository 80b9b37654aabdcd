//! Experiment configuration: one JSON document, unknown keys rejected,
//! everything but the seed defaulted.

use std::path::PathBuf;

use clap::ValueEnum;
use pagc_core::exec::Execution;
use pagc_core::ibrw::gw::OffspringLaw;
use pagc_core::ibrw::{RootLocation, StopPolicy};
use pagc_core::netgen::GenMode;
use pagc_core::rules::{AttachmentRule, RuleFamily};
use pagc_core::spine::fit::FitMode;
use pagc_core::validation::CheckBudget;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Graph,
    Ibrw,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

impl From<ExecMode> for Execution {
    fn from(m: ExecMode) -> Self {
        match m {
            ExecMode::Parallel => Execution::Parallel,
            ExecMode::Sequential => Execution::Sequential,
        }
    }
}

/// Monotone families approaching a limit rule as `t -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    LinearBeta { gamma: f64, beta_limit: f64, offset: f64 },
    LinearGamma { beta: f64, gamma_limit: f64, offset: f64 },
}

impl FamilySpec {
    pub fn family(&self) -> RuleFamily {
        match *self {
            FamilySpec::LinearBeta { gamma, beta_limit, offset } => RuleFamily::linear_beta(gamma, beta_limit, offset),
            FamilySpec::LinearGamma { beta, gamma_limit, offset } => RuleFamily::linear_gamma(beta, gamma_limit, offset),
        }
    }

    pub fn limit(&self) -> AttachmentRule {
        match *self {
            FamilySpec::LinearBeta { gamma, beta_limit, .. } => AttachmentRule::linear(gamma, beta_limit),
            FamilySpec::LinearGamma { beta, gamma_limit, .. } => AttachmentRule::linear(gamma_limit, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Poisson(f64),
    Deterministic(u64),
    Pmf { pmf: Vec<f64>, tail: f64 },
}

impl LawSpec {
    pub fn law(&self) -> pagc_core::error::Result<OffspringLaw> {
        match self {
            LawSpec::Poisson(l) => OffspringLaw::poisson(*l),
            LawSpec::Deterministic(k) => Ok(OffspringLaw::deterministic(*k)),
            LawSpec::Pmf { pmf, tail } => OffspringLaw::general(pmf.clone(), *tail),
        }
    }

    pub fn label(&self) -> String {
        match self {
            LawSpec::Poisson(l) => format!("poisson({l})"),
            LawSpec::Deterministic(k) => format!("deterministic({k})"),
            LawSpec::Pmf { pmf, tail } => format!("pmf(len={}, tail={tail})", pmf.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwConfig {
    pub laws: Vec<LawSpec>,
    pub r_grid: Vec<f64>,
    pub growth_law: LawSpec,
    pub theta1: f64,
    pub theta2: f64,
    pub n_max: u32,
    pub replicas: usize,
}

impl Default for GwConfig {
    fn default() -> Self {
        GwConfig {
            laws: vec![LawSpec::Poisson(1.5), LawSpec::Poisson(2.0), LawSpec::Poisson(5.0)],
            r_grid: vec![0.001, 0.01, 0.05, 0.1, 0.125],
            growth_law: LawSpec::Poisson(20.0),
            theta1: 2.0,
            theta2: 0.5,
            n_max: 8,
            replicas: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TubeWalk {
    /// Gaussian increments with standard deviation `sigma`.
    #[default]
    Gaussian,
    /// The spine of the configured (affine) rule at `alpha`.
    Spine { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeConfig {
    pub width: f64,
    pub k: usize,
    pub sigma: f64,
    pub population: usize,
    pub runs: usize,
    pub walk: TubeWalk,
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig { width: 1.5, k: 2500, sigma: 1.0, population: 2000, runs: 10, walk: TubeWalk::Gaussian }
    }
}

fn default_rule() -> AttachmentRule {
    AttachmentRule::linear(0.0, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// If present, must name the command being run.
    pub command: Option<String>,
    pub master_seed: Option<u64>,
    pub rule: AttachmentRule,
    pub family: Option<FamilySpec>,
    pub p_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Explicit alpha values; when empty an interior grid of `alpha_points` is used.
    pub alpha_grid: Vec<f64>,
    pub alpha_points: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub n: u32,
    pub replicas: usize,
    pub ibrw_replicas: usize,
    pub pop_cap: usize,
    pub max_gen: u32,
    pub survival_floor: usize,
    pub root: RootLocation,
    pub gen_mode: GenMode,
    pub engine: Engine,
    pub fit_mode: FitMode,
    pub tol: f64,
    pub execution: ExecMode,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    /// Edge list read by `percolate` instead of growing a graph.
    pub graph_input: Option<PathBuf>,
    /// Theta CSV read by `fit-decay` instead of simulating.
    pub theta_input: Option<PathBuf>,
    pub gw: GwConfig,
    pub tube: TubeConfig,
    pub checks: CheckBudget,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            master_seed: None,
            rule: default_rule(),
            family: None,
            p_grid: vec![0.6, 0.7, 0.8, 0.9, 1.0],
            t_grid: vec![1.0, 2.0, 4.0, 8.0],
            alpha_grid: Vec::new(),
            alpha_points: 41,
            gammas: (0..10).map(|i| 0.05 * i as f64).collect(),
            betas: (1..=10).map(|i| 0.025 * i as f64).collect(),
            n: 10_000,
            replicas: 200,
            ibrw_replicas: 10_000,
            pop_cap: StopPolicy::default().pop_cap,
            max_gen: StopPolicy::default().max_gen,
            survival_floor: StopPolicy::default().survival_floor,
            root: RootLocation::Exponential,
            gen_mode: GenMode::Fast,
            engine: Engine::Graph,
            fit_mode: FitMode::Percolation,
            tol: 1e-10,
            execution: ExecMode::Parallel,
            threads: None,
            output: None,
            graph_input: None,
            theta_input: None,
            gw: GwConfig::default(),
            tube: TubeConfig::default(),
            checks: CheckBudget::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        serde_json::from_slice(bytes).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.expect("validated")
    }

    pub fn stop_policy(&self) -> StopPolicy {
        StopPolicy { max_gen: self.max_gen, pop_cap: self.pop_cap, survival_floor: self.survival_floor }
    }

    pub fn exec(&self) -> Execution {
        self.execution.into()
    }

    /// SHA-256 of the canonical serialisation of the effective config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Checks everything `command` will touch, before any work starts.
    pub fn validate(&self, command: &str) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(c) = &self.command {
            if c != command {
                return bad(format!("config is for command {c:?}, not {command:?}"));
            }
        }
        if self.master_seed.is_none() {
            return bad("master_seed missing (set it in the config or pass --seed)".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        // `checks` reports an invalid rule as a failed check instead
        if command != "checks" {
            self.rule.check().map_err(|e| CliError::Config(format!("rule: {e}")))?;
        }
        let probs = |name: &str, g: &[f64]| -> Result<(), CliError> {
            if g.is_empty() {
                return Err(CliError::Config(format!("{name} is empty")));
            }
            if let Some(p) = g.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(CliError::Config(format!("{name} value {p} outside [0, 1]")));
            }
            Ok(())
        };
        match command {
            "spectral-table" if self.alpha_grid.is_empty() && self.alpha_points < 3 => {
                bad("alpha_points must be at least 3 when alpha_grid is empty".into())
            }
            "critical-line" if self.gammas.is_empty() && self.betas.is_empty() => {
                bad("gammas and betas are both empty".into())
            }
            "generate-graph" if self.n == 0 => bad("n must be positive".into()),
            "percolate" => {
                probs("p_grid", &self.p_grid)?;
                if self.graph_input.is_none() && self.n == 0 {
                    return bad("n must be positive".into());
                }
                Ok(())
            }
            "theta-curve" => {
                probs("p_grid", &self.p_grid)?;
                if self.n == 0 || self.replicas < 2 || self.ibrw_replicas == 0 {
                    return bad("need n >= 1, replicas >= 2 and ibrw_replicas >= 1".into());
                }
                Ok(())
            }
            "fit-decay" => match self.fit_mode {
                FitMode::Percolation if self.theta_input.is_none() => probs("p_grid", &self.p_grid),
                FitMode::Family if self.family.is_none() => bad("family fit needs a family".into()),
                FitMode::Family if self.theta_input.is_none() && self.t_grid.is_empty() => bad("t_grid is empty".into()),
                _ => Ok(()),
            },
            "gw-check" if self.gw.laws.is_empty() || self.gw.r_grid.is_empty() => bad("gw laws or r_grid empty".into()),
            "mogulskii-check" if !(self.tube.width > 0.0) || self.tube.k == 0 || !(self.tube.sigma > 0.0) => {
                bad("tube needs width > 0, k >= 1 and sigma > 0".into())
            }
            _ => Ok(()),
        }
    }
}
