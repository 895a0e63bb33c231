//! Random-system generation and the three experiment harnesses, emitting
//! plot-ready CSV. All runs are deterministic: every random draw is derived
//! from the config seed through counter-based streams, so results do not
//! depend on thread count or execution order.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::greedy::{greedy_schedule, GreedyConfig, SchedulerMode};
use crate::lds::{gramian, ActuatorSchedule, LinearSystem};
use crate::linalg::{trace_inverse_if_full_rank, DEFAULT_RANK_TOL};
use crate::seeding::{derive_seed, seeded_rng};
use crate::baselines::{greedy_trace_max_schedule, random_schedule};

const STREAM_GRAPH: u64 = 1;
const STREAM_INPUT: u64 = 2;
const STREAM_SCHEDULE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BMode {
    Identity,
    Uniform01,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    TimeVarying,
    TimeInvariant,
    Random,
    TraceMax,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub sparsity_levels: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub b_mode: BMode,
    pub scheduler_modes: Vec<SchedulerKind>,
    #[serde(default)]
    pub output_path: Option<String>,
    /// State dimensions swept by the energy-ratio experiment; defaults to
    /// `[n]`.
    #[serde(default)]
    pub n_values: Option<Vec<usize>>,
    /// Override for the edge probability of the random graphs; defaults to
    /// `2 ln(n) / n`.
    #[serde(default)]
    pub edge_probability: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m: 20,
            sparsity_levels: vec![5, 10, 15],
            trials: 100,
            seed: 0,
            b_mode: BMode::Identity,
            scheduler_modes: vec![
                SchedulerKind::TimeVarying,
                SchedulerKind::TimeInvariant,
                SchedulerKind::Random,
                SchedulerKind::TraceMax,
            ],
            output_path: None,
            n_values: None,
            edge_probability: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(
                "state dimension must be >= 2".into(),
            ));
        }
        if self.m < 1 {
            return Err(Error::InvalidArgument("input dimension must be >= 1".into()));
        }
        if self.sparsity_levels.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one sparsity level is required".into(),
            ));
        }
        for &s in &self.sparsity_levels {
            if s < 1 || s > self.m {
                return Err(Error::InvalidArgument(format!(
                    "sparsity level {s} outside [1, {}]",
                    self.m
                )));
            }
        }
        if let Some(values) = &self.n_values {
            if values.is_empty() || values.iter().any(|&n| n < 2) {
                return Err(Error::InvalidArgument(
                    "n_values must be nonempty with every entry >= 2".into(),
                ));
            }
        }
        if let Some(p) = self.edge_probability {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge probability {p} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Transfer matrix from a random graph on `n` vertices: each undirected edge
/// present independently with probability `2 ln(n) / n`, `A = I - L/n` with L
/// the graph Laplacian. Pair with an input matrix to form a full system.
pub fn erdos_renyi_system(n: usize, seed: u64) -> DMatrix<f64> {
    erdos_renyi_system_with_p(n, 2.0 * (n as f64).ln() / n as f64, seed)
}

pub fn erdos_renyi_system_with_p(n: usize, p: f64, seed: u64) -> DMatrix<f64> {
    assert!(n >= 2, "graph needs at least two vertices");
    assert!((0.0..=1.0).contains(&p), "edge probability outside [0, 1]");
    let mut rng = seeded_rng(seed);
    let mut laplacian = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                laplacian[(i, j)] = -1.0;
                laplacian[(j, i)] = -1.0;
                laplacian[(i, i)] += 1.0;
                laplacian[(j, j)] += 1.0;
            }
        }
    }
    DMatrix::identity(n, n) - laplacian / n as f64
}

/// Input matrix in one of three modes. Entries are drawn row-major, so the
/// layout is reproducible for a given (mode, seed).
pub fn random_input_matrix(n: usize, m: usize, mode: BMode, seed: u64) -> Result<DMatrix<f64>> {
    match mode {
        BMode::Identity => {
            if n != m {
                return Err(Error::DimensionMismatch(format!(
                    "identity input matrix requires n = m, got {n} x {m}"
                )));
            }
            Ok(DMatrix::identity(n, n))
        }
        BMode::Uniform01 => {
            let mut rng = seeded_rng(seed);
            let mut b = DMatrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    b[(i, j)] = rng.gen::<f64>();
                }
            }
            Ok(b)
        }
        BMode::Gaussian => {
            let mut rng = seeded_rng(seed);
            let mut b = DMatrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    b[(i, j)] = rng.sample(rand_distr::StandardNormal);
                }
            }
            Ok(b)
        }
    }
}

fn build_system(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<LinearSystem> {
    let graph_seed = derive_seed(cfg.seed, STREAM_GRAPH, trial as u64);
    let a = match cfg.edge_probability {
        Some(p) => erdos_renyi_system_with_p(n, p, graph_seed),
        None => erdos_renyi_system(n, graph_seed),
    };
    let b = random_input_matrix(
        n,
        cfg.m,
        cfg.b_mode,
        derive_seed(cfg.seed, STREAM_INPUT, trial as u64),
    )?;
    LinearSystem::new(a, b)
}

/// Measured energy of a schedule: `trace(W^-1)` when the scheduled Gramian is
/// full rank, `None` otherwise.
fn measure(sys: &LinearSystem, schedule: &ActuatorSchedule) -> Result<Option<f64>> {
    let g = gramian(sys, schedule, 0.0)?;
    Ok(trace_inverse_if_full_rank(g.w(), DEFAULT_RANK_TOL))
}

/// Run the greedy scheduler, keeping the best-effort schedule on rank
/// failure.
fn run_greedy(sys: &LinearSystem, s: usize, mode: SchedulerMode) -> Result<ActuatorSchedule> {
    let cfg = GreedyConfig::new(s).with_mode(mode);
    match greedy_schedule(sys, &cfg) {
        Ok((schedule, _)) => Ok(schedule),
        Err(Error::RankDeficientSchedule { schedule, .. }) => Ok(*schedule),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdfMode {
    TimeVarying,
    TimeInvariant,
    Unconstrained,
}

impl fmt::Display for CdfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CdfMode::TimeVarying => "time-varying",
            CdfMode::TimeInvariant => "time-invariant",
            CdfMode::Unconstrained => "unconstrained",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CdfRow {
    pub trial: usize,
    pub s: usize,
    pub mode: CdfMode,
    /// `10 log10(trace(W^-1))`; absent for rank-deficient outcomes.
    pub value_db: Option<f64>,
    pub rank_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CdfTable {
    pub rows: Vec<CdfRow>,
}

impl CdfTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,s,mode,value_db,rank_ok\n");
        for r in &self.rows {
            let value = r.value_db.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.trial, r.s, r.mode, value, r.rank_ok
            ));
        }
        out
    }
}

/// Energy distribution experiment: per trial, per sparsity level, the
/// scheduled energy in dB for the time-varying, time-invariant (when
/// enabled), and unconstrained (s = m, time-varying) schedulers.
pub fn run_cdf_experiment(cfg: &ExperimentConfig) -> Result<CdfTable> {
    cfg.validate()?;
    let with_tv = cfg.scheduler_modes.contains(&SchedulerKind::TimeVarying);
    let with_ti = cfg.scheduler_modes.contains(&SchedulerKind::TimeInvariant);
    let per_trial: Result<Vec<Vec<CdfRow>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let sys = build_system(cfg, cfg.n, trial)?;
            let unconstrained =
                measure(&sys, &run_greedy(&sys, cfg.m, SchedulerMode::TimeVarying)?)?;
            let mut rows = Vec::new();
            for &s in &cfg.sparsity_levels {
                if with_tv {
                    let value = if s == cfg.m {
                        unconstrained
                    } else {
                        measure(&sys, &run_greedy(&sys, s, SchedulerMode::TimeVarying)?)?
                    };
                    rows.push(row(trial, s, CdfMode::TimeVarying, value));
                }
                if with_ti {
                    let value = if s == cfg.m {
                        unconstrained
                    } else {
                        measure(&sys, &run_greedy(&sys, s, SchedulerMode::TimeInvariant)?)?
                    };
                    rows.push(row(trial, s, CdfMode::TimeInvariant, value));
                }
                rows.push(row(trial, s, CdfMode::Unconstrained, unconstrained));
            }
            Ok(rows)
        })
        .collect();
    Ok(CdfTable {
        rows: per_trial?.into_iter().flatten().collect(),
    })
}

fn row(trial: usize, s: usize, mode: CdfMode, trace_inv: Option<f64>) -> CdfRow {
    CdfRow {
        trial,
        s,
        mode,
        value_db: trace_inv.map(|v| 10.0 * v.log10()),
        rank_ok: trace_inv.is_some(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub s: usize,
    pub s_over_m: f64,
    /// mean trace(W_S^-1) / mean trace(W^-1); absent when no trial produced
    /// a full-rank Gramian on either side.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
}

impl RatioTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,s,s_over_m,rho\n");
        for r in &self.rows {
            let rho = r.rho.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", r.n, r.s, r.s_over_m, rho));
        }
        out
    }
}

/// Energy-ratio experiment: for each state dimension and sparsity level, the
/// ratio of the mean constrained energy to the mean fully-actuated energy.
/// At s = m the constrained schedule is the full schedule, so the ratio is
/// exactly 1 by construction.
pub fn run_energy_ratio_experiment(cfg: &ExperimentConfig) -> Result<RatioTable> {
    cfg.validate()?;
    let n_list = cfg.n_values.clone().unwrap_or_else(|| vec![cfg.n]);
    let mut rows = Vec::new();
    for &n in &n_list {
        let per_trial: Result<Vec<(Option<f64>, Vec<Option<f64>>)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let sys = build_system(cfg, n, trial)?;
                let full_value = measure(&sys, &ActuatorSchedule::full(n, cfg.m))?;
                let mut per_level = Vec::with_capacity(cfg.sparsity_levels.len());
                for &s in &cfg.sparsity_levels {
                    let value = if s == cfg.m {
                        full_value
                    } else {
                        measure(&sys, &run_greedy(&sys, s, SchedulerMode::TimeVarying)?)?
                    };
                    if let (Some(v), Some(f)) = (value, full_value) {
                        if v < f * (1.0 - 1e-9) {
                            return Err(Error::NumericalBreakdown(format!(
                                "constrained energy {v} fell below the fully-actuated energy {f}"
                            )));
                        }
                    }
                    per_level.push(value);
                }
                Ok((full_value, per_level))
            })
            .collect();
        let per_trial = per_trial?;
        let full_mean = mean(per_trial.iter().filter_map(|(f, _)| *f));
        for (idx, &s) in cfg.sparsity_levels.iter().enumerate() {
            let level_mean = mean(per_trial.iter().filter_map(|(_, v)| v[idx]));
            let rho = match (level_mean, full_mean) {
                (Some(num), Some(den)) => Some(num / den),
                _ => None,
            };
            rows.push(RatioRow {
                n,
                s,
                s_over_m: s as f64 / cfg.m as f64,
                rho,
            });
        }
    }
    Ok(RatioTable { rows })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    Greedy,
    GreedyTi,
    Random,
    TraceMax,
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BaselineMethod::Greedy => "greedy",
            BaselineMethod::GreedyTi => "greedy-ti",
            BaselineMethod::Random => "random",
            BaselineMethod::TraceMax => "trace-max",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineRow {
    pub s: usize,
    pub method: BaselineMethod,
    pub mean_trace_inv: Option<f64>,
    pub rank_fail_frac: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineTable {
    pub rows: Vec<BaselineRow>,
}

impl BaselineTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,method,mean_trace_inv,rank_fail_frac\n");
        for r in &self.rows {
            let value = r.mean_trace_inv.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.s, r.method, value, r.rank_fail_frac
            ));
        }
        out
    }
}

/// Scheduler comparison: greedy against the random and trace-max baselines,
/// per sparsity level, averaged over independently drawn systems.
pub fn run_baseline_comparison(cfg: &ExperimentConfig) -> Result<BaselineTable> {
    cfg.validate()?;
    let methods: Vec<BaselineMethod> = [
        (SchedulerKind::TimeVarying, BaselineMethod::Greedy),
        (SchedulerKind::TimeInvariant, BaselineMethod::GreedyTi),
        (SchedulerKind::Random, BaselineMethod::Random),
        (SchedulerKind::TraceMax, BaselineMethod::TraceMax),
    ]
    .into_iter()
    .filter(|(kind, _)| cfg.scheduler_modes.contains(kind))
    .map(|(_, method)| method)
    .collect();
    if methods.is_empty() {
        return Err(Error::InvalidArgument(
            "no applicable scheduler modes for the baseline comparison".into(),
        ));
    }

    // values[trial][level][method]
    let per_trial: Result<Vec<Vec<Vec<Option<f64>>>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let sys = build_system(cfg, cfg.n, trial)?;
            let mut per_level = Vec::with_capacity(cfg.sparsity_levels.len());
            for (s_idx, &s) in cfg.sparsity_levels.iter().enumerate() {
                let mut per_method = Vec::with_capacity(methods.len());
                for method in &methods {
                    let schedule = match method {
                        BaselineMethod::Greedy => run_greedy(&sys, s, SchedulerMode::TimeVarying)?,
                        BaselineMethod::GreedyTi => {
                            run_greedy(&sys, s, SchedulerMode::TimeInvariant)?
                        }
                        BaselineMethod::Random => {
                            let outer = derive_seed(cfg.seed, STREAM_SCHEDULE, trial as u64);
                            random_schedule(&sys, s, derive_seed(outer, s_idx as u64, 0))?
                        }
                        BaselineMethod::TraceMax => greedy_trace_max_schedule(&sys, s)?,
                    };
                    per_method.push(measure(&sys, &schedule)?);
                }
                per_level.push(per_method);
            }
            Ok(per_level)
        })
        .collect();
    let per_trial = per_trial?;

    let mut rows = Vec::new();
    for (s_idx, &s) in cfg.sparsity_levels.iter().enumerate() {
        for (m_idx, &method) in methods.iter().enumerate() {
            let values: Vec<f64> = per_trial
                .iter()
                .filter_map(|t| t[s_idx][m_idx])
                .collect();
            let failures = cfg.trials - values.len();
            rows.push(BaselineRow {
                s,
                method,
                mean_trace_inv: mean(values.into_iter()),
                rank_fail_frac: failures as f64 / cfg.trials as f64,
            });
        }
    }
    Ok(BaselineTable { rows })
}
