//! Parameter sweeps over generated corpora, reported as CSV.
//!
//! Each trial generates one election and solves it exactly for every
//! constraint kind and bound `1..=n`. The `feasibility` suite reports how
//! often the constrained optimum fits a budget of the unconstrained optimum
//! plus a slack; `cost-overhead` reports how much the constraint costs.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::constrained::{exact_general, solve_bounded, ConstraintKind};
use crate::error::{Error, Result};
use crate::gen::{CostModel, EdgeModel, GeneratorSpec};
use crate::reachability::min_cost;
use crate::Limits;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Feasibility,
    CostOverhead,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Feasibility => "feasibility",
            Suite::CostOverhead => "cost-overhead",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feasibility" => Ok(Suite::Feasibility),
            "cost-overhead" => Ok(Suite::CostOverhead),
            _ => Err(Error::InvalidParameter(format!("unknown suite {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub edge_models: Vec<EdgeModel>,
    pub cost_model: CostModel,
    /// Budget slack over the unconstrained optimum (feasibility suite only).
    pub slacks: Vec<u64>,
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(suite: Suite, trials: usize, seed: u64) -> Self {
        BenchConfig {
            suite,
            trials,
            seed,
            sizes: vec![6, 8],
            edge_models: vec![EdgeModel::Functional { q: 0.3 }, EdgeModel::OutDegreeCapped { max_degree: 2 }],
            cost_model: CostModel::Uniform { lo: 0, hi: 5 },
            slacks: vec![0, 2],
            timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub constraint: String,
    pub model: String,
    pub costs: String,
    pub n: usize,
    pub ell: usize,
    /// `opt+S` for a slack `S`, or `none` without a budget.
    pub beta: String,
    pub feasible_fraction: f64,
    pub mean_cost_ratio: f64,
    pub runtime_ms: String,
}

fn model_name(m: &EdgeModel) -> String {
    match m {
        EdgeModel::UniformP { p } => format!("uniform_p({p})"),
        EdgeModel::Functional { q } => format!("functional({q})"),
        EdgeModel::OutDegreeCapped { max_degree } => format!("capped({max_degree})"),
    }
}

fn cost_name(c: &CostModel) -> String {
    match c {
        CostModel::Uniform { lo, hi } => format!("uniform({lo}..{hi})"),
        CostModel::Correlated {
            lo,
            hi,
            offset_lo,
            offset_hi,
        } => format!("correlated({lo}..{hi};{offset_lo}..{offset_hi})"),
    }
}

/// Solves of one trial: unconstrained optimum, then per kind and bound the
/// constrained optimum and the time spent.
struct TrialResult {
    base: u64,
    per: Vec<Vec<(Option<u64>, f64)>>,
}

fn run_trial(spec: GeneratorSpec) -> Result<TrialResult> {
    let e = spec.generate()?;
    let base = min_cost(&e);
    let functional = e.max_out_degree() <= 1;
    let mut per = Vec::new();
    for kind in ConstraintKind::ALL {
        let mut row = Vec::new();
        for ell in 1..=spec.n {
            let start = Instant::now();
            let best = if functional {
                solve_bounded(&e, kind, ell)?
            } else {
                exact_general(&e, kind.with_bound(ell), None, Limits::default())?
            };
            row.push((best.map(|b| b.1), start.elapsed().as_secs_f64() * 1e3));
        }
        per.push(row);
    }
    Ok(TrialResult { base, per })
}

fn trial_seed(seed: u64, point: u64, trial: u64) -> u64 {
    seed ^ point.wrapping_mul(0xA076_1D64_78BD_642F) ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the sweep. Rows come out in a fixed order regardless of scheduling.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    let mut point = 0u64;
    for model in &cfg.edge_models {
        for &n in &cfg.sizes {
            point += 1;
            let specs: Vec<GeneratorSpec> = (0..cfg.trials as u64)
                .map(|t| GeneratorSpec::new(n, *model, cfg.cost_model, trial_seed(cfg.seed, point, t)))
                .collect();
            let results: Vec<TrialResult> = specs.into_par_iter().map(run_trial).collect::<Result<_>>()?;
            let budgets: Vec<Option<u64>> = match cfg.suite {
                Suite::Feasibility => cfg.slacks.iter().map(|&s| Some(s)).collect(),
                Suite::CostOverhead => vec![None],
            };
            for (k, kind) in ConstraintKind::ALL.iter().enumerate() {
                for ell in 1..=n {
                    for &slack in &budgets {
                        let mut feasible = 0usize;
                        let mut ratios = Vec::new();
                        let mut ms = 0.0;
                        for r in &results {
                            let (best, t) = r.per[k][ell - 1];
                            ms += t;
                            let Some(c) = best else { continue };
                            if slack.is_none_or(|s| c <= r.base + s) {
                                feasible += 1;
                            }
                            if r.base > 0 {
                                ratios.push(c as f64 / r.base as f64);
                            } else if c == 0 {
                                ratios.push(1.0);
                            }
                        }
                        let trials = results.len().max(1) as f64;
                        let mean = if ratios.is_empty() {
                            f64::NAN
                        } else {
                            ratios.iter().sum::<f64>() / ratios.len() as f64
                        };
                        rows.push(BenchRow {
                            suite: cfg.suite.name().to_string(),
                            constraint: kind.name().to_string(),
                            model: model_name(model),
                            costs: cost_name(&cfg.cost_model),
                            n,
                            ell,
                            beta: slack.map_or_else(|| "none".to_string(), |s| format!("opt+{s}")),
                            feasible_fraction: feasible as f64 / trials,
                            mean_cost_ratio: mean,
                            runtime_ms: if cfg.timing { format!("{ms:.3}") } else { "0.000".to_string() },
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
