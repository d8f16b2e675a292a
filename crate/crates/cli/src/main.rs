use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cld::bench::{run_bench, to_csv, BenchConfig, Suite};
use cld::constrained::{exact_general, solve_bounded, ConstraintKind};
use cld::control::{solve_cav, solve_cdv, solve_control_exhaustive, solve_edge_control, ControlAction, ControlMode, ControlWitness};
use cld::gen::{CostModel, EdgeModel, GeneratorSpec};
use cld::instance::{GadgetMetadata, InstanceFile};
use cld::reachability::{solve_reachability, solve_with_abstainers};
use cld::reductions::{
    encode_3sat_to_bounded_max_length, encode_clique_to_cdv, encode_vc_to_bounded_power, encode_vc_to_cav,
    encode_vc_to_reachability_abstainers, CnfFormula, GadgetCertificate, SimpleGraph,
};
use cld::{metrics, Budget, Election, Limits, Solution, SolveReport};

const INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "cld", version, about = "Costly liquid democracy: delegation, bounded power, and control")]
struct Cli {
    /// Skip the size guards of the exponential solvers.
    #[arg(long, global = true)]
    force_large: bool,
    /// Warn about unknown keys in instance files instead of rejecting them.
    #[arg(long, global = true)]
    allow_unknown: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a cost-minimizing delegation, optionally under a bound.
    Solve(SolveArgs),
    /// Make the designated voter the sole super-voter (or prevent it).
    Control(ControlArgs),
    /// Build a gadget instance from a SAT formula or graph.
    Reduce(ReduceArgs),
    /// Generate a random election.
    Gen(GenArgs),
    /// Run a parameter sweep and print CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Reach,
    Maxlen,
    Power,
    Sumlen,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Dot,
}

#[derive(Args)]
struct SolveArgs {
    problem: Problem,
    #[arg(long)]
    input: PathBuf,
    /// Bound on length, power, or length sum; defaults to `params.ell`.
    #[arg(long)]
    ell: Option<usize>,
    /// Cost budget; defaults to `params.beta`.
    #[arg(long)]
    budget: Option<u64>,
    /// Maximum number of abstainers (reach only); defaults to `params.alpha`.
    #[arg(long)]
    alpha: Option<usize>,
    /// Use the exhaustive solver even when a dynamic program applies.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControlKind {
    Cav,
    Cdv,
    AddEdges,
    DelEdges,
}

impl ControlKind {
    fn action(self) -> ControlAction {
        match self {
            ControlKind::Cav => ControlAction::AddVoters,
            ControlKind::Cdv => ControlAction::DeleteVoters,
            ControlKind::AddEdges => ControlAction::AddEdges,
            ControlKind::DelEdges => ControlAction::DeleteEdges,
        }
    }
}

#[derive(Args)]
struct ControlArgs {
    kind: ControlKind,
    /// Instance with a `control` block naming the designated voter and budget.
    #[arg(long)]
    input: PathBuf,
    /// Override the budget of the control block.
    #[arg(long)]
    k: Option<usize>,
    /// Prevent the designated voter from being the sole super-voter.
    #[arg(long)]
    destructive: bool,
    /// Search all action sets instead of running the polynomial procedure.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReduceKind {
    #[value(name = "3sat")]
    ThreeSat,
    VcPower,
    VcAbstain,
    VcCav,
    CliqueCdv,
}

#[derive(Args)]
struct ReduceArgs {
    kind: ReduceKind,
    /// DIMACS CNF for 3sat, an edge list otherwise.
    #[arg(long)]
    source: PathBuf,
    /// Where to write the instance; metadata goes next to it as `<stem>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Uniform,
    Functional,
    Capped,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CostKind {
    Uniform,
    Correlated,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Edge probability (uniform model).
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Probability that a tree root closes a cycle (functional model).
    #[arg(long, default_value_t = 0.3)]
    q: f64,
    /// Largest out-degree (capped model).
    #[arg(long, default_value_t = 2)]
    max_degree: usize,
    #[arg(long, value_enum, default_value_t = CostKind::Uniform)]
    costs: CostKind,
    #[arg(long, default_value_t = 0)]
    lo: u64,
    #[arg(long, default_value_t = 5)]
    hi: u64,
    /// Offset range of voting over delegating cost (correlated costs).
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    offset_lo: i64,
    #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
    offset_hi: i64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report runtime_ms as 0.000 so output is byte-for-byte reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse().map_err(|e: cld::Error| e.to_string())
}

fn load(path: &Path, allow_unknown: bool) -> Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (file, warnings) = InstanceFile::parse(&text, allow_unknown).with_context(|| format!("parsing {}", path.display()))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(file)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A solved instance: the election the solution refers to, plus removed voters.
struct Solved {
    election: Election,
    solution: Solution,
    report: SolveReport,
    abstainers: Vec<String>,
}

fn solve(args: &SolveArgs, limits: Limits, allow_unknown: bool) -> Result<u8> {
    let file = load(&args.input, allow_unknown)?;
    let e = file.to_election()?;
    let params = file.params.clone().unwrap_or_default();
    let budget = args.budget.or(params.beta);
    let solved = match args.problem {
        Problem::Reach => match args.alpha.or(params.alpha) {
            Some(alpha) => solve_with_abstainers(&e, Budget(budget.unwrap_or(u64::MAX)), alpha, limits)?.map(|w| {
                let report = metrics(&w.residual, &w.solution).expect("abstainer witness is feasible");
                Solved {
                    abstainers: w.abstainers.iter().map(|&i| e.id(i).to_string()).collect(),
                    election: w.residual,
                    solution: w.solution,
                    report,
                }
            }),
            None => {
                let (solution, report) = solve_reachability(&e);
                budget.is_none_or(|b| report.total_cost <= b).then(|| Solved {
                    election: e.clone(),
                    solution,
                    report,
                    abstainers: Vec::new(),
                })
            }
        },
        problem => {
            let kind = match problem {
                Problem::Maxlen => ConstraintKind::MaxLength,
                Problem::Power => ConstraintKind::Power,
                _ => ConstraintKind::SumLength,
            };
            let Some(ell) = args.ell.or(params.ell) else {
                bail!("--ell is required (or set params.ell in the instance)");
            };
            let found = if args.exact || e.max_out_degree() > 1 {
                exact_general(&e, kind.with_bound(ell), budget.map(Budget), limits)?
            } else {
                solve_bounded(&e, kind, ell)?.filter(|(_, cost)| budget.is_none_or(|b| *cost <= b))
            };
            match found {
                Some((solution, _)) => Some(Solved {
                    report: metrics(&e, &solution)?,
                    election: e.clone(),
                    solution,
                    abstainers: Vec::new(),
                }),
                None => None,
            }
        }
    };
    let text = match (&solved, args.output) {
        (_, Output::Dot) => dot(solved.as_ref().map_or(&e, |s| &s.election), solved.as_ref().map(|s| &s.solution)),
        (Some(s), Output::Text) => solution_text(s),
        (None, Output::Text) => "INFEASIBLE\n".to_string(),
        (Some(s), Output::Json) => format!("{:#}\n", solution_json(s)),
        (None, Output::Json) => format!("{:#}\n", json!({"feasible": false})),
    };
    print!("{text}");
    Ok(if solved.is_some() { 0 } else { INFEASIBLE })
}

fn solution_text(s: &Solved) -> String {
    let e = &s.election;
    let mut out = String::new();
    writeln!(out, "cost {}", s.report.total_cost).unwrap();
    let casting: Vec<&str> = s.solution.casting.iter().map(|&i| e.id(i)).collect();
    writeln!(out, "casting {}", casting.join(" ")).unwrap();
    for (&c, &p) in &s.report.power {
        writeln!(out, "power {} {p}", e.id(c)).unwrap();
    }
    for (&i, &j) in &s.solution.delegation {
        writeln!(out, "delegate {} -> {}", e.id(i), e.id(j)).unwrap();
    }
    writeln!(out, "max_length {}", s.report.max_length).unwrap();
    writeln!(out, "max_sum_length {}", s.report.max_sum_length()).unwrap();
    if !s.abstainers.is_empty() {
        writeln!(out, "abstainers {}", s.abstainers.join(" ")).unwrap();
    }
    out
}

fn solution_json(s: &Solved) -> serde_json::Value {
    let e = &s.election;
    let power: BTreeMap<&str, usize> = s.report.power.iter().map(|(&c, &p)| (e.id(c), p)).collect();
    let delegation: BTreeMap<&str, &str> = s.solution.delegation.iter().map(|(&i, &j)| (e.id(i), e.id(j))).collect();
    json!({
        "feasible": true,
        "cost": s.report.total_cost,
        "casting": s.solution.casting.iter().map(|&i| e.id(i)).collect::<Vec<_>>(),
        "delegation": delegation,
        "power": power,
        "max_length": s.report.max_length,
        "max_sum_length": s.report.max_sum_length(),
        "abstainers": s.abstainers,
    })
}

/// Voting cost inside each node, delegating cost on each out-edge. Casting
/// voters are filled, chosen delegations drawn bold.
fn dot(e: &Election, solution: Option<&Solution>) -> String {
    let mut out = String::from("digraph election {\n  node [shape=circle];\n");
    for i in 0..e.len() {
        let casts = solution.is_some_and(|s| s.casting.contains(&i));
        let style = if casts { ", style=filled, fillcolor=lightblue" } else { "" };
        writeln!(out, "  \"{}\" [label=\"{}\\n{}\"{style}];", e.id(i), e.id(i), e.voting_cost(i)).unwrap();
    }
    for (i, j) in e.edges() {
        let chosen = solution.is_some_and(|s| s.delegation.get(&i) == Some(&j));
        let style = if chosen { ", style=bold" } else { "" };
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"{style}];",
            e.id(i),
            e.id(j),
            e.delegating_cost(i)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

fn control(args: &ControlArgs, limits: Limits, allow_unknown: bool) -> Result<u8> {
    let mut file = load(&args.input, allow_unknown)?;
    let Some(block) = file.control.as_mut() else {
        bail!("{} has no control block", args.input.display());
    };
    block.action = args.kind.action();
    if args.destructive {
        block.mode = ControlMode::Destructive;
    }
    if let Some(k) = args.k {
        block.k = k;
    }
    let ci = file.control_instance()?.expect("control block present");
    let witness = if args.exhaustive {
        solve_control_exhaustive(&ci, limits)?
    } else {
        match ci.action {
            ControlAction::AddVoters => solve_cav(&ci)?.map(ControlWitness::Voters),
            ControlAction::DeleteVoters => solve_cdv(&ci)?.map(ControlWitness::Voters),
            ControlAction::AddEdges | ControlAction::DeleteEdges => solve_edge_control(&ci)?.map(ControlWitness::Edges),
        }
    };
    let e = &ci.election;
    let items: Option<Vec<String>> = witness.as_ref().map(|w| match w {
        ControlWitness::Voters(vs) => vs.iter().map(|&v| e.id(v).to_string()).collect(),
        ControlWitness::Edges(es) => es.iter().map(|&(i, j)| format!("{}->{}", e.id(i), e.id(j))).collect(),
    });
    match (args.output, &items) {
        (Output::Json, _) => println!("{:#}", json!({"solvable": items.is_some(), "actions": items})),
        (_, Some(list)) => println!("{{{}}}", list.join(", ")),
        (_, None) => println!("NO"),
    }
    Ok(if items.is_some() { 0 } else { INFEASIBLE })
}

fn reduce(args: &ReduceArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.source).with_context(|| format!("reading {}", args.source.display()))?;
    let need_k = || args.k.context("--k is required for this reduction");
    let graph = || SimpleGraph::parse_edge_list(&text).with_context(|| format!("parsing {}", args.source.display()));
    let cert: GadgetCertificate = match args.kind {
        ReduceKind::ThreeSat => {
            let f = CnfFormula::parse_dimacs(&text).with_context(|| format!("parsing {}", args.source.display()))?;
            encode_3sat_to_bounded_max_length(&f, args.ell.unwrap_or(2))?
        }
        ReduceKind::VcPower => encode_vc_to_bounded_power(&graph()?, need_k()?, args.ell.unwrap_or(4))?,
        ReduceKind::VcAbstain => encode_vc_to_reachability_abstainers(&graph()?, need_k()?),
        ReduceKind::VcCav => encode_vc_to_cav(&graph()?, need_k()?),
        ReduceKind::CliqueCdv => encode_clique_to_cdv(&graph()?, need_k()?)?,
    };
    fs::write(&args.out, InstanceFile::from_gadget(&cert).to_json()).with_context(|| format!("writing {}", args.out.display()))?;
    let meta = args.out.with_extension("meta.json");
    fs::write(&meta, GadgetMetadata::new(&cert).to_json()).with_context(|| format!("writing {}", meta.display()))?;
    println!(
        "{} voters, {} edges ({}) -> {}",
        cert.election.len(),
        cert.election.num_edges(),
        if cert.counts_match() { "counts match" } else { "COUNTS DIFFER" },
        args.out.display()
    );
    Ok(0)
}

fn generate(args: &GenArgs) -> Result<u8> {
    let edge_model = match args.model {
        ModelKind::Uniform => EdgeModel::UniformP { p: args.p },
        ModelKind::Functional => EdgeModel::Functional { q: args.q },
        ModelKind::Capped => EdgeModel::OutDegreeCapped {
            max_degree: args.max_degree,
        },
    };
    let cost_model = match args.costs {
        CostKind::Uniform => CostModel::Uniform { lo: args.lo, hi: args.hi },
        CostKind::Correlated => CostModel::Correlated {
            lo: args.lo,
            hi: args.hi,
            offset_lo: args.offset_lo,
            offset_hi: args.offset_hi,
        },
    };
    let e = GeneratorSpec::new(args.n, edge_model, cost_model, args.seed).generate()?;
    write_or_print(args.out.as_deref(), &InstanceFile::from_election(&e).to_json())?;
    Ok(0)
}

fn bench(args: &BenchArgs) -> Result<u8> {
    let mut cfg = BenchConfig::new(args.suite, args.trials, args.seed);
    cfg.timing = !args.no_timing;
    let rows = run_bench(&cfg)?;
    write_or_print(args.out.as_deref(), &to_csv(&rows)?)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let limits = Limits { force: cli.force_large };
    match &cli.command {
        Command::Solve(a) => solve(a, limits, cli.allow_unknown),
        Command::Control(a) => control(a, limits, cli.allow_unknown),
        Command::Reduce(a) => reduce(a),
        Command::Gen(a) => generate(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1; clap's default of 2 means infeasible here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
