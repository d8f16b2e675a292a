//! One PASS/FAIL line per acceptance criterion; the test fails if any line does.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use cld::bench::{run_bench, to_csv, BenchConfig, Suite};
use cld::constrained::{exact_general, solve_bounded, ConstraintKind};
use cld::control::{
    is_casting_in_all, solve_cav, solve_cdv, solve_control_exhaustive, solve_edge_control, ControlAction, ControlInstance, ControlWitness,
};
use cld::gen::{CostModel, EdgeModel, GeneratorSpec};
use cld::instance::InstanceFile;
use cld::oracle::{self, enumerate_all};
use cld::reachability::{decide_reachability, min_cost, solve_reachability, solve_with_abstainers};
use cld::reductions::{
    brute_sat, brute_vertex_cover, encode_3sat_to_bounded_max_length, encode_vc_to_bounded_power, encode_vc_to_reachability_abstainers,
};
use cld::{metrics, Budget, Election, Limits, VoterRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sample() -> Election {
    Election::from_named(
        &[("a", 6, 4), ("b", 5, 2), ("c", 1, 0), ("d", 1, 0), ("e", 1, 0), ("f", 1, 0)],
        &[("a", "b"), ("b", "a"), ("c", "a"), ("d", "b"), ("e", "d"), ("f", "d")],
    )
    .unwrap()
}

fn reachability_corpus() -> Vec<Election> {
    let densities = [0.05, 0.15, 0.3, 0.5, 0.8];
    (0..600u64)
        .map(|seed| {
            let n = 1 + (seed % 8) as usize;
            let p = densities[(seed / 8) as usize % densities.len()];
            let costs = if seed % 3 == 0 {
                CostModel::Correlated {
                    lo: 0,
                    hi: 5,
                    offset_lo: -2,
                    offset_hi: 3,
                }
            } else {
                CostModel::Uniform { lo: 0, hi: 5 }
            };
            GeneratorSpec::new(n, EdgeModel::UniformP { p }, costs, seed).generate().unwrap()
        })
        .collect()
}

fn functional_corpus(count: u64, max_n: usize) -> Vec<Election> {
    (0..count)
        .map(|seed| {
            let n = 1 + (seed as usize % max_n);
            common::functional(n, [0.0, 0.4, 1.0][(seed / 10) as usize % 3], 5, seed + 10_000)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let e = sample();
    let start = Instant::now();
    let (sol, report) = solve_reachability(&e);
    let elapsed = start.elapsed();
    let a = e.index_of("a").unwrap();
    check(report.total_cost == 8, || format!("cost {}", report.total_cost))?;
    check(sol.casting == BTreeSet::from([a]), || format!("casting {:?}", sol.casting))?;
    check(report.power[&a] == 6, || format!("power(a) = {}", report.power[&a]))?;
    check(elapsed < Duration::from_millis(10), || format!("took {elapsed:?}"))?;
    Ok(format!("cost 8, C = {{a}}, power(a) = 6 in {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let corpus = reachability_corpus();
    for (t, e) in corpus.iter().enumerate() {
        let brute = enumerate_all(e, &[], Limits::default()).map_err(|err| err.to_string())?;
        let got = solve_reachability(e).1.total_cost;
        check(brute.min_cost == Some(got), || {
            format!("instance {t}: greedy {got}, oracle {:?}", brute.min_cost)
        })?;
    }
    Ok(format!("{} elections, 0 mismatches", corpus.len()))
}

fn criterion_3() -> Outcome {
    let corpus = functional_corpus(320, 10);
    let mut points = 0;
    for (t, e) in corpus.iter().enumerate() {
        for kind in ConstraintKind::ALL {
            let optima = oracle::bounded_optima(e, kind, Limits::default()).map_err(|err| err.to_string())?;
            for ell in 1..=e.len() {
                let dp = solve_bounded(e, kind, ell).map_err(|err| err.to_string())?.map(|x| x.1);
                check(dp == optima[ell], || {
                    format!("instance {t} {kind:?} ell {ell}: dp {dp:?}, oracle {:?}", optima[ell])
                })?;
                points += 1;
            }
        }
    }
    Ok(format!("{} elections, {points} (kind, ell) points", corpus.len()))
}

fn criterion_4() -> Outcome {
    let mut formulas = common::small_formulas();
    formulas.extend(common::sign_pattern_formulas());
    let mut sat_cases = 0;
    for f in &formulas {
        for ell in [2, 3] {
            let cert = encode_3sat_to_bounded_max_length(f, ell).map_err(|err| err.to_string())?;
            let (src, gadget) = (brute_sat(f).unwrap(), common::max_length_feasible(&cert));
            check(src == gadget, || {
                format!("3-SAT {:?} ell {ell}: source {src}, gadget {gadget}", f.clauses)
            })?;
            sat_cases += 1;
        }
    }
    let mut vc_cases = 0;
    for n in [4, 6, 8] {
        for g in common::cubic_graphs(n) {
            for k in 0..=n {
                for ell in [4, 5] {
                    let cert = encode_vc_to_bounded_power(&g, k, ell).map_err(|err| err.to_string())?;
                    let (src, gadget) = (brute_vertex_cover(&g, k).unwrap(), common::power_feasible(&cert));
                    check(src == gadget, || {
                        format!("cubic {:?} k {k} ell {ell}: source {src}, gadget {gadget}", g.edges)
                    })?;
                    vc_cases += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut abstain_cases = 0;
    for _ in 0..100 {
        let g = common::random_graph(&mut rng, 7);
        for k in 0..=g.num_vertices {
            let cert = encode_vc_to_reachability_abstainers(&g, k);
            let (src, gadget) = (brute_vertex_cover(&g, k).unwrap(), common::abstainers_feasible(&cert));
            check(src == gadget, || {
                format!("abstainers {:?} k {k}: source {src}, gadget {gadget}", g.edges)
            })?;
            abstain_cases += 1;
        }
    }
    Ok(format!(
        "3-SAT {sat_cases}, cubic VC {vc_cases}, abstainer VC {abstain_cases} cases, all agree"
    ))
}

fn greedy(ci: &ControlInstance) -> Result<Option<ControlWitness>, String> {
    let res = match ci.action {
        ControlAction::AddVoters => solve_cav(ci).map(|w| w.map(ControlWitness::Voters)),
        ControlAction::DeleteVoters => solve_cdv(ci).map(|w| w.map(ControlWitness::Voters)),
        ControlAction::AddEdges | ControlAction::DeleteEdges => solve_edge_control(ci).map(|w| w.map(ControlWitness::Edges)),
    };
    res.map_err(|err| err.to_string())
}

/// The sample election with `extra` unregistered voters approving random voters, x = b.
fn example3_with_unregistered(rng: &mut ChaCha8Rng, extra: usize) -> ControlInstance {
    let base = sample();
    let mut voters = base.voters().to_vec();
    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    for t in 0..extra {
        let u = voters.len();
        voters.push(VoterRecord::new(format!("u{t}"), rng.gen_range(0..6), rng.gen_range(0..6)));
        let target = rng.gen_range(0..6 + extra);
        if target != u && rng.gen_bool(0.9) {
            edges.push((u, target));
        }
    }
    let e = Election::new(voters, edges).unwrap();
    let b = e.index_of("b").unwrap();
    let mut ci = ControlInstance::new(e, b, extra, ControlAction::AddVoters);
    ci.unregistered = (6..6 + extra).collect();
    ci
}

fn criterion_5() -> Outcome {
    let mut per_action = Vec::new();
    for action in [
        ControlAction::AddVoters,
        ControlAction::DeleteVoters,
        ControlAction::AddEdges,
        ControlAction::DeleteEdges,
    ] {
        let mut solvable = 0;
        for seed in 0..250u64 {
            let ci = common::control_instance(action, seed + 50_000);
            let g = greedy(&ci)?;
            let x = solve_control_exhaustive(&ci, Limits::default()).map_err(|err| err.to_string())?;
            check(g.is_some() == x.is_some(), || {
                format!("{action:?} seed {seed}: greedy {g:?}, exhaustive {x:?}")
            })?;
            if let (Some(g), Some(x)) = (&g, &x) {
                check(g.len() == x.len(), || {
                    format!("{action:?} seed {seed}: sizes {} vs {}", g.len(), x.len())
                })?;
            }
            solvable += usize::from(x.is_some());
        }
        per_action.push(format!("{action:?} {solvable}/250"));
    }

    let e = sample();
    let (a, b) = (e.index_of("a").unwrap(), e.index_of("b").unwrap());
    let cdv = solve_cdv(&ControlInstance::new(e.clone(), b, 1, ControlAction::DeleteVoters)).map_err(|err| err.to_string())?;
    check(cdv == Some(vec![a]), || format!("sample deletion: {cdv:?}"))?;
    let (residual, _) = e.without_voters(&[a]);
    let b_after = residual.index_of("b").unwrap();
    check(oracle::is_sole_super_voter(&residual, b_after, Limits::default()).unwrap(), || {
        "b not sole after deleting a".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for trial in 0..60 {
        let ci = example3_with_unregistered(&mut rng, 1 + trial % 5);
        let g = solve_cav(&ci).map_err(|err| err.to_string())?;
        let x = solve_control_exhaustive(&ci, Limits::default()).map_err(|err| err.to_string())?;
        check(g.is_none() && x.is_none(), || {
            format!("sample addition trial {trial}: greedy {g:?}, exhaustive {x:?}")
        })?;
    }
    Ok(format!(
        "{}; sample deletes a, 60 addition settings impossible",
        per_action.join(", ")
    ))
}

fn criterion_6() -> Outcome {
    let corpus = functional_corpus(320, 8);
    let mut checks = 0;
    for (t, e) in corpus.iter().enumerate() {
        for x in 0..e.len() {
            let fast = is_casting_in_all(e, x).map_err(|err| err.to_string())?;
            let brute = oracle::casts_in_all_optima(e, x, Limits::default()).map_err(|err| err.to_string())?;
            check(fast == brute, || format!("instance {t} x {x}: claim {fast}, oracle {brute}: {e:?}"))?;
            checks += 1;
        }
    }
    Ok(format!("{} elections, {checks} designated voters, 0 disagreements", corpus.len()))
}

fn criterion_7() -> Outcome {
    let general = reachability_corpus();
    let functional = functional_corpus(320, 10);
    for (t, e) in general.iter().enumerate() {
        let (sol, report) = solve_reachability(e);
        check(report.power.values().sum::<usize>() == e.len(), || {
            format!("general {t}: power sum")
        })?;
        let b = min_cost(e);
        check(decide_reachability(e, Budget(b)) && decide_reachability(e, Budget(b + 3)), || {
            format!("general {t}: budget")
        })?;
        check(b == 0 || !decide_reachability(e, Budget(b - 1)), || {
            format!("general {t}: below optimum")
        })?;
        let cheaper: BTreeSet<usize> = (0..e.len()).filter(|&i| e.excess(i) < 0).collect();
        check(cheaper.is_subset(&sol.casting), || format!("general {t}: cheaper casters included"))?;
        let optima = enumerate_all(e, &[], Limits::default()).unwrap().optimal_solutions;
        check(optima.iter().all(|s| cheaper.is_subset(&s.casting)), || {
            format!("general {t}: cheaper casters included, oracle")
        })?;
        if e.len() <= 6 {
            let sets = |el: &Election| -> BTreeSet<BTreeSet<usize>> {
                enumerate_all(el, &[], Limits::default())
                    .unwrap()
                    .optimal_solutions
                    .into_iter()
                    .map(|s| s.casting)
                    .collect()
            };
            let scaled = e.scaled(3 + (t as u64 % 4));
            check(sets(e) == sets(&scaled), || {
                format!("general {t}: scaling changed the optimal sets")
            })?;
        }
    }
    for (t, e) in functional.iter().enumerate() {
        for kind in ConstraintKind::ALL {
            let mut prev: Option<u64> = None;
            for ell in 1..=e.len() {
                let res = solve_bounded(e, kind, ell).map_err(|err| err.to_string())?;
                if let Some((sol, cost)) = &res {
                    let report = metrics(e, sol).map_err(|err| err.to_string())?;
                    check(report.power.values().sum::<usize>() == e.len(), || {
                        format!("functional {t}: power sum")
                    })?;
                    check(prev.is_none_or(|p| *cost <= p), || {
                        format!("functional {t} {kind:?}: cost rose at {ell}")
                    })?;
                } else {
                    check(prev.is_none(), || format!("functional {t} {kind:?}: lost feasibility at {ell}"))?;
                }
                prev = res.map(|x| x.1).or(prev);
            }
        }
    }
    Ok(format!("{} general and {} functional elections", general.len(), functional.len()))
}

fn criterion_8() -> Outcome {
    let run = || -> Result<String, String> {
        let mut out = String::new();
        for seed in [1u64, 7, 42] {
            for model in [
                EdgeModel::Functional { q: 0.4 },
                EdgeModel::UniformP { p: 0.3 },
                EdgeModel::OutDegreeCapped { max_degree: 2 },
            ] {
                let spec = GeneratorSpec::new(8, model, CostModel::Uniform { lo: 0, hi: 5 }, seed);
                let e = spec.generate().map_err(|err| err.to_string())?;
                out += &InstanceFile::from_election(&e).to_json();
                out += &serde_json::to_string(&solve_reachability(&e).0).unwrap();
                out += &serde_json::to_string(&exact_general(&e, ConstraintKind::Power.with_bound(3), None, Limits::default()).unwrap())
                    .unwrap();
                if e.max_out_degree() <= 1 {
                    out += &serde_json::to_string(&solve_bounded(&e, ConstraintKind::SumLength, 3).unwrap()).unwrap();
                }
                out += &serde_json::to_string(
                    &solve_with_abstainers(&e, Budget(4), 2, Limits::default())
                        .unwrap()
                        .map(|w| w.abstainers),
                )
                .unwrap();
            }
        }
        for suite in [Suite::Feasibility, Suite::CostOverhead] {
            let mut cfg = BenchConfig::new(suite, 4, 99);
            cfg.timing = false;
            out += &to_csv(&run_bench(&cfg).map_err(|err| err.to_string())?).map_err(|err| err.to_string())?;
        }
        Ok(out)
    };
    let (first, second) = (run()?, run()?);
    check(first == second, || "two runs differ".into())?;
    Ok(format!("{} identical bytes across two runs", first.len()))
}

/// Number, name, time limit in seconds, check.
type Criterion = (u8, &'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "sample election fixture", None, criterion_1),
        (2, "oracle equivalence, reachability", Some(60), criterion_2),
        (3, "oracle equivalence, bounded DPs", Some(120), criterion_3),
        (4, "reduction iff suites", Some(600), criterion_4),
        (5, "control suites", Some(120), criterion_5),
        (6, "casting-in-all claim", None, criterion_6),
        (7, "invariant suite", None, criterion_7),
        (8, "determinism", None, criterion_8),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let mut outcome = f();
        let secs = start.elapsed().as_secs_f64();
        if let (Ok(_), Some(limit)) = (&outcome, limit) {
            if secs > limit as f64 {
                outcome = Err(format!("took {secs:.1} s, limit {limit} s"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.2} s)"),
            Err(why) => {
                println!("FAIL [{id}] {name}: {why} ({secs:.2} s)");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
