#![allow(dead_code)]

use std::collections::BTreeSet;

use cld::constrained::{exact_general, Constraint};
use cld::control::{solve_control_exhaustive, ControlAction, ControlInstance, ControlMode};
use cld::gen::{CostModel, EdgeModel, GeneratorSpec};
use cld::reachability::solve_with_abstainers;
use cld::reductions::{CnfFormula, GadgetCertificate, SimpleGraph};
use cld::{Budget, Election, Limits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn functional(n: usize, q: f64, hi: u64, seed: u64) -> Election {
    GeneratorSpec::new(n, EdgeModel::Functional { q }, CostModel::Uniform { lo: 0, hi }, seed)
        .generate()
        .unwrap()
}

pub fn general(n: usize, p: f64, hi: u64, seed: u64) -> Election {
    GeneratorSpec::new(n, EdgeModel::UniformP { p }, CostModel::Uniform { lo: 0, hi }, seed)
        .generate()
        .unwrap()
}

/// A random out-degree-one control instance for `action`.
pub fn control_instance(action: ControlAction, seed: u64) -> ControlInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let n = rng.gen_range(3..=9);
    let q = [0.0, 0.3, 0.8][rng.gen_range(0..3)];
    let costs = if rng.gen_bool(0.3) {
        CostModel::Uniform {
            lo: 0,
            hi: rng.gen_range(1..=4),
        }
    } else {
        CostModel::Correlated {
            lo: 0,
            hi: 2,
            offset_lo: -1,
            offset_hi: 3,
        }
    };
    let e = GeneratorSpec::new(n, EdgeModel::Functional { q }, costs, seed).generate().unwrap();
    let roots: Vec<usize> = (0..n).filter(|&i| e.out_degree(i) == 0).collect();
    let designated = if !roots.is_empty() && rng.gen_bool(0.6) {
        roots[rng.gen_range(0..roots.len())]
    } else {
        rng.gen_range(0..n)
    };
    let k = rng.gen_range(0..=3);
    let mut ci = ControlInstance::new(e, designated, k, action);
    if action == ControlAction::AddVoters {
        // Favour voters whose delegation path leads to x, so additions matter.
        let leads_to_x = |mut i: usize| {
            for _ in 0..n {
                match ci.election.out_neighbors(i).first() {
                    Some(&j) if j == designated => return true,
                    Some(&j) => i = j,
                    None => return false,
                }
            }
            false
        };
        let unregistered: BTreeSet<usize> = (0..n)
            .filter(|&i| i != designated && rng.gen_bool(if leads_to_x(i) { 0.6 } else { 0.25 }))
            .collect();
        ci.unregistered = unregistered;
    }
    ci.mode = ControlMode::Constructive;
    ci
}

/// Every labeled cubic graph on `n` vertices, edges chosen in lexicographic order.
pub fn labeled_cubic_graphs(n: usize) -> Vec<SimpleGraph> {
    fn go(n: usize, pairs: &[(usize, usize)], at: usize, deg: &mut [usize], chosen: &mut Vec<(usize, usize)>, out: &mut Vec<SimpleGraph>) {
        if at == pairs.len() {
            if deg.iter().all(|&d| d == 3) {
                out.push(SimpleGraph::new(n, chosen.iter().copied()).unwrap());
            }
            return;
        }
        let (u, v) = pairs[at];
        // Once every pair touching u is decided, u must be full.
        let last_for_u = at + 1 == pairs.len() || pairs[at + 1].0 != u;
        if deg[u] < 3 && deg[v] < 3 {
            deg[u] += 1;
            deg[v] += 1;
            chosen.push((u, v));
            go(n, pairs, at + 1, deg, chosen, out);
            chosen.pop();
            deg[u] -= 1;
            deg[v] -= 1;
        }
        if !(last_for_u && deg[u] < 3) {
            go(n, pairs, at + 1, deg, chosen, out);
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    go(n, &pairs, 0, &mut vec![0; n], &mut Vec::new(), &mut out);
    out
}

/// Number of bijections `a -> b` preserving adjacency (0 if not isomorphic).
pub fn count_isomorphisms(a: &SimpleGraph, b: &SimpleGraph, stop_at_first: bool) -> usize {
    fn go(a: &SimpleGraph, b: &SimpleGraph, map: &mut Vec<usize>, used: &mut [bool], stop: bool) -> usize {
        let i = map.len();
        if i == a.num_vertices {
            return 1;
        }
        let mut total = 0;
        for j in 0..b.num_vertices {
            if used[j] || (0..i).any(|p| a.has_edge(p, i) != b.has_edge(map[p], j)) {
                continue;
            }
            used[j] = true;
            map.push(j);
            total += go(a, b, map, used, stop);
            map.pop();
            used[j] = false;
            if stop && total > 0 {
                break;
            }
        }
        total
    }
    if a.num_vertices != b.num_vertices || a.num_edges() != b.num_edges() {
        return 0;
    }
    go(a, b, &mut Vec::new(), &mut vec![false; b.num_vertices], stop_at_first)
}

/// One representative per isomorphism class of cubic graphs on `n` vertices.
pub fn cubic_graphs(n: usize) -> Vec<SimpleGraph> {
    let mut reps: Vec<SimpleGraph> = Vec::new();
    for g in labeled_cubic_graphs(n) {
        if !reps.iter().any(|r| count_isomorphisms(r, &g, true) > 0) {
            reps.push(g);
        }
    }
    reps
}

/// Sorted 3-literal clauses over `1..=vars` without repeated literals.
pub fn clauses(vars: i32) -> Vec<Vec<i32>> {
    let lits: Vec<i32> = (1..=vars).flat_map(|v| [v, -v]).collect();
    let mut out = Vec::new();
    for a in 0..lits.len() {
        for b in a + 1..lits.len() {
            for c in b + 1..lits.len() {
                out.push(vec![lits[a], lits[b], lits[c]]);
            }
        }
    }
    out
}

/// Every formula with at most 3 distinct clauses over at most 3 variables.
pub fn small_formulas() -> Vec<CnfFormula> {
    let mut out = Vec::new();
    for vars in 1..=3 {
        let cs = clauses(vars);
        out.push(CnfFormula::new(vars as usize, vec![]).unwrap());
        for a in 0..cs.len() {
            out.push(CnfFormula::new(vars as usize, vec![cs[a].clone()]).unwrap());
            for b in a + 1..cs.len() {
                out.push(CnfFormula::new(vars as usize, vec![cs[a].clone(), cs[b].clone()]).unwrap());
                for c in b + 1..cs.len() {
                    out.push(CnfFormula::new(vars as usize, vec![cs[a].clone(), cs[b].clone(), cs[c].clone()]).unwrap());
                }
            }
        }
    }
    out
}

/// Unsatisfiable formulas: all sign patterns over 3 variables, and that set
/// with one clause dropped (satisfiable again).
pub fn sign_pattern_formulas() -> Vec<CnfFormula> {
    let all: Vec<Vec<i32>> = (0..8)
        .map(|m| (1..=3).map(|v| if m >> (v - 1) & 1 == 1 { -v } else { v }).collect())
        .collect();
    let mut out = vec![CnfFormula::new(3, all.clone()).unwrap()];
    for skip in 0..8 {
        let rest = all.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, c)| c.clone()).collect();
        out.push(CnfFormula::new(3, rest).unwrap());
    }
    out
}

pub fn max_length_feasible(cert: &GadgetCertificate) -> bool {
    let p = &cert.params;
    exact_general(
        &cert.election,
        Constraint::MaxLength(p.ell.unwrap()),
        Some(Budget(p.beta.unwrap())),
        Limits::FORCED,
    )
    .unwrap()
    .is_some()
}

pub fn power_feasible(cert: &GadgetCertificate) -> bool {
    let p = &cert.params;
    exact_general(
        &cert.election,
        Constraint::Power(p.ell.unwrap()),
        Some(Budget(p.beta.unwrap())),
        Limits::FORCED,
    )
    .unwrap()
    .is_some()
}

pub fn abstainers_feasible(cert: &GadgetCertificate) -> bool {
    let p = &cert.params;
    solve_with_abstainers(&cert.election, Budget(p.beta.unwrap()), p.alpha.unwrap(), Limits::FORCED)
        .unwrap()
        .is_some()
}

pub fn control_feasible(cert: &GadgetCertificate, action: ControlAction) -> bool {
    let p = &cert.params;
    let mut ci = ControlInstance::new(cert.election.clone(), p.designated.unwrap(), p.k.unwrap(), action);
    ci.unregistered = p.unregistered.clone();
    solve_control_exhaustive(&ci, Limits::FORCED).unwrap().is_some()
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize) -> SimpleGraph {
    let n = rng.gen_range(2..=max_vertices);
    let p = rng.gen_range(0.2..0.8);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    SimpleGraph::new(n, edges).unwrap()
}
