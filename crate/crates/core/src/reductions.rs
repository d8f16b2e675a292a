//! Gadget constructions from SAT, Vertex Cover, and Clique, together with
//! brute-force solvers for the source problems.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Election, VoterRecord};

/// A CNF formula over variables `1..=num_vars`; literal `-i` is the negation of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        for (j, c) in clauses.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::MalformedFormula(format!("clause {j} is empty")));
            }
            if c.len() > 3 {
                return Err(Error::MalformedFormula(format!("clause {j} has {} literals", c.len())));
            }
            if let Some(&lit) = c.iter().find(|&&l| l == 0 || l.unsigned_abs() as usize > num_vars) {
                return Err(Error::MalformedFormula(format!(
                    "clause {j} has literal {lit} outside 1..={num_vars}"
                )));
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Parses DIMACS CNF. Clauses may span lines and end with `0`.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(Error::Parse(format!("line {}: expected `p cnf VARS CLAUSES`", ln + 1)));
                }
                let num = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {}: bad number `{s}`", ln + 1)))
                };
                header = Some((num(parts[2])?, num(parts[3])?));
                continue;
            }
            if header.is_none() {
                return Err(Error::Parse(format!("line {}: clause before the `p cnf` header", ln + 1)));
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad literal `{tok}`", ln + 1)))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let (vars, count) = header.ok_or_else(|| Error::Parse("missing `p cnf` header".into()))?;
        if count != clauses.len() {
            return Err(Error::Parse(format!("header declares {count} clauses, found {}", clauses.len())));
        }
        CnfFormula::new(vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&format!("{l} "));
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = assignment[l.unsigned_abs() as usize - 1];
                if l > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }
}

/// An undirected simple graph on vertices `0..num_vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleGraph {
    pub num_vertices: usize,
    /// Edges as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::InvalidParameter(format!("edge {u}-{v} outside 0..{num_vertices}")));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidParameter(format!("duplicate edge {u}-{v}")));
            }
        }
        Ok(SimpleGraph {
            num_vertices,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        SimpleGraph::new(n, edges).unwrap()
    }

    pub fn cycle(n: usize) -> Self {
        SimpleGraph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    pub fn path(n: usize) -> Self {
        SimpleGraph::new(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    /// The star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        SimpleGraph::new(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.num_vertices];
        for &(u, v) in &self.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    pub fn check_cubic(&self) -> Result<()> {
        match self.degrees().into_iter().enumerate().find(|&(_, d)| d != 3) {
            Some((vertex, degree)) => Err(Error::NotCubic { vertex, degree }),
            None => Ok(()),
        }
    }

    /// Parses an edge list: the first data line holds the vertex count, each
    /// following line one edge `u v`. Lines starting with `#` are comments.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("line {}: bad number `{t}`", ln + 1))))
                .collect::<Result<_>>()?;
            match (n, nums.as_slice()) {
                (None, [count]) => n = Some(*count),
                (Some(_), [u, v]) => edges.push((*u, *v)),
                (None, _) => return Err(Error::Parse(format!("line {}: expected the vertex count", ln + 1))),
                (Some(_), _) => return Err(Error::Parse(format!("line {}: expected `u v`", ln + 1))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing vertex count".into()))?;
        SimpleGraph::new(n, edges).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_vertices);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// Parameters a gadget fixes for the target problem.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub designated: Option<usize>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty", default)]
    pub unregistered: BTreeSet<usize>,
}

/// A constructed election with the parameters and sizes the construction predicts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetCertificate {
    pub election: Election,
    pub params: GadgetParams,
    pub source: String,
    pub expected_voters: usize,
    pub expected_edges: usize,
}

impl GadgetCertificate {
    pub fn counts_match(&self) -> bool {
        self.election.len() == self.expected_voters && self.election.num_edges() == self.expected_edges
    }
}

/// Accumulates named voters and edges.
#[derive(Default)]
struct Builder {
    voters: Vec<VoterRecord>,
    edges: Vec<(usize, usize)>,
}

impl Builder {
    fn voter(&mut self, id: impl Into<String>, v: u64, d: u64) -> usize {
        self.voters.push(VoterRecord::new(id, v, d));
        self.voters.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize) {
        self.edges.push((from, to));
    }

    fn finish(self) -> Election {
        Election::new(self.voters, self.edges).expect("gadget construction is well formed")
    }
}

fn lit_id(l: i32) -> String {
    if l > 0 {
        format!("lit:x{l}")
    } else {
        format!("lit:nx{}", -l)
    }
}

/// Bounded max length from 3-SAT. Clause voters reach a literal voter in
/// exactly `ell` steps; each complementary pair forms a 2-cycle, and the
/// budget `|X|` pays for one literal per variable.
pub fn encode_3sat_to_bounded_max_length(f: &CnfFormula, ell: usize) -> Result<GadgetCertificate> {
    if ell < 2 {
        return Err(Error::InvalidParameter(format!("ell must be at least 2, got {ell}")));
    }
    for (j, c) in f.clauses.iter().enumerate() {
        if c.len() != 3 {
            return Err(Error::MalformedFormula(format!("clause {j} has {} literals, expected 3", c.len())));
        }
        let distinct: BTreeSet<i32> = c.iter().copied().collect();
        if distinct.len() != 3 {
            return Err(Error::MalformedFormula(format!("clause {j} repeats a literal")));
        }
    }
    let mut b = Builder::default();
    let mut lit = vec![[0usize; 2]; f.num_vars + 1];
    for i in 1..=f.num_vars {
        lit[i][0] = b.voter(lit_id(i as i32), 1, 0);
        lit[i][1] = b.voter(lit_id(-(i as i32)), 1, 0);
        b.edge(lit[i][0], lit[i][1]);
        b.edge(lit[i][1], lit[i][0]);
    }
    let voter_of = |l: i32| lit[l.unsigned_abs() as usize][usize::from(l < 0)];
    for (j, c) in f.clauses.iter().enumerate() {
        let cv = b.voter(format!("clause:{j}"), 1, 0);
        let da = b.voter(format!("dummy:{j}:a"), 1, 0);
        let db = b.voter(format!("dummy:{j}:b"), 1, 0);
        b.edge(cv, da);
        b.edge(cv, db);
        for (branch, (&l, from)) in c.iter().zip([da, db, db]).enumerate() {
            let mut prev = from;
            for t in 0..ell - 2 {
                let link = b.voter(format!("chain:{j}:{}:{t}", branch + 1), 1, 0);
                b.edge(prev, link);
                prev = link;
            }
            b.edge(prev, voter_of(l));
        }
    }
    let (x, m) = (f.num_vars, f.clauses.len());
    Ok(GadgetCertificate {
        election: b.finish(),
        params: GadgetParams {
            beta: Some(x as u64),
            ell: Some(ell),
            ..Default::default()
        },
        source: format!("3-CNF with {x} variables and {m} clauses"),
        expected_voters: 2 * x + 3 * m + 3 * (ell - 2) * m,
        expected_edges: 2 * x + 5 * m + 3 * (ell - 2) * m,
    })
}

fn edge_id(u: usize, v: usize) -> String {
    format!("E:{u}-{v}")
}

/// Bounded power from Vertex Cover on cubic graphs. Each vertex voter may
/// defer to a free-voting dummy that already carries `ell - 2` pendants, so
/// a dummy can absorb its vertex voter but nothing more.
pub fn encode_vc_to_bounded_power(g: &SimpleGraph, k: usize, ell: usize) -> Result<GadgetCertificate> {
    if ell < 4 {
        return Err(Error::InvalidParameter(format!("ell must be at least 4, got {ell}")));
    }
    g.check_cubic()?;
    let mut b = Builder::default();
    let n = g.num_vertices;
    let vs: Vec<usize> = (0..n).map(|i| b.voter(format!("V:{i}"), 1, 0)).collect();
    for &(u, v) in &g.edges {
        let ev = b.voter(edge_id(u, v), 1, 0);
        b.edge(ev, vs[u]);
        b.edge(ev, vs[v]);
    }
    for i in 0..n {
        let dv = b.voter(format!("D:{i}"), 0, 0);
        b.edge(vs[i], dv);
        for t in 0..ell - 2 {
            let p = b.voter(format!("pendant:{i}:{t}"), 1, 0);
            b.edge(p, dv);
        }
    }
    let m = g.num_edges();
    Ok(GadgetCertificate {
        election: b.finish(),
        params: GadgetParams {
            beta: Some(k as u64),
            ell: Some(ell),
            k: Some(k),
            ..Default::default()
        },
        source: format!("cubic graph with {n} vertices and {m} edges, k = {k}"),
        expected_voters: n + m + n + n * (ell - 2),
        expected_edges: 2 * m + n + n * (ell - 2),
    })
}

/// Reachability with abstainers from Vertex Cover: edge voters approve their
/// endpoints, and the `|V| - k` uncovered vertex voters abstain.
pub fn encode_vc_to_reachability_abstainers(g: &SimpleGraph, k: usize) -> GadgetCertificate {
    let mut b = Builder::default();
    let n = g.num_vertices;
    let vs: Vec<usize> = (0..n).map(|i| b.voter(format!("V:{i}"), 1, 0)).collect();
    for &(u, v) in &g.edges {
        let ev = b.voter(edge_id(u, v), 1, 0);
        b.edge(ev, vs[u]);
        b.edge(ev, vs[v]);
    }
    let m = g.num_edges();
    GadgetCertificate {
        election: b.finish(),
        params: GadgetParams {
            beta: Some(k as u64),
            alpha: Some(n.saturating_sub(k)),
            k: Some(k),
            ..Default::default()
        },
        source: format!("graph with {n} vertices and {m} edges, k = {k}"),
        expected_voters: n + m,
        expected_edges: 2 * m,
    }
}

/// Control by adding voters from Vertex Cover: the unregistered vertex
/// voters lead to `x`, and `x` outweighs `y` and its `k + m - 1` followers
/// only if every edge voter gets through.
pub fn encode_vc_to_cav(g: &SimpleGraph, k: usize) -> GadgetCertificate {
    let mut b = Builder::default();
    let n = g.num_vertices;
    let m = g.num_edges();
    let x = b.voter("x", 0, 0);
    let y = b.voter("y", 0, 0);
    let vs: Vec<usize> = (0..n).map(|i| b.voter(format!("V:{i}"), 1, 0)).collect();
    for &v in &vs {
        b.edge(v, x);
    }
    for &(u, v) in &g.edges {
        let ev = b.voter(edge_id(u, v), 1, 0);
        b.edge(ev, vs[u]);
        b.edge(ev, vs[v]);
    }
    let dummies = (k + m).saturating_sub(1);
    for t in 0..dummies {
        let d = b.voter(format!("D:{t}"), 1, 0);
        b.edge(d, y);
    }
    GadgetCertificate {
        election: b.finish(),
        params: GadgetParams {
            k: Some(k),
            designated: Some(x),
            unregistered: vs.into_iter().collect(),
            ..Default::default()
        },
        source: format!("graph with {n} vertices and {m} edges, k = {k}"),
        expected_voters: m + n + dummies + 2,
        expected_edges: 2 * m + n + dummies,
    }
}

fn binomial2(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Control by deleting voters from Clique: deleting the vertex voters of a
/// `k`-clique strands exactly `C(k, 2)` edge voters, which is what it takes
/// for `x` to beat each of the `k + 1` interchangeable `y` voters.
pub fn encode_clique_to_cdv(g: &SimpleGraph, k: usize) -> Result<GadgetCertificate> {
    if k < 2 {
        return Err(Error::DegenerateCliqueSize(k));
    }
    let n = g.num_vertices;
    let m = g.num_edges();
    if m < binomial2(k) {
        // Too few edges for any k-clique; the dummy count would go negative.
        return Err(Error::InvalidParameter(format!(
            "a {k}-clique needs {} edges but the graph has {m}",
            binomial2(k)
        )));
    }
    let mut b = Builder::default();
    let x = b.voter("x", 0, 0);
    let ys: Vec<usize> = (1..=k + 1).map(|t| b.voter(format!("y:{t}"), 0, 0)).collect();
    let vs: Vec<usize> = (0..n).map(|i| b.voter(format!("V:{i}"), 1, 0)).collect();
    for &v in &vs {
        for &y in &ys {
            b.edge(v, y);
        }
    }
    for &(u, v) in &g.edges {
        let ev = b.voter(edge_id(u, v), 1, 0);
        b.edge(ev, vs[u]);
        b.edge(ev, vs[v]);
    }
    let dummies = n.saturating_sub(k) + m - binomial2(k) + 1;
    for t in 0..dummies {
        let d = b.voter(format!("D:{t}"), 1, 0);
        b.edge(d, x);
    }
    Ok(GadgetCertificate {
        election: b.finish(),
        params: GadgetParams {
            k: Some(k),
            designated: Some(x),
            ..Default::default()
        },
        source: format!("graph with {n} vertices and {m} edges, k = {k}"),
        expected_voters: n + m + dummies + 1 + (k + 1),
        expected_edges: 2 * m + n * (k + 1) + dummies,
    })
}

pub const BRUTE_VAR_LIMIT: usize = 20;
pub const BRUTE_VERTEX_LIMIT: usize = 16;

fn guard(what: &str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        return Err(Error::InstanceTooLarge {
            what: format!("{what} ({value})"),
            limit: limit as u64,
        });
    }
    Ok(())
}

pub fn brute_sat(f: &CnfFormula) -> Result<bool> {
    guard("variable count", f.num_vars, BRUTE_VAR_LIMIT)?;
    let n = f.num_vars;
    let mut assignment = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = mask >> i & 1 == 1;
        }
        if f.satisfied_by(&assignment) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `g` has a vertex cover of at most `k` vertices.
pub fn brute_vertex_cover(g: &SimpleGraph, k: usize) -> Result<bool> {
    guard("vertex count", g.num_vertices, BRUTE_VERTEX_LIMIT)?;
    Ok((0u32..(1 << g.num_vertices))
        .filter(|m| m.count_ones() as usize <= k)
        .any(|m| g.edges.iter().all(|&(u, v)| m >> u & 1 == 1 || m >> v & 1 == 1)))
}

/// Whether `g` has a clique of exactly `k` vertices.
pub fn brute_clique(g: &SimpleGraph, k: usize) -> Result<bool> {
    guard("vertex count", g.num_vertices, BRUTE_VERTEX_LIMIT)?;
    if k > g.num_vertices {
        return Ok(false);
    }
    Ok((0u32..(1 << g.num_vertices)).filter(|m| m.count_ones() as usize == k).any(|m| {
        let members: Vec<usize> = (0..g.num_vertices).filter(|&i| m >> i & 1 == 1).collect();
        members
            .iter()
            .enumerate()
            .all(|(a, &u)| members[a + 1..].iter().all(|&v| g.has_edge(u, v)))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_sources() {
        let f = CnfFormula::new(2, vec![vec![1, 2, 2], vec![-1, -2, -2]]).unwrap();
        assert!(brute_sat(&f).unwrap());
        assert!(brute_clique(&SimpleGraph::complete(4), 4).unwrap());
        assert!(!brute_clique(&SimpleGraph::complete(4), 5).unwrap());
        assert!(brute_vertex_cover(&SimpleGraph::path(3), 1).unwrap());
        assert!(!brute_vertex_cover(&SimpleGraph::cycle(5), 2).unwrap());
    }

    #[test]
    fn three_sat_count() {
        let f = CnfFormula::new(3, vec![vec![1, 2, 3], vec![-1, 2, -3]]).unwrap();
        let c = encode_3sat_to_bounded_max_length(&f, 2).unwrap();
        assert_eq!(c.election.len(), 12);
        assert_eq!(c.params.beta, Some(3));
        assert_eq!(c.election.max_out_degree(), 2);
        assert!(c.counts_match());
        let c3 = encode_3sat_to_bounded_max_length(&f, 4).unwrap();
        assert!(c3.counts_match());
        assert_eq!(c3.election.len(), 12 + 3 * 2 * 2);
    }

    #[test]
    fn three_sat_rejects() {
        let short = CnfFormula::new(2, vec![vec![1, 2]]).unwrap();
        assert!(matches!(
            encode_3sat_to_bounded_max_length(&short, 2),
            Err(Error::MalformedFormula(_))
        ));
        let repeated = CnfFormula::new(2, vec![vec![1, 1, 2]]).unwrap();
        assert!(matches!(
            encode_3sat_to_bounded_max_length(&repeated, 2),
            Err(Error::MalformedFormula(_))
        ));
        assert!(CnfFormula::new(2, vec![vec![3]]).is_err());
    }

    #[test]
    fn vc_power_count() {
        let c = encode_vc_to_bounded_power(&SimpleGraph::complete(4), 3, 4).unwrap();
        assert_eq!(c.election.len(), 22);
        assert!(c.counts_match());
        assert_eq!(c.election.max_out_degree(), 2);
        assert!(matches!(
            encode_vc_to_bounded_power(&SimpleGraph::cycle(4), 2, 4),
            Err(Error::NotCubic { .. })
        ));
    }

    #[test]
    fn other_counts() {
        let t = SimpleGraph::cycle(3);
        let a = encode_vc_to_reachability_abstainers(&t, 2);
        assert_eq!((a.params.beta, a.params.alpha), (Some(2), Some(1)));
        assert!(a.counts_match());
        let cav = encode_vc_to_cav(&t, 2);
        assert_eq!(cav.election.len(), 3 + 3 + 4 + 2);
        assert!(cav.counts_match());
        let cdv = encode_clique_to_cdv(&SimpleGraph::complete(4), 3).unwrap();
        assert_eq!(cdv.election.len(), 4 + 6 + 1 + 3 + 1 + 1 + 4);
        assert!(cdv.counts_match());
        assert!(matches!(encode_clique_to_cdv(&t, 1), Err(Error::DegenerateCliqueSize(1))));
    }

    #[test]
    fn parsers_round_trip() {
        let f = CnfFormula::parse_dimacs("c demo\np cnf 3 2\n1 -2 3 0\n-1 2\n -3 0\n").unwrap();
        assert_eq!(f.clauses, vec![vec![1, -2, 3], vec![-1, 2, -3]]);
        assert_eq!(CnfFormula::parse_dimacs(&f.to_dimacs()).unwrap(), f);
        assert!(CnfFormula::parse_dimacs("p cnf 1 2\n1 0\n").is_err());
        let g = SimpleGraph::parse_edge_list("# k4\n4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
        assert_eq!(g, SimpleGraph::complete(4));
        assert_eq!(SimpleGraph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(SimpleGraph::parse_edge_list("3\n0 0\n").is_err());
    }
}
