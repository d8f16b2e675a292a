//! Unconstrained cost minimization over general delegation graphs.
//!
//! Without length or power bounds the only requirement is that every
//! delegation walk ends at a caster. Voters with `v < d` or no approved
//! delegate always cast, every sink component of the condensation needs a
//! caster, and everyone else delegates along a reverse BFS tree.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{validate_solution, Budget, Election, Solution, SolveReport};
use crate::subsets::{count_subsets, visit_subsets};
use crate::Limits;

/// Strongly connected components and the DAG between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condensation {
    /// Components ordered by their smallest member; members ascending.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// Deduplicated, sorted edges between component indices.
    pub dag_edges: Vec<(usize, usize)>,
    /// Components without outgoing DAG edges, ascending.
    pub sinks: Vec<usize>,
}

/// Iterative Tarjan on the voters with `alive[i]`. Returns the component id
/// of each live voter (`usize::MAX` for dead ones) and the component count.
pub(crate) fn tarjan(e: &Election, alive: &[bool]) -> (Vec<usize>, usize) {
    let n = e.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for s in 0..n {
        if !alive[s] || index[s] != usize::MAX {
            continue;
        }
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;
        call.push((s, 0));
        while let Some(&(v, pos)) = call.last() {
            let outs = e.out_neighbors(v);
            if pos < outs.len() {
                call.last_mut().unwrap().1 += 1;
                let w = outs[pos];
                if !alive[w] {
                    continue;
                }
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

/// Computes the condensation of the delegation graph.
pub fn condense(e: &Election) -> Condensation {
    let n = e.len();
    let (raw, count) = tarjan(e, &vec![true; n]);
    // Renumber by smallest member; scanning voters in order does exactly that.
    let mut renumber = vec![usize::MAX; count];
    let mut components: Vec<Vec<usize>> = Vec::with_capacity(count);
    for i in 0..n {
        let c = raw[i];
        if renumber[c] == usize::MAX {
            renumber[c] = components.len();
            components.push(Vec::new());
        }
        components[renumber[c]].push(i);
    }
    let component_of: Vec<usize> = raw.iter().map(|&c| renumber[c]).collect();
    let mut dag_edges: Vec<(usize, usize)> = e
        .edges()
        .map(|(i, j)| (component_of[i], component_of[j]))
        .filter(|(a, b)| a != b)
        .collect();
    dag_edges.sort_unstable();
    dag_edges.dedup();
    let mut has_out = vec![false; components.len()];
    for &(a, _) in &dag_edges {
        has_out[a] = true;
    }
    let sinks = (0..components.len()).filter(|&c| !has_out[c]).collect();
    Condensation {
        components,
        component_of,
        dag_edges,
        sinks,
    }
}

/// Sink components of the live subgraph, each as an ascending member list.
fn live_sinks(e: &Election, alive: &[bool]) -> Vec<Vec<usize>> {
    let (comp, count) = tarjan(e, alive);
    let mut is_sink = vec![true; count];
    let mut members = vec![Vec::new(); count];
    for i in 0..e.len() {
        if !alive[i] {
            continue;
        }
        members[comp[i]].push(i);
        if e.out_neighbors(i).iter().any(|&j| alive[j] && comp[j] != comp[i]) {
            is_sink[comp[i]] = false;
        }
    }
    let mut sinks: Vec<Vec<usize>> = members.into_iter().zip(is_sink).filter(|(_, s)| *s).map(|(m, _)| m).collect();
    sinks.sort();
    sinks
}

/// Voters of the live subgraph that must cast: `v < d` or no live delegate.
fn always_casting(e: &Election, alive: &[bool]) -> Vec<bool> {
    (0..e.len())
        .map(|i| alive[i] && (e.excess(i) < 0 || !e.out_neighbors(i).iter().any(|&j| alive[j])))
        .collect()
}

/// The greedy casting set on the live subgraph.
fn greedy_casting(e: &Election, alive: &[bool]) -> Vec<bool> {
    let mut casting = always_casting(e, alive);
    for sink in live_sinks(e, alive) {
        if sink.iter().any(|&i| casting[i]) {
            continue;
        }
        // v(u) + sum of d over the rest of the sink is minimized by the smallest excess.
        let u = *sink.iter().min_by_key(|&&i| (e.excess(i), i)).unwrap();
        casting[u] = true;
    }
    casting
}

/// Delegation choices by reverse BFS from the casting set: casters are
/// seeded in ascending order and each voter adopts the first voter that
/// discovers it. Returns `None` if some live voter cannot reach a caster.
pub fn bfs_delegation(e: &Election, casting: &[bool], alive: &[bool]) -> Option<Vec<Option<usize>>> {
    let n = e.len();
    let mut choice = vec![None; n];
    let mut seen = casting.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| casting[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in e.in_neighbors(j) {
            if alive[i] && !seen[i] {
                seen[i] = true;
                choice[i] = Some(j);
                queue.push_back(i);
            }
        }
    }
    (0..n).all(|i| !alive[i] || seen[i]).then_some(choice)
}

fn cost_on(e: &Election, casting: &[bool], alive: &[bool]) -> u64 {
    (0..e.len())
        .filter(|&i| alive[i])
        .map(|i| if casting[i] { e.voting_cost(i) } else { e.delegating_cost(i) })
        .sum()
}

/// A cost-minimizing feasible solution and its metrics.
pub fn solve_reachability(e: &Election) -> (Solution, SolveReport) {
    let alive = vec![true; e.len()];
    let casting = greedy_casting(e, &alive);
    let choice = bfs_delegation(e, &casting, &alive).expect("greedy casting set covers every sink");
    let solution = Solution::from_choices(&choice);
    let report = validate_solution(e, &solution).expect("greedy output is well formed");
    (solution, report)
}

/// Minimum cost of a feasible solution.
pub fn min_cost(e: &Election) -> u64 {
    let alive = vec![true; e.len()];
    cost_on(e, &greedy_casting(e, &alive), &alive)
}

/// Whether some feasible solution costs at most `b`.
pub fn decide_reachability(e: &Election, b: Budget) -> bool {
    min_cost(e) <= b.0
}

/// Result of [`solve_with_abstainers`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstainerWitness {
    /// Removed voters, as indices of the original election.
    pub abstainers: Vec<usize>,
    /// The election left after removing them.
    pub residual: Election,
    /// A cost-minimizing solution of `residual`, in its own indices.
    pub solution: Solution,
    pub cost: u64,
}

/// Limit on the number of abstainer sets tried without `force`.
pub const ABSTAINER_SUBSET_LIMIT: u64 = 10_000_000;

/// Searches for at most `alpha` voters whose removal leaves an election
/// solvable within `b`. Sets are tried smallest first, lexicographically
/// within a size, and the first success is returned.
pub fn solve_with_abstainers(e: &Election, b: Budget, alpha: usize, limits: Limits) -> Result<Option<AbstainerWitness>> {
    let n = e.len();
    if alpha > n {
        return Err(Error::InvalidParameter(format!("alpha {alpha} exceeds the {n} voters")));
    }
    limits.check("abstainer subsets", count_subsets(n, alpha), ABSTAINER_SUBSET_LIMIT)?;
    let mut alive = vec![true; n];
    let mut found: Option<Vec<usize>> = None;
    visit_subsets(n, alpha, |set| {
        for &i in set {
            alive[i] = false;
        }
        let ok = cost_on(e, &greedy_casting(e, &alive), &alive) <= b.0;
        for &i in set {
            alive[i] = true;
        }
        if ok {
            found = Some(set.to_vec());
        }
        ok
    });
    Ok(found.map(|abstainers| {
        let (residual, _) = e.without_voters(&abstainers);
        let (solution, report) = solve_reachability(&residual);
        AbstainerWitness {
            abstainers,
            residual,
            solution,
            cost: report.total_cost,
        }
    }))
}

/// The family of cost-minimizing casting sets, described by its free choices.
///
/// Every member contains `always`. Each element of `free` may be added or
/// not, each group in `zero_sinks` contributes a nonempty subset of itself,
/// and each group in `tied_sinks` contributes exactly one of its members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMinimizingSets {
    pub always: Vec<bool>,
    pub free: Vec<usize>,
    pub zero_sinks: Vec<Vec<usize>>,
    pub tied_sinks: Vec<Vec<usize>>,
}

impl CostMinimizingSets {
    pub fn new(e: &Election) -> Self {
        let n = e.len();
        let alive = vec![true; n];
        let always = always_casting(e, &alive);
        let mut in_zero_sink = vec![false; n];
        let mut zero_sinks = Vec::new();
        let mut tied_sinks = Vec::new();
        for sink in live_sinks(e, &alive) {
            if sink.iter().any(|&i| always[i]) {
                continue;
            }
            let zeros: Vec<usize> = sink.iter().copied().filter(|&i| e.excess(i) == 0).collect();
            if zeros.is_empty() {
                let best = sink.iter().map(|&i| e.excess(i)).min().unwrap();
                tied_sinks.push(sink.iter().copied().filter(|&i| e.excess(i) == best).collect());
            } else {
                for &z in &zeros {
                    in_zero_sink[z] = true;
                }
                zero_sinks.push(zeros);
            }
        }
        let free = (0..n).filter(|&i| !always[i] && !in_zero_sink[i] && e.excess(i) == 0).collect();
        CostMinimizingSets {
            always,
            free,
            zero_sinks,
            tied_sinks,
        }
    }

    /// Number of distinct cost-minimizing casting sets, saturating.
    pub fn count(&self) -> u128 {
        let mut total: u128 = 1u128.checked_shl(self.free.len() as u32).unwrap_or(u128::MAX);
        for z in &self.zero_sinks {
            let options = 1u128.checked_shl(z.len() as u32).map_or(u128::MAX, |p| p - 1);
            total = total.saturating_mul(options);
        }
        for t in &self.tied_sinks {
            total = total.saturating_mul(t.len() as u128);
        }
        total
    }

    /// Calls `f` on every member as a membership vector; stops when it returns true.
    pub fn for_each(&self, mut f: impl FnMut(&[bool]) -> bool) -> bool {
        // Mixed-radix counter: one digit per free voter, zero sink and tied sink.
        let mut radices: Vec<u64> = Vec::new();
        radices.extend(std::iter::repeat_n(2, self.free.len()));
        radices.extend(self.zero_sinks.iter().map(|z| (1u64 << z.len()) - 1));
        radices.extend(self.tied_sinks.iter().map(|t| t.len() as u64));
        let mut digits = vec![0u64; radices.len()];
        let mut set = self.always.clone();
        loop {
            set.copy_from_slice(&self.always);
            let mut d = 0;
            for &i in &self.free {
                set[i] = digits[d] == 1;
                d += 1;
            }
            for z in &self.zero_sinks {
                let mask = digits[d] + 1;
                for (b, &i) in z.iter().enumerate() {
                    set[i] = mask >> b & 1 == 1;
                }
                d += 1;
            }
            for t in &self.tied_sinks {
                set[t[digits[d] as usize]] = true;
                d += 1;
            }
            if f(&set) {
                return true;
            }
            let Some(pos) = (0..digits.len()).find(|&p| digits[p] + 1 < radices[p]) else {
                return false;
            };
            digits[pos] += 1;
            for q in 0..pos {
                digits[q] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample;

    #[test]
    fn sample_optimum() {
        let e = sample();
        let (s, r) = solve_reachability(&e);
        assert_eq!(s.casting.iter().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(r.total_cost, 8);
        assert_eq!(r.power[&0], 6);
        assert!(decide_reachability(&e, Budget(8)));
        assert!(!decide_reachability(&e, Budget(7)));
    }

    #[test]
    fn sample_condensation() {
        let c = condense(&sample());
        assert_eq!(c.components[0], vec![0, 1]);
        assert_eq!(c.components.len(), 5);
        assert_eq!(c.sinks, vec![0]);
        assert!(c.dag_edges.contains(&(c.component_of[4], c.component_of[3])));
    }

    #[test]
    fn equal_costs_delegate() {
        let e = Election::from_named(&[("u", 2, 2), ("w", 3, 1)], &[("u", "w")]).unwrap();
        let (s, _) = solve_reachability(&e);
        assert_eq!(s.delegation.get(&0), Some(&1));
    }

    #[test]
    fn empty_election() {
        let e = Election::new(vec![], []).unwrap();
        let (s, r) = solve_reachability(&e);
        assert!(s.casting.is_empty());
        assert_eq!(r.total_cost, 0);
    }

    fn triangle_gadget() -> Election {
        // Vertex covers of a triangle: vertex voters V0..V2, edge voters approve both ends.
        Election::from_named(
            &[
                ("V0", 1, 0),
                ("V1", 1, 0),
                ("V2", 1, 0),
                ("E01", 1, 0),
                ("E02", 1, 0),
                ("E12", 1, 0),
            ],
            &[
                ("E01", "V0"),
                ("E01", "V1"),
                ("E02", "V0"),
                ("E02", "V2"),
                ("E12", "V1"),
                ("E12", "V2"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn abstainers_on_triangle() {
        let e = triangle_gadget();
        let w = solve_with_abstainers(&e, Budget(2), 1, Limits::default()).unwrap().unwrap();
        assert_eq!(w.abstainers.len(), 1);
        assert!(w.cost <= 2);
        assert!(solve_with_abstainers(&e, Budget(1), 1, Limits::default()).unwrap().is_none());
    }

    #[test]
    fn abstainers_alpha_zero_matches_decide() {
        let e = sample();
        for beta in 6..10 {
            let got = solve_with_abstainers(&e, Budget(beta), 0, Limits::default()).unwrap().is_some();
            assert_eq!(got, decide_reachability(&e, Budget(beta)));
        }
    }

    #[test]
    fn abstainers_star_with_zero_budget() {
        let e = Election::from_named(
            &[
                ("V0", 1, 0),
                ("V1", 1, 0),
                ("V2", 1, 0),
                ("V3", 1, 0),
                ("E1", 1, 0),
                ("E2", 1, 0),
                ("E3", 1, 0),
            ],
            &[("E1", "V0"), ("E1", "V1"), ("E2", "V0"), ("E2", "V2"), ("E3", "V0"), ("E3", "V3")],
        )
        .unwrap();
        assert!(solve_with_abstainers(&e, Budget(0), 4, Limits::default()).unwrap().is_none());
    }

    #[test]
    fn cost_minimizing_family_on_sample() {
        let fam = CostMinimizingSets::new(&sample());
        assert_eq!(fam.count(), 1);
        let mut sets = Vec::new();
        fam.for_each(|s| {
            sets.push(s.to_vec());
            false
        });
        assert_eq!(sets, vec![vec![true, false, false, false, false, false]]);
    }

    #[test]
    fn cost_minimizing_family_with_ties() {
        // 2-cycle with tied excess, plus a zero-excess voter pointing at it.
        let e = Election::from_named(&[("u", 3, 1), ("w", 4, 2), ("z", 1, 1)], &[("u", "w"), ("w", "u"), ("z", "u")]).unwrap();
        let fam = CostMinimizingSets::new(&e);
        assert_eq!(fam.count(), 4);
        let mut n = 0;
        fam.for_each(|s| {
            n += 1;
            assert_eq!(e.cost_of_casting(|i| s[i]), min_cost(&e));
            false
        });
        assert_eq!(n, 4);
    }
}
