//! Elections, solutions and the metrics derived from a delegation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One voter: an external id plus the two costs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterRecord {
    pub id: String,
    pub voting_cost: u64,
    pub delegating_cost: u64,
}

impl VoterRecord {
    pub fn new(id: impl Into<String>, voting_cost: u64, delegating_cost: u64) -> Self {
        VoterRecord {
            id: id.into(),
            voting_cost,
            delegating_cost,
        }
    }
}

/// Returns true if `id` is a nonempty string over `[A-Za-z0-9_:.-]`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '-'))
}

/// A delegation graph with voting and delegating costs.
///
/// Voters are addressed by dense indices in insertion order. Edge `i -> j`
/// means `i` approves `j` as a delegate. Adjacency lists are kept sorted so
/// every traversal visits neighbors in ascending index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Election {
    voters: Vec<VoterRecord>,
    lookup: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    num_edges: usize,
}

impl Election {
    pub fn new(voters: Vec<VoterRecord>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = voters.len();
        let mut lookup = HashMap::with_capacity(n);
        for (i, v) in voters.iter().enumerate() {
            if !is_valid_id(&v.id) {
                return Err(Error::InvalidElection(format!("invalid voter id {:?}", v.id)));
            }
            if lookup.insert(v.id.clone(), i).is_some() {
                return Err(Error::InvalidElection(format!("duplicate voter id {:?}", v.id)));
            }
        }
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidElection(format!("edge {i}->{j} out of range")));
            }
            if i == j {
                return Err(Error::InvalidElection(format!("self-loop on {}", voters[i].id)));
            }
            out[i].push(j);
            inc[j].push(i);
        }
        let mut num_edges = 0;
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if before != list.len() {
                return Err(Error::InvalidElection("duplicate edge".into()));
            }
        }
        for list in &out {
            num_edges += list.len();
        }
        Ok(Election {
            voters,
            lookup,
            out,
            inc,
            num_edges,
        })
    }

    /// Builds an election from `(id, voting_cost, delegating_cost)` triples and id pairs.
    pub fn from_named(voters: &[(&str, u64, u64)], edges: &[(&str, &str)]) -> Result<Self> {
        let records: Vec<VoterRecord> = voters.iter().map(|&(id, v, d)| VoterRecord::new(id, v, d)).collect();
        let index: HashMap<&str, usize> = voters.iter().enumerate().map(|(i, v)| (v.0, i)).collect();
        let mut pairs = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) else {
                return Err(Error::InvalidElection(format!("edge {a}->{b} names an unknown voter")));
            };
            pairs.push((i, j));
        }
        Election::new(records, pairs)
    }

    pub fn len(&self) -> usize {
        self.voters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voters.is_empty()
    }

    pub fn voters(&self) -> &[VoterRecord] {
        &self.voters
    }

    pub fn id(&self, i: usize) -> &str {
        &self.voters[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn voting_cost(&self, i: usize) -> u64 {
        self.voters[i].voting_cost
    }

    pub fn delegating_cost(&self, i: usize) -> u64 {
        self.voters[i].delegating_cost
    }

    /// `v(i) - d(i)`: the extra cost of casting instead of delegating.
    pub fn excess(&self, i: usize) -> i64 {
        self.voters[i].voting_cost as i64 - self.voters[i].delegating_cost as i64
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.inc[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i].binary_search(&j).is_ok()
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
    }

    /// Largest out-degree; 0 for an empty election.
    pub fn max_out_degree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sum of delegating costs over all voters.
    pub fn total_delegating_cost(&self) -> u64 {
        self.voters.iter().map(|v| v.delegating_cost).sum()
    }

    /// Cost of the casting set `casting` (delegation choices do not affect cost).
    pub fn cost_of_casting(&self, casting: impl Fn(usize) -> bool) -> u64 {
        (0..self.len())
            .map(|i| if casting(i) { self.voting_cost(i) } else { self.delegating_cost(i) })
            .sum()
    }

    /// Sub-election on the voters with `keep[i]`, preserving relative order.
    /// Returns the new election and the old-to-new index map.
    pub fn induced(&self, keep: &[bool]) -> (Election, Vec<Option<usize>>) {
        let mut map = vec![None; self.len()];
        let mut voters = Vec::new();
        for i in 0..self.len() {
            if keep[i] {
                map[i] = Some(voters.len());
                voters.push(self.voters[i].clone());
            }
        }
        let edges: Vec<(usize, usize)> = self.edges().filter_map(|(i, j)| Some((map[i]?, map[j]?))).collect();
        let e = Election::new(voters, edges).expect("sub-election of a valid election is valid");
        (e, map)
    }

    /// Copy with the listed voters removed together with their incident edges.
    pub fn without_voters(&self, removed: &[usize]) -> (Election, Vec<Option<usize>>) {
        let mut keep = vec![true; self.len()];
        for &r in removed {
            keep[r] = false;
        }
        self.induced(&keep)
    }

    /// Copy with edges added and removed. Adding an existing edge or
    /// removing a missing one is an error.
    pub fn with_edge_changes(&self, add: &[(usize, usize)], remove: &[(usize, usize)]) -> Result<Election> {
        let mut set: BTreeSet<(usize, usize)> = self.edges().collect();
        for e in remove {
            if !set.remove(e) {
                return Err(Error::InvalidParameter(format!("edge {}->{} is not present", e.0, e.1)));
            }
        }
        for &e in add {
            if !set.insert(e) {
                return Err(Error::InvalidParameter(format!("edge {}->{} already present", e.0, e.1)));
            }
        }
        Election::new(self.voters.clone(), set)
    }

    /// Copy with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Election {
        let voters = self
            .voters
            .iter()
            .map(|v| VoterRecord::new(v.id.clone(), v.voting_cost * factor, v.delegating_cost * factor))
            .collect();
        Election::new(voters, self.edges().collect::<Vec<_>>()).expect("scaling keeps validity")
    }
}

/// A casting set `C` and one chosen out-edge for every voter outside `C`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub casting: BTreeSet<usize>,
    pub delegation: BTreeMap<usize, usize>,
}

impl Solution {
    /// From a per-voter choice: `None` casts, `Some(j)` delegates to `j`.
    pub fn from_choices(choices: &[Option<usize>]) -> Self {
        let mut s = Solution::default();
        for (i, c) in choices.iter().enumerate() {
            match c {
                None => {
                    s.casting.insert(i);
                }
                Some(j) => {
                    s.delegation.insert(i, *j);
                }
            }
        }
        s
    }

    pub fn cost(&self, e: &Election) -> u64 {
        e.cost_of_casting(|i| self.casting.contains(&i))
    }
}

/// A nonnegative cost budget.
///
/// Zero is accepted: the reduction gadgets produce it for `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Budget(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    /// Some delegation walk revisits a voter before reaching a caster.
    DelegationCycle,
}

/// Metrics of a solution. Entries exist only for voters whose walk ends at a caster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub total_cost: u64,
    /// Casting voter to `|R_j| + 1`.
    pub power: BTreeMap<usize, usize>,
    /// Delegator to the number of hops to its representative.
    pub length: BTreeMap<usize, usize>,
    pub representative: BTreeMap<usize, usize>,
    pub max_length: usize,
    /// Casting voter to the sum of path lengths of the voters it represents.
    pub sum_length: BTreeMap<usize, usize>,
    pub feasibility: Feasibility,
}

impl SolveReport {
    pub fn is_feasible(&self) -> bool {
        self.feasibility == Feasibility::Feasible
    }

    pub fn max_power(&self) -> usize {
        self.power.values().copied().max().unwrap_or(0)
    }

    pub fn max_sum_length(&self) -> usize {
        self.sum_length.values().copied().max().unwrap_or(0)
    }
}

/// Checks that `s` is well formed for `e` and reports its metrics.
///
/// Structural problems are errors; a walk that cycles produces a report
/// marked [`Feasibility::DelegationCycle`].
pub fn validate_solution(e: &Election, s: &Solution) -> Result<SolveReport> {
    let n = e.len();
    if let Some(&c) = s.casting.iter().find(|&&c| c >= n) {
        return Err(Error::MalformedSolution(format!("casting voter {c} out of range")));
    }
    let mut choice: Vec<Option<usize>> = vec![None; n];
    for (&i, &j) in &s.delegation {
        if i >= n || j >= n {
            return Err(Error::MalformedSolution(format!("delegation {i}->{j} out of range")));
        }
        if s.casting.contains(&i) {
            return Err(Error::MalformedSolution(format!("casting voter {} also delegates", e.id(i))));
        }
        if !e.has_edge(i, j) {
            return Err(Error::MalformedSolution(format!(
                "chosen edge {}->{} is not in the election",
                e.id(i),
                e.id(j)
            )));
        }
        choice[i] = Some(j);
    }
    for i in 0..n {
        if !s.casting.contains(&i) && choice[i].is_none() {
            return Err(Error::MalformedSolution(format!("voter {} has no delegation choice", e.id(i))));
        }
    }

    // 0 = unvisited, 1 = on the current walk, 2 = resolved, 3 = ends in a cycle.
    let mut state = vec![0u8; n];
    let mut rep = vec![usize::MAX; n];
    let mut len = vec![0usize; n];
    for &c in &s.casting {
        state[c] = 2;
        rep[c] = c;
    }
    let mut walk = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        walk.clear();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            walk.push(cur);
            cur = choice[cur].expect("delegators have a choice");
        }
        let end_state = if state[cur] == 2 { 2 } else { 3 };
        for &w in walk.iter().rev() {
            state[w] = end_state;
            if end_state == 2 {
                let next = choice[w].unwrap();
                rep[w] = rep[next];
                len[w] = len[next] + 1;
            }
        }
    }

    let mut report = SolveReport {
        total_cost: s.cost(e),
        power: s.casting.iter().map(|&c| (c, 1)).collect(),
        length: BTreeMap::new(),
        representative: BTreeMap::new(),
        max_length: 0,
        sum_length: s.casting.iter().map(|&c| (c, 0)).collect(),
        feasibility: Feasibility::Feasible,
    };
    for i in 0..n {
        if s.casting.contains(&i) {
            continue;
        }
        if state[i] == 3 {
            report.feasibility = Feasibility::DelegationCycle;
            continue;
        }
        let r = rep[i];
        report.representative.insert(i, r);
        report.length.insert(i, len[i]);
        *report.power.get_mut(&r).unwrap() += 1;
        *report.sum_length.get_mut(&r).unwrap() += len[i];
        report.max_length = report.max_length.max(len[i]);
    }
    Ok(report)
}

/// Like [`validate_solution`] but rejects infeasible solutions.
pub fn metrics(e: &Election, s: &Solution) -> Result<SolveReport> {
    let report = validate_solution(e, s)?;
    if !report.is_feasible() {
        return Err(Error::InfeasibleSolution);
    }
    Ok(report)
}

/// Largest out-degree of the delegation graph.
pub fn max_out_degree(e: &Election) -> usize {
    e.max_out_degree()
}
