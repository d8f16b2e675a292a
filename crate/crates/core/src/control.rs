//! Super-voter control.
//!
//! A designated voter `x` is the sole super-voter when, in every
//! cost-minimizing feasible solution, `x` casts and has strictly more power
//! than every other caster. A controller may add unregistered voters,
//! delete voters, or add or delete edges, within a budget `k`, to reach
//! that state. For out-degree at most one the constructive variants are
//! solved by the greedy procedures below; [`solve_control_exhaustive`]
//! handles everything else by enumeration.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::constrained::FunctionalForest;
use crate::error::{Error, Result};
use crate::model::{metrics, Election, Solution};
use crate::reachability::{bfs_delegation, min_cost, CostMinimizingSets};
use crate::subsets::count_subsets;
use crate::Limits;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    AddVoters,
    DeleteVoters,
    AddEdges,
    DeleteEdges,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    Constructive,
    Destructive,
}

/// A control problem. Indices refer to `election`, which holds every voter,
/// registered or not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlInstance {
    pub election: Election,
    /// Voters outside the current election that may be added.
    pub unregistered: BTreeSet<usize>,
    pub designated: usize,
    pub k: usize,
    pub action: ControlAction,
    pub mode: ControlMode,
    /// Edges the controller may add; all absent edges when `None`.
    pub candidate_edges: Option<Vec<(usize, usize)>>,
}

/// Actions chosen by a control solver, as indices of the instance election.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlWitness {
    Voters(Vec<usize>),
    Edges(Vec<(usize, usize)>),
}

impl ControlWitness {
    pub fn len(&self) -> usize {
        match self {
            ControlWitness::Voters(v) => v.len(),
            ControlWitness::Edges(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ControlInstance {
    pub fn new(election: Election, designated: usize, k: usize, action: ControlAction) -> Self {
        ControlInstance {
            election,
            unregistered: BTreeSet::new(),
            designated,
            k,
            action,
            mode: ControlMode::Constructive,
            candidate_edges: None,
        }
    }

    pub fn is_registered(&self, i: usize) -> bool {
        !self.unregistered.contains(&i)
    }

    fn validate(&self) -> Result<()> {
        let n = self.election.len();
        if self.designated >= n {
            return Err(Error::InvalidParameter(format!(
                "designated voter {} out of range",
                self.designated
            )));
        }
        if let Some(&u) = self.unregistered.iter().find(|&&u| u >= n) {
            return Err(Error::InvalidParameter(format!("unregistered voter {u} out of range")));
        }
        if self.action != ControlAction::AddVoters && !self.unregistered.is_empty() {
            return Err(Error::InvalidParameter("unregistered voters only apply to voter addition".into()));
        }
        if let Some(edges) = &self.candidate_edges {
            for &(i, j) in edges {
                if i >= n || j >= n || i == j || self.election.has_edge(i, j) {
                    return Err(Error::InvalidParameter(format!("candidate edge {i}->{j} is not an absent edge")));
                }
            }
        }
        Ok(())
    }

    /// The election after applying `witness`, and the new index of `x`.
    pub fn apply(&self, witness: &ControlWitness) -> Result<(Election, usize)> {
        let e = &self.election;
        let mut keep: Vec<bool> = (0..e.len()).map(|i| self.is_registered(i)).collect();
        let mut add = Vec::new();
        let mut remove = Vec::new();
        match (self.action, witness) {
            (ControlAction::AddVoters, ControlWitness::Voters(vs)) => {
                for &v in vs {
                    keep[v] = true;
                }
            }
            (ControlAction::DeleteVoters, ControlWitness::Voters(vs)) => {
                for &v in vs {
                    keep[v] = false;
                }
            }
            (ControlAction::AddEdges, ControlWitness::Edges(es)) => add = es.clone(),
            (ControlAction::DeleteEdges, ControlWitness::Edges(es)) => remove = es.clone(),
            _ => return Err(Error::InvalidParameter("witness kind does not match the action".into())),
        }
        let (sub, map) = e.induced(&keep);
        let x = map[self.designated].ok_or_else(|| Error::InvalidParameter("designated voter is not in the resulting election".into()))?;
        let remap = |list: &[(usize, usize)]| -> Result<Vec<(usize, usize)>> {
            list.iter()
                .map(|&(i, j)| match (map[i], map[j]) {
                    (Some(a), Some(b)) => Ok((a, b)),
                    _ => Err(Error::InvalidParameter(format!("edge {i}->{j} touches an unregistered voter"))),
                })
                .collect()
        };
        let sub = if add.is_empty() && remove.is_empty() {
            sub
        } else {
            sub.with_edge_changes(&remap(&add)?, &remap(&remove)?)?
        };
        Ok((sub, x))
    }

    /// The election of registered voters and the index map into it.
    fn registered_election(&self) -> (Election, Vec<Option<usize>>) {
        let keep: Vec<bool> = (0..self.election.len()).map(|i| self.is_registered(i)).collect();
        self.election.induced(&keep)
    }
}

/// Outcome of a sole-super-voter check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperVoterVerdict {
    pub holds: bool,
    /// A cost-minimizing solution in which `x` is not the unique maximum, when `holds` is false.
    pub witness: Option<Solution>,
}

impl SuperVoterVerdict {
    fn holds() -> Self {
        SuperVoterVerdict {
            holds: true,
            witness: None,
        }
    }

    fn fails(witness: Solution) -> Self {
        SuperVoterVerdict {
            holds: false,
            witness: Some(witness),
        }
    }
}

/// Structural facts about a functional election used by the greedy procedures.
struct Analysis<'a> {
    e: &'a Election,
    forest: FunctionalForest,
}

impl<'a> Analysis<'a> {
    fn new(e: &'a Election) -> Result<Self> {
        Ok(Analysis {
            e,
            forest: FunctionalForest::new(e)?,
        })
    }

    fn excess(&self, i: usize) -> i64 {
        self.e.excess(i)
    }

    fn is_root(&self, i: usize) -> bool {
        self.forest.succ[i].is_none()
    }

    fn cycle_of(&self, i: usize) -> Option<&[usize]> {
        let c = &self.forest.components[self.forest.component_of[i]].cycle;
        (c.contains(&i)).then_some(c.as_slice())
    }

    /// `i` is on a cycle of nonnegative-excess voters and uniquely minimizes excess there.
    fn is_forced(&self, i: usize) -> bool {
        let Some(cycle) = self.cycle_of(i) else {
            return false;
        };
        cycle.iter().all(|&c| self.excess(c) >= 0) && cycle.iter().all(|&c| c == i || self.excess(c) > self.excess(i))
    }

    fn casting_in_all(&self, i: usize) -> bool {
        self.excess(i) < 0 || self.is_root(i) || self.is_forced(i)
    }

    /// `i` casts in at least one cost-minimizing solution.
    fn may_cast(&self, i: usize) -> bool {
        if self.excess(i) <= 0 || self.is_root(i) {
            return true;
        }
        match self.cycle_of(i) {
            Some(cycle) if cycle.iter().all(|&c| self.excess(c) > 0) => cycle.iter().all(|&c| self.excess(c) >= self.excess(i)),
            _ => false,
        }
    }

    /// Voters with a path to `x` avoiding `blocked` voters, `x`'s own out-edge ignored.
    fn region(&self, x: usize, blocked: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut seen = vec![false; self.e.len()];
        seen[x] = true;
        let mut out = Vec::new();
        let mut queue = VecDeque::from([x]);
        while let Some(v) = queue.pop_front() {
            for &c in &self.forest.preds[v] {
                if !seen[c] && !blocked(c) {
                    seen[c] = true;
                    out.push(c);
                    queue.push_back(c);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Voters that delegate to `x` in every cost-minimizing solution where `x` casts.
    fn followers(&self, x: usize) -> Vec<usize> {
        self.region(x, |i| self.excess(i) <= 0)
    }

    /// Voters that can be represented by `y` in some cost-minimizing solution.
    fn absorbable(&self, y: usize) -> Vec<usize> {
        self.region(y, |i| self.excess(i) < 0)
    }

    fn min_power(&self, x: usize) -> usize {
        1 + self.followers(x).len()
    }

    fn max_power(&self, y: usize) -> usize {
        1 + self.absorbable(y).len()
    }

    /// Builds a cost-minimizing solution casting `include`, leaving `exclude`
    /// delegating where the structure allows it.
    fn solution_with(&self, include: Option<usize>, exclude: &[bool], avoid: Option<usize>) -> Solution {
        let e = self.e;
        let n = e.len();
        let mut casting: Vec<bool> = (0..n)
            .map(|i| self.excess(i) < 0 || self.is_root(i) || (self.excess(i) == 0 && !exclude[i]))
            .collect();
        if let Some(y) = include {
            casting[y] = true;
        }
        for comp in &self.forest.components {
            if comp.cycle.is_empty() || comp.cycle.iter().any(|&c| casting[c]) {
                continue;
            }
            let best = comp.cycle.iter().map(|&c| self.excess(c)).min().unwrap();
            let pick = comp
                .cycle
                .iter()
                .copied()
                .filter(|&c| self.excess(c) == best && Some(c) != avoid)
                .min()
                .expect("a non-forced cycle has an alternative minimizer");
            casting[pick] = true;
        }
        let choices: Vec<Option<usize>> = (0..n).map(|i| if casting[i] { None } else { self.forest.succ[i] }).collect();
        let s = Solution::from_choices(&choices);
        debug_assert_eq!(s.cost(e), min_cost(e));
        s
    }

    fn verdict(&self, x: usize) -> SuperVoterVerdict {
        let n = self.e.len();
        if !self.casting_in_all(x) {
            let mut exclude = vec![false; n];
            exclude[x] = true;
            return SuperVoterVerdict::fails(self.solution_with(None, &exclude, Some(x)));
        }
        let p = self.min_power(x);
        for y in 0..n {
            if y != x && self.may_cast(y) && self.max_power(y) >= p {
                let mut exclude = vec![false; n];
                for a in self.absorbable(y) {
                    exclude[a] = true;
                }
                exclude[x] = false;
                return SuperVoterVerdict::fails(self.solution_with(Some(y), &exclude, None));
            }
        }
        SuperVoterVerdict::holds()
    }
}

/// Limit on the number of cost-minimizing casting sets inspected without `force`.
pub const VERDICT_SET_LIMIT: u64 = 1 << 16;

/// Reverse BFS from `sources` through non-casting voters not yet assigned.
fn route_to(e: &Election, casting: &[bool], sources: &[usize], choice: &mut [Option<usize>], assigned: &mut [bool]) {
    let mut queue: VecDeque<usize> = sources.iter().copied().collect();
    while let Some(j) = queue.pop_front() {
        for &i in e.in_neighbors(j) {
            if !casting[i] && !assigned[i] {
                assigned[i] = true;
                choice[i] = Some(j);
                queue.push_back(i);
            }
        }
    }
}

/// Sole-super-voter check for any out-degree, by walking every cost-minimizing casting set.
///
/// For a fixed casting set, a rival `y` reaches its largest power by
/// collecting every delegator with a delegator-only path to it, while `x`
/// keeps only the delegators that cannot reach any other caster. Both
/// extremes are realized by one delegation, so comparing them decides the set.
pub fn check_by_enumeration(e: &Election, x: usize, limits: Limits) -> Result<SuperVoterVerdict> {
    let family = CostMinimizingSets::new(e);
    limits.check("cost-minimizing casting sets", family.count(), VERDICT_SET_LIMIT)?;
    let n = e.len();
    let mut witness = None;
    family.for_each(|casting| {
        if !casting[x] {
            let choice = bfs_delegation(e, casting, &vec![true; n]).expect("cost-minimizing sets are feasible");
            witness = Some(Solution::from_choices(&choice));
            return true;
        }
        let mut reachers = vec![0usize; n];
        let mut reaches_x = vec![false; n];
        let mut size = vec![0usize; n];
        for c in (0..n).filter(|&c| casting[c]) {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([c]);
            while let Some(j) = queue.pop_front() {
                for &i in e.in_neighbors(j) {
                    if !casting[i] && !seen[i] {
                        seen[i] = true;
                        queue.push_back(i);
                        reachers[i] += 1;
                        size[c] += 1;
                        if c == x {
                            reaches_x[i] = true;
                        }
                    }
                }
            }
        }
        let guaranteed = (0..n).filter(|&i| reaches_x[i] && reachers[i] == 1).count();
        let Some(y) = (0..n).find(|&y| y != x && casting[y] && size[y] >= guaranteed) else {
            return false;
        };
        let mut choice = vec![None; n];
        let mut assigned = vec![false; n];
        route_to(e, casting, &[y], &mut choice, &mut assigned);
        let others: Vec<usize> = (0..n).filter(|&c| casting[c] && c != x && c != y).collect();
        route_to(e, casting, &others, &mut choice, &mut assigned);
        route_to(e, casting, &[x], &mut choice, &mut assigned);
        witness = Some(Solution::from_choices(&choice));
        true
    });
    Ok(match witness {
        Some(w) => {
            debug_assert!(metrics(e, &w).is_ok_and(|r| r.total_cost == min_cost(e)));
            SuperVoterVerdict::fails(w)
        }
        None => SuperVoterVerdict::holds(),
    })
}

/// Whether `x` is the sole super-voter of `e`.
///
/// Uses the structural characterization when every voter approves at most
/// one delegate and [`check_by_enumeration`] otherwise.
pub fn check_sole_super_voter(e: &Election, x: usize, limits: Limits) -> Result<SuperVoterVerdict> {
    if x >= e.len() {
        return Err(Error::InvalidParameter(format!("voter {x} out of range")));
    }
    if e.max_out_degree() <= 1 {
        Ok(Analysis::new(e)?.verdict(x))
    } else {
        check_by_enumeration(e, x, limits)
    }
}

/// Whether `x` casts in every cost-minimizing solution (out-degree at most one).
///
/// True exactly when `x` prefers casting, has no delegate, or is the unique
/// cheapest breaker of a cycle on which nobody prefers casting.
pub fn is_casting_in_all(e: &Election, x: usize) -> Result<bool> {
    Ok(Analysis::new(e)?.casting_in_all(x))
}

/// Voters that delegate to `x` in every cost-minimizing solution.
pub fn guaranteed_followers(e: &Election, x: usize) -> Result<BTreeSet<usize>> {
    let a = Analysis::new(e)?;
    if !a.casting_in_all(x) {
        return Err(Error::NotGuaranteedCasting(e.id(x).to_string()));
    }
    Ok(a.followers(x).into_iter().collect())
}

/// Unconstrained voters in the subtree forest the deletion greedies work on.
///
/// Every voter outside `x`'s guaranteed region keeps its out-edge unless it
/// prefers casting or it is a zero-excess voter pointing into the region.
/// Each resulting tree or cycle component bounds the power of some possible
/// caster, and must end up strictly smaller than `p(x)`.
struct ThreatForest {
    /// Threat-forest parent, `None` for tops and region members.
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    in_region: Vec<bool>,
    /// Components whose parent links form a cycle, as member lists in cycle order.
    cycles: Vec<Vec<usize>>,
    tops: Vec<usize>,
    threshold: usize,
}

impl ThreatForest {
    fn new(a: &Analysis, x: usize) -> Self {
        let n = a.e.len();
        let mut in_region = vec![false; n];
        in_region[x] = true;
        for f in a.followers(x) {
            in_region[f] = true;
        }
        let threshold = a.min_power(x);
        let parent: Vec<Option<usize>> = (0..n)
            .map(|v| {
                if in_region[v] || a.excess(v) < 0 {
                    return None;
                }
                a.forest.succ[v].filter(|&s| !in_region[s])
            })
            .collect();
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        let tops = (0..n).filter(|&v| !in_region[v] && parent[v].is_none()).collect();
        let mut cycles = Vec::new();
        for comp in &a.forest.components {
            if !comp.cycle.is_empty() && comp.cycle.iter().all(|&c| parent[c].is_some()) {
                cycles.push(comp.cycle.clone());
            }
        }
        ThreatForest {
            parent,
            children,
            in_region,
            cycles,
            tops,
            threshold,
        }
    }

    /// Subtree of `top` in postorder, skipping `cut` voters and never crossing `stop`.
    fn postorder(&self, top: usize, cut: &[bool], stop: Option<usize>) -> Vec<usize> {
        let mut pre = vec![top];
        let mut head = 0;
        while head < pre.len() {
            let v = pre[head];
            head += 1;
            for &c in &self.children[v] {
                if !cut[c] && Some(c) != stop {
                    pre.push(c);
                }
            }
        }
        pre.reverse();
        pre
    }

    /// Bottom-up voter deletion: delete every voter whose remaining subtree reaches the threshold.
    fn delete_greedy(&self, top: usize, cut: &mut [bool], stop: Option<usize>, out: &mut Vec<usize>) -> usize {
        let mut size = vec![0usize; cut.len()];
        for v in self.postorder(top, cut, stop) {
            let s = 1 + self.children[v]
                .iter()
                .filter(|&&c| !cut[c] && Some(c) != stop)
                .map(|&c| size[c])
                .sum::<usize>();
            if s >= self.threshold {
                cut[v] = true;
                out.push(v);
                size[v] = 0;
            } else {
                size[v] = s;
            }
        }
        size[top]
    }

    /// Bottom-up edge cutting: at each voter, cut the heaviest child edges
    /// until its subtree is below the threshold. `None` if impossible.
    fn cut_greedy(&self, top: usize, cut: &mut [bool], stop: Option<usize>, out: &mut Vec<(usize, usize)>) -> Option<usize> {
        let mut size = vec![0usize; cut.len()];
        for v in self.postorder(top, cut, stop) {
            let mut kids: Vec<usize> = self.children[v].iter().copied().filter(|&c| !cut[c] && Some(c) != stop).collect();
            let mut s = 1 + kids.iter().map(|&c| size[c]).sum::<usize>();
            kids.sort_by_key(|&c| (std::cmp::Reverse(size[c]), c));
            for c in kids {
                if s < self.threshold {
                    break;
                }
                cut[c] = true;
                out.push((c, v));
                s -= size[c];
            }
            if s >= self.threshold {
                return None;
            }
            size[v] = s;
        }
        Some(size[top])
    }

    fn cycle_children(&self, cycle: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &c in cycle {
            for &ch in &self.children[c] {
                if !cycle.contains(&ch) {
                    out.push(ch);
                }
            }
        }
        out
    }

    /// Fewest voter deletions making every component smaller than the threshold.
    fn min_voter_deletions(&self) -> Vec<usize> {
        let n = self.parent.len();
        let mut cut = vec![false; n];
        let mut out = Vec::new();
        for &t in &self.tops {
            self.delete_greedy(t, &mut cut, None, &mut out);
        }
        for cycle in &self.cycles {
            // Keep the cycle and trim its hanging subtrees, or delete one cycle voter.
            let mut best: Option<Vec<usize>> = {
                let mut local = Vec::new();
                let mut c = cut.clone();
                let mut residuals = Vec::new();
                for ch in self.cycle_children(cycle) {
                    residuals.push((self.delete_greedy(ch, &mut c, None, &mut local), ch));
                }
                let mut total = cycle.len() + residuals.iter().map(|r| r.0).sum::<usize>();
                residuals.sort_by_key(|&(r, ch)| (std::cmp::Reverse(r), ch));
                for (r, ch) in residuals {
                    if total < self.threshold || r == 0 {
                        break;
                    }
                    total -= r;
                    local.push(ch);
                }
                (total < self.threshold).then_some(local)
            };
            for (pos, &w) in cycle.iter().enumerate() {
                let mut c = cut.clone();
                c[w] = true;
                let mut local = vec![w];
                let pred = cycle[(pos + cycle.len() - 1) % cycle.len()];
                if pred != w {
                    self.delete_greedy(pred, &mut c, Some(w), &mut local);
                }
                for &ch in &self.children[w] {
                    if !cycle.contains(&ch) {
                        self.delete_greedy(ch, &mut c, None, &mut local);
                    }
                }
                if best.as_ref().is_none_or(|b| local.len() < b.len()) {
                    best = Some(local);
                }
            }
            out.extend(best.expect("deleting a cycle voter always works"));
        }
        out.sort_unstable();
        out
    }

    /// Fewest edge deletions making every component smaller than the threshold.
    fn min_edge_deletions(&self, succ: &[Option<usize>]) -> Option<Vec<(usize, usize)>> {
        let n = self.parent.len();
        let mut cut = vec![false; n];
        let mut out = Vec::new();
        for &t in &self.tops {
            self.cut_greedy(t, &mut cut, None, &mut out)?;
        }
        for cycle in &self.cycles {
            let mut best: Option<Vec<(usize, usize)>> = None;
            if cycle.len() < self.threshold {
                let mut local = Vec::new();
                let mut c = cut.clone();
                let mut residuals = Vec::new();
                let mut ok = true;
                for &v in cycle {
                    for &ch in &self.children[v] {
                        if cycle.contains(&ch) {
                            continue;
                        }
                        match self.cut_greedy(ch, &mut c, None, &mut local) {
                            Some(r) => residuals.push((r, ch, v)),
                            None => ok = false,
                        }
                    }
                }
                if ok {
                    let mut total = cycle.len() + residuals.iter().map(|r| r.0).sum::<usize>();
                    residuals.sort_by_key(|&(r, ch, _)| (std::cmp::Reverse(r), ch));
                    for (r, ch, v) in residuals {
                        if total < self.threshold {
                            break;
                        }
                        total -= r;
                        local.push((ch, v));
                    }
                    best = Some(local);
                }
            }
            for &w in cycle {
                let s = succ[w].unwrap();
                let mut c = cut.clone();
                let mut local = vec![(w, s)];
                // Cutting w's out-edge makes w the top of its whole component.
                let tree = RootedCut { top: w, detached_from: s };
                if let Some(edges) = tree.run(self, &mut c) {
                    local.extend(edges);
                    if best.as_ref().is_none_or(|b| local.len() < b.len()) {
                        best = Some(local);
                    }
                }
            }
            out.extend(best?);
        }
        out.sort_unstable();
        Some(out)
    }
}

/// A cycle component re-rooted at `top` after cutting `top -> detached_from`.
struct RootedCut {
    top: usize,
    detached_from: usize,
}

impl RootedCut {
    fn run(&self, forest: &ThreatForest, cut: &mut [bool]) -> Option<Vec<(usize, usize)>> {
        // The only change is that `detached_from` loses the child `top`; the
        // postorder from `top` reaches back around the cycle to `detached_from`.
        let n = cut.len();
        let mut size = vec![0usize; n];
        let mut pre = vec![self.top];
        let mut head = 0;
        while head < pre.len() {
            let v = pre[head];
            head += 1;
            for &c in &forest.children[v] {
                if !cut[c] && !(v == self.detached_from && c == self.top) {
                    pre.push(c);
                }
            }
        }
        let mut out = Vec::new();
        for &v in pre.iter().rev() {
            let mut kids: Vec<usize> = forest.children[v]
                .iter()
                .copied()
                .filter(|&c| !cut[c] && !(v == self.detached_from && c == self.top))
                .collect();
            let mut s = 1 + kids.iter().map(|&c| size[c]).sum::<usize>();
            kids.sort_by_key(|&c| (std::cmp::Reverse(size[c]), c));
            for c in kids {
                if s < forest.threshold {
                    break;
                }
                cut[c] = true;
                out.push((c, v));
                s -= size[c];
            }
            if s >= forest.threshold {
                return None;
            }
            size[v] = s;
        }
        Some(out)
    }
}

fn require_constructive(ci: &ControlInstance, action: ControlAction) -> Result<()> {
    ci.validate()?;
    if ci.action != action {
        return Err(Error::InvalidParameter(format!(
            "instance action is {:?}, expected {:?}",
            ci.action, action
        )));
    }
    if ci.mode != ControlMode::Constructive {
        return Err(Error::ModeUnsupported(
            "destructive control has no greedy procedure; use solve_control_exhaustive".into(),
        ));
    }
    Ok(())
}

fn verify(ci: &ControlInstance, witness: ControlWitness) -> Result<Option<ControlWitness>> {
    let (e, x) = ci.apply(&witness)?;
    let ok = Analysis::new(&e)?.verdict(x).holds;
    debug_assert!(ok, "greedy witness failed the final check");
    Ok(ok.then_some(witness))
}

/// Constructive control by deleting at most `k` voters (out-degree at most one).
///
/// If `x` is not guaranteed to cast, its delegate must go first. Then the
/// cheapest set of deletions that shrinks every competing component below
/// `p(x)` is found bottom-up: a voter is deleted as soon as its remaining
/// subtree reaches `p(x)`.
pub fn solve_cdv(ci: &ControlInstance) -> Result<Option<Vec<usize>>> {
    require_constructive(ci, ControlAction::DeleteVoters)?;
    let (e, map) = ci.registered_election();
    let back: Vec<usize> = (0..ci.election.len()).filter(|&i| map[i].is_some()).collect();
    let x = map[ci.designated].ok_or_else(|| Error::InvalidParameter("designated voter must be registered".into()))?;
    let a = Analysis::new(&e)?;
    let mut deleted = Vec::new();
    let (g, gx, gback) = if a.casting_in_all(x) {
        (e.clone(), x, (0..e.len()).collect::<Vec<_>>())
    } else {
        let s = a.forest.succ[x].expect("non-root voter has a delegate");
        deleted.push(back[s]);
        let (g, m) = e.without_voters(&[s]);
        let gback = (0..e.len()).filter(|&i| m[i].is_some()).collect();
        (g, m[x].unwrap(), gback)
    };
    if deleted.len() > ci.k {
        return Ok(None);
    }
    let ga = Analysis::new(&g)?;
    debug_assert!(ga.casting_in_all(gx));
    let threat = ThreatForest::new(&ga, gx);
    for v in threat.min_voter_deletions() {
        debug_assert!(!threat.in_region[v]);
        deleted.push(back[gback[v]]);
    }
    if deleted.len() > ci.k {
        return Ok(None);
    }
    deleted.sort_unstable();
    Ok(verify(ci, ControlWitness::Voters(deleted))?.map(|w| match w {
        ControlWitness::Voters(v) => v,
        ControlWitness::Edges(_) => unreachable!(),
    }))
}

/// An item of the selection knapsack: choosing it requires choosing its parent.
struct Item {
    parent: Option<usize>,
    gain: usize,
}

/// Fewest items (at most `k`, closed under parents) so that
/// `p0 + total gain` beats every rival power that is not absorbed.
/// `rivals` pairs each rival's power with the item absorbing it, if any.
fn min_selection(items: &[Item], k: usize, p0: usize, rivals: &[(usize, Option<usize>)]) -> Option<Vec<usize>> {
    let m = items.len();
    let k = k.min(m);
    let mut thresholds: Vec<usize> = rivals.iter().map(|r| r.0).collect();
    thresholds.push(0);
    thresholds.sort_unstable();
    thresholds.dedup();
    let big: i64 = 1 << 40;
    let mut best: Option<Vec<usize>> = None;
    for &t in &thresholds {
        let mut required = vec![false; m];
        let mut possible = true;
        for &(power, absorber) in rivals {
            if power > t {
                match absorber {
                    Some(i) => required[i] = true,
                    None => possible = false,
                }
            }
        }
        if !possible {
            continue;
        }
        let need = (t + 1).saturating_sub(p0) as i64;
        let req_count = required.iter().filter(|&&r| r).count() as i64;
        let weights: Vec<i64> = items
            .iter()
            .zip(&required)
            .map(|(it, &r)| it.gain as i64 + if r { big } else { 0 })
            .collect();
        let table = knapsack(items, &weights, k);
        let found = (0..=k).find(|&c| table.best[c] >= big * req_count + need);
        if let Some(c) = found {
            if best.as_ref().is_none_or(|b| c < b.len()) {
                best = Some(table.reconstruct(c));
            }
        }
    }
    best
}

struct KnapsackTable {
    best: Vec<i64>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
    /// Per node and per merged child: the count given to that child for each total.
    node_choice: Vec<Vec<Vec<usize>>>,
    root_choice: Vec<Vec<usize>>,
}

const NEG: i64 = i64::MIN / 4;

/// Max-weight parent-closed selections of every size up to `k`.
fn knapsack(items: &[Item], weights: &[i64], k: usize) -> KnapsackTable {
    let m = items.len();
    let mut children = vec![Vec::new(); m];
    let mut roots = Vec::new();
    for (i, it) in items.iter().enumerate() {
        match it.parent {
            Some(p) => children[p].push(i),
            None => roots.push(i),
        }
    }
    let mut order = Vec::with_capacity(m);
    let mut stack: Vec<usize> = roots.clone();
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[v].iter().copied());
    }
    order.reverse();
    fn merge(acc: &[i64], sub: &[i64], k: usize) -> (Vec<i64>, Vec<usize>) {
        let mut next = acc.to_vec();
        let mut pick = vec![0usize; k + 1];
        for c in 0..=k {
            for give in 1..=c {
                if acc[c - give] > NEG && sub[give] > NEG && acc[c - give] + sub[give] > next[c] {
                    next[c] = acc[c - give] + sub[give];
                    pick[c] = give;
                }
            }
        }
        (next, pick)
    }
    let mut f: Vec<Vec<i64>> = vec![Vec::new(); m];
    let mut node_choice = vec![Vec::new(); m];
    for &v in &order {
        let mut acc = vec![NEG; k + 1];
        if k >= 1 {
            acc[1] = weights[v];
        }
        for &c in &children[v] {
            let (next, pick) = merge(&acc, &f[c], k);
            acc = next;
            node_choice[v].push(pick);
        }
        f[v] = acc;
    }
    let mut acc = vec![NEG; k + 1];
    acc[0] = 0;
    let mut root_choice = Vec::new();
    for &r in &roots {
        let (next, pick) = merge(&acc, &f[r], k);
        acc = next;
        root_choice.push(pick);
    }
    KnapsackTable {
        best: acc,
        children,
        roots,
        node_choice,
        root_choice,
    }
}

impl KnapsackTable {
    fn reconstruct(&self, count: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut c = count;
        let mut work = Vec::new();
        for (idx, &r) in self.roots.iter().enumerate().rev() {
            let give = self.root_choice[idx][c];
            if give > 0 {
                work.push((r, give));
                c -= give;
            }
        }
        while let Some((v, mut c)) = work.pop() {
            out.push(v);
            for (idx, &ch) in self.children[v].iter().enumerate().rev() {
                let give = self.node_choice[v][idx][c];
                if give > 0 {
                    work.push((ch, give));
                    c -= give;
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Constructive control by adding at most `k` unregistered voters (out-degree at most one).
///
/// Useful additions are voters preferring delegation whose delegation chain
/// runs through other added voters into `x`'s guaranteed region; each one
/// also pulls in the registered roots that approve it. The fewest additions
/// beating every remaining rival are found by a knapsack over the forest of
/// such chains. When `x` has no delegate in the registered election, or
/// would lose its status only through its root's unregistered delegate,
/// adding that delegate's chain back to `x` can turn `x` into the forced
/// voter of a new cycle; that option is tried as well.
pub fn solve_cav(ci: &ControlInstance) -> Result<Option<Vec<usize>>> {
    require_constructive(ci, ControlAction::AddVoters)?;
    let max_degree = ci.election.max_out_degree();
    if max_degree > 1 {
        return Err(Error::DegreeUnsupported { max_degree });
    }
    if !ci.is_registered(ci.designated) {
        return Ok(None);
    }
    let full = &ci.election;
    let n = full.len();
    let succ = |i: usize| full.out_neighbors(i).first().copied();
    let x = ci.designated;
    let registered: Vec<bool> = (0..n).map(|i| ci.is_registered(i)).collect();

    let mut options: Vec<(Vec<bool>, Vec<usize>)> = vec![(registered.clone(), Vec::new())];
    // Root of x's tree in the registered election, if x's component is a tree.
    let mut r = x;
    let mut steps = 0;
    while let Some(s) = succ(r).filter(|&s| registered[s]) {
        r = s;
        steps += 1;
        if steps > n {
            break;
        }
    }
    if steps <= n && full.excess(x) >= 0 {
        if let Some(u0) = succ(r).filter(|&s| !registered[s]) {
            // Registered voters with a registered path to x.
            let mut reaches_x = vec![false; n];
            reaches_x[x] = true;
            let mut queue = VecDeque::from([x]);
            while let Some(v) = queue.pop_front() {
                for &p in full.in_neighbors(v) {
                    if registered[p] && !reaches_x[p] {
                        reaches_x[p] = true;
                        queue.push_back(p);
                    }
                }
            }
            // The walk from x's root is forced; every unregistered voter on it must be added.
            let mut chain = Vec::new();
            let mut seen = vec![false; n];
            let mut cur = Some(u0);
            while let Some(c) = cur {
                if seen[c] {
                    break;
                }
                seen[c] = true;
                if registered[c] {
                    if reaches_x[c] {
                        let mut present = registered.clone();
                        for &u in &chain {
                            present[u] = true;
                        }
                        chain.sort_unstable();
                        options.push((present, chain));
                        break;
                    }
                } else {
                    chain.push(c);
                }
                cur = succ(c);
            }
        }
    }

    let mut best: Option<Vec<usize>> = None;
    for (idx, (present, forced)) in options.iter().enumerate() {
        if forced.len() > ci.k {
            continue;
        }
        let (sub, map) = full.induced(present);
        let sx = map[x].unwrap();
        let a = Analysis::new(&sub)?;
        if !a.casting_in_all(sx) {
            continue;
        }
        // Without the closing chain, x's root must not gain a delegate.
        let banned = if idx == 0 && full.excess(x) >= 0 {
            succ(r).filter(|&s| !registered[s])
        } else {
            None
        };
        let mut in_region = vec![false; n];
        in_region[x] = true;
        let back: Vec<usize> = (0..n).filter(|&i| present[i]).collect();
        for f in a.followers(sx) {
            in_region[back[f]] = true;
        }
        // 0 = unknown, 1 = candidate, 2 = not.
        let mut status = vec![0u8; n];
        for u in 0..n {
            if present[u] || status[u] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = u;
            let verdict = loop {
                if status[cur] != 0 {
                    break status[cur];
                }
                if present[cur] || full.excess(cur) <= 0 || Some(cur) == banned || path.contains(&cur) {
                    break 2;
                }
                path.push(cur);
                match succ(cur) {
                    None => break 2,
                    Some(s) if present[s] => break if in_region[s] { 1 } else { 2 },
                    Some(s) => cur = s,
                }
            };
            for p in path {
                status[p] = verdict;
            }
        }
        let cands: Vec<usize> = (0..n).filter(|&u| status[u] == 1).collect();
        let pos = |u: usize| cands.binary_search(&u).ok();
        let mut absorber = vec![None; n];
        let items: Vec<Item> = cands
            .iter()
            .enumerate()
            .map(|(idx, &u)| {
                let mut gain = 1;
                for &rr in full.in_neighbors(u) {
                    if present[rr] && rr != x && full.excess(rr) > 0 {
                        gain += a.min_power(map[rr].unwrap());
                        absorber[rr] = Some(idx);
                    }
                }
                Item {
                    parent: succ(u).and_then(pos),
                    gain,
                }
            })
            .collect();
        let rivals: Vec<(usize, Option<usize>)> = (0..sub.len())
            .filter(|&y| y != sx && a.may_cast(y))
            .map(|y| (a.max_power(y), absorber[back[y]]))
            .collect();
        if let Some(sel) = min_selection(&items, ci.k - forced.len(), a.min_power(sx), &rivals) {
            let mut added: Vec<usize> = forced.iter().copied().chain(sel.iter().map(|&i| cands[i])).collect();
            added.sort_unstable();
            if best.as_ref().is_none_or(|b| added.len() < b.len()) {
                best = Some(added);
            }
        }
    }
    let Some(added) = best else {
        return Ok(None);
    };
    Ok(verify(ci, ControlWitness::Voters(added))?.map(|w| match w {
        ControlWitness::Voters(v) => v,
        ControlWitness::Edges(_) => unreachable!(),
    }))
}

/// Variant of [`solve_cav`] that admits an unregistered `x` by adding it
/// first at the price of one unit of budget.
pub fn solve_cav_admitting_designated(ci: &ControlInstance) -> Result<Option<Vec<usize>>> {
    if ci.is_registered(ci.designated) {
        return solve_cav(ci);
    }
    if ci.k == 0 {
        return Ok(None);
    }
    let mut inner = ci.clone();
    inner.unregistered.remove(&ci.designated);
    inner.k -= 1;
    Ok(solve_cav(&inner)?.map(|mut added| {
        added.push(ci.designated);
        added.sort_unstable();
        added
    }))
}

/// Constructive control by adding or deleting at most `k` edges (out-degree at most one).
///
/// Added edges may only leave voters with no delegate, so the election keeps
/// out-degree at most one. Edge addition covers the unrestricted case where
/// any such edge may be added; instances with an explicit candidate list
/// are left to [`solve_control_exhaustive`].
pub fn solve_edge_control(ci: &ControlInstance) -> Result<Option<Vec<(usize, usize)>>> {
    match ci.action {
        ControlAction::AddEdges => {
            require_constructive(ci, ControlAction::AddEdges)?;
            add_edges(ci)
        }
        ControlAction::DeleteEdges => {
            require_constructive(ci, ControlAction::DeleteEdges)?;
            delete_edges(ci)
        }
        other => Err(Error::InvalidParameter(format!("{other:?} is not an edge action"))),
    }
}

fn unwrap_edges(w: Option<ControlWitness>) -> Option<Vec<(usize, usize)>> {
    w.map(|w| match w {
        ControlWitness::Edges(e) => e,
        ControlWitness::Voters(_) => unreachable!(),
    })
}

fn delete_edges(ci: &ControlInstance) -> Result<Option<Vec<(usize, usize)>>> {
    let e = &ci.election;
    let x = ci.designated;
    let a = Analysis::new(e)?;
    let mut removed = Vec::new();
    let g = if a.casting_in_all(x) {
        e.clone()
    } else {
        let s = a.forest.succ[x].unwrap();
        removed.push((x, s));
        e.with_edge_changes(&[], &[(x, s)])?
    };
    if removed.len() > ci.k {
        return Ok(None);
    }
    let ga = Analysis::new(&g)?;
    let threat = ThreatForest::new(&ga, x);
    let Some(cuts) = threat.min_edge_deletions(&ga.forest.succ) else {
        return Ok(None);
    };
    removed.extend(cuts);
    if removed.len() > ci.k {
        return Ok(None);
    }
    removed.sort_unstable();
    Ok(unwrap_edges(verify(ci, ControlWitness::Edges(removed))?))
}

fn add_edges(ci: &ControlInstance) -> Result<Option<Vec<(usize, usize)>>> {
    let e = &ci.election;
    let n = e.len();
    let x = ci.designated;
    let a = Analysis::new(e)?;
    if let Some(list) = &ci.candidate_edges {
        if let Some(&(i, j)) = list.iter().find(|&&(i, _)| e.out_degree(i) > 0) {
            return Err(Error::DegreeViolation {
                from: e.id(i).to_string(),
                to: e.id(j).to_string(),
            });
        }
        return Err(Error::ModeUnsupported(
            "restricted candidate edge lists have no greedy procedure; use solve_control_exhaustive".into(),
        ));
    }

    // Base elections: as is, or with x's root pointed back at x so that x
    // may become the forced voter of the new cycle. Any other target would
    // only lengthen that cycle without adding followers.
    let mut options: Vec<(Election, Vec<(usize, usize)>)> = vec![(e.clone(), Vec::new())];
    let acyclic = a.forest.components[a.forest.component_of[x]].cycle.is_empty();
    if !a.is_root(x) && acyclic && a.excess(x) >= 0 {
        let mut r = x;
        while let Some(s) = a.forest.succ[r] {
            r = s;
        }
        options.push((e.with_edge_changes(&[(r, x)], &[])?, vec![(r, x)]));
    }

    let mut best: Option<Vec<(usize, usize)>> = None;
    for (g, forced) in &options {
        if forced.len() > ci.k {
            continue;
        }
        let ga = Analysis::new(g)?;
        if !ga.casting_in_all(x) {
            continue;
        }
        let mut absorber = vec![None; n];
        let mut items = Vec::new();
        let mut item_edges = Vec::new();
        for r in 0..n {
            if r == x || !ga.is_root(r) || ga.excess(r) <= 0 {
                continue;
            }
            absorber[r] = Some(items.len());
            items.push(Item {
                parent: None,
                gain: ga.min_power(r),
            });
            item_edges.push((r, x));
        }
        let rivals: Vec<(usize, Option<usize>)> = (0..n)
            .filter(|&y| y != x && ga.may_cast(y))
            .map(|y| (ga.max_power(y), absorber[y]))
            .collect();
        if let Some(sel) = min_selection(&items, ci.k - forced.len(), ga.min_power(x), &rivals) {
            let mut edges: Vec<(usize, usize)> = forced.iter().copied().chain(sel.iter().map(|&i| item_edges[i])).collect();
            edges.sort_unstable();
            if best.as_ref().is_none_or(|b| edges.len() < b.len()) {
                best = Some(edges);
            }
        }
    }
    let Some(edges) = best else {
        return Ok(None);
    };
    Ok(unwrap_edges(verify(ci, ControlWitness::Edges(edges))?))
}

pub const EXHAUSTIVE_VOTER_LIMIT: u64 = 14;
pub const EXHAUSTIVE_BUDGET_LIMIT: u64 = 6;

/// Reference solver for every action and mode: tries action sets of size
/// at most `k`, smallest first and lexicographically within a size, and
/// returns the first one reaching the goal. The constructive goal is that
/// `x` becomes the sole super-voter; the destructive goal is that it is not.
pub fn solve_control_exhaustive(ci: &ControlInstance, limits: Limits) -> Result<Option<ControlWitness>> {
    ci.validate()?;
    limits.check("voter count", ci.election.len() as u128, EXHAUSTIVE_VOTER_LIMIT)?;
    limits.check("action budget", ci.k as u128, EXHAUSTIVE_BUDGET_LIMIT)?;
    let e = &ci.election;
    let x = ci.designated;
    let want = ci.mode == ControlMode::Constructive;
    let test = |w: &ControlWitness| -> Result<bool> {
        let (g, gx) = ci.apply(w)?;
        Ok(check_by_enumeration(&g, gx, limits)?.holds == want)
    };
    let mut result = None;
    let mut failure = None;
    match ci.action {
        ControlAction::AddVoters | ControlAction::DeleteVoters => {
            let pool: Vec<usize> = if ci.action == ControlAction::AddVoters {
                if !ci.is_registered(x) {
                    return Ok(None);
                }
                ci.unregistered.iter().copied().collect()
            } else {
                (0..e.len()).filter(|&i| i != x && ci.is_registered(i)).collect()
            };
            crate::subsets::visit_subsets(pool.len(), ci.k, |set| {
                let w = ControlWitness::Voters(set.iter().map(|&i| pool[i]).collect());
                match test(&w) {
                    Ok(true) => {
                        result = Some(w);
                        true
                    }
                    Ok(false) => false,
                    Err(err) => {
                        failure = Some(err);
                        true
                    }
                }
            });
        }
        ControlAction::AddEdges | ControlAction::DeleteEdges => {
            let functional = e.max_out_degree() <= 1;
            let pool: Vec<(usize, usize)> = if ci.action == ControlAction::DeleteEdges {
                e.edges().collect()
            } else {
                let base: Vec<(usize, usize)> = match &ci.candidate_edges {
                    Some(list) => {
                        let mut l = list.clone();
                        l.sort_unstable();
                        l
                    }
                    None => (0..e.len())
                        .flat_map(|i| (0..e.len()).map(move |j| (i, j)))
                        .filter(|&(i, j)| i != j && !e.has_edge(i, j))
                        .collect(),
                };
                base.into_iter().filter(|&(i, _)| !functional || e.out_degree(i) == 0).collect()
            };
            limits.check("action subsets", count_subsets(pool.len(), ci.k), 50_000_000)?;
            crate::subsets::visit_subsets(pool.len(), ci.k, |set| {
                if ci.action == ControlAction::AddEdges && functional {
                    let mut sources: Vec<usize> = set.iter().map(|&i| pool[i].0).collect();
                    sources.dedup();
                    if sources.len() != set.len() {
                        return false;
                    }
                }
                let w = ControlWitness::Edges(set.iter().map(|&i| pool[i]).collect());
                match test(&w) {
                    Ok(true) => {
                        result = Some(w);
                        true
                    }
                    Ok(false) => false,
                    Err(err) => {
                        failure = Some(err);
                        true
                    }
                }
            });
        }
    }
    match failure {
        Some(err) => Err(err),
        None => Ok(result),
    }
}
