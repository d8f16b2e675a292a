//! Cost minimization under bounds on delegation length or voting power.
//!
//! For out-degree at most one the delegation graph is a functional forest
//! and the three bounded problems are solved exactly by tree dynamic
//! programs. Cycle components are handled by trying each cycle vertex as
//! the caster that breaks the cycle. [`exact_general`] is an exhaustive
//! reference solver for arbitrary graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{metrics, Budget, Election, Solution, SolveReport};
use crate::Limits;

/// A side constraint on feasible solutions. Bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "ell")]
pub enum Constraint {
    None,
    /// Every delegator is at most this many hops from its representative.
    MaxLength(usize),
    /// Every caster represents at most this many voters, itself included.
    Power(usize),
    /// For every caster, the path lengths of its delegators sum to at most this.
    SumLength(usize),
}

impl Constraint {
    /// Whether a feasible solution with these metrics satisfies the constraint.
    pub fn allows(&self, r: &SolveReport) -> bool {
        match *self {
            Constraint::None => true,
            Constraint::MaxLength(l) => r.max_length <= l,
            Constraint::Power(l) => r.max_power() <= l,
            Constraint::SumLength(l) => r.max_sum_length() <= l,
        }
    }

    pub fn ell(&self) -> Option<usize> {
        match *self {
            Constraint::None => None,
            Constraint::MaxLength(l) | Constraint::Power(l) | Constraint::SumLength(l) => Some(l),
        }
    }
}

/// The three bounded problems, without their bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    MaxLength,
    Power,
    SumLength,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] = [ConstraintKind::MaxLength, ConstraintKind::Power, ConstraintKind::SumLength];

    pub fn with_bound(self, ell: usize) -> Constraint {
        match self {
            ConstraintKind::MaxLength => Constraint::MaxLength(ell),
            ConstraintKind::Power => Constraint::Power(ell),
            ConstraintKind::SumLength => Constraint::SumLength(ell),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::MaxLength => "max_length",
            ConstraintKind::Power => "power",
            ConstraintKind::SumLength => "sum_length",
        }
    }
}

/// One weakly connected component of a functional graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionalComponent {
    /// Members in ascending order.
    pub vertices: Vec<usize>,
    /// The out-degree-0 voter, for tree components.
    pub root: Option<usize>,
    /// The unique cycle in successor order starting at its smallest member;
    /// empty for tree components.
    pub cycle: Vec<usize>,
}

/// Structure of an election whose voters approve at most one delegate each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionalForest {
    pub succ: Vec<Option<usize>>,
    /// In-neighbors, ascending.
    pub preds: Vec<Vec<usize>>,
    pub components: Vec<FunctionalComponent>,
    pub component_of: Vec<usize>,
}

impl FunctionalForest {
    pub fn new(e: &Election) -> Result<Self> {
        let max_degree = e.max_out_degree();
        if max_degree > 1 {
            return Err(Error::DegreeUnsupported { max_degree });
        }
        let n = e.len();
        let succ: Vec<Option<usize>> = (0..n).map(|i| e.out_neighbors(i).first().copied()).collect();
        let preds: Vec<Vec<usize>> = (0..n).map(|i| e.in_neighbors(i).to_vec()).collect();
        let mut component_of = vec![usize::MAX; n];
        let mut components = Vec::new();
        for s in 0..n {
            if component_of[s] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut vertices = vec![s];
            component_of[s] = id;
            let mut head = 0;
            while head < vertices.len() {
                let v = vertices[head];
                head += 1;
                for &w in succ[v].iter().chain(preds[v].iter()) {
                    if component_of[w] == usize::MAX {
                        component_of[w] = id;
                        vertices.push(w);
                    }
                }
            }
            vertices.sort_unstable();
            let root = vertices.iter().copied().find(|&v| succ[v].is_none());
            let mut cycle = Vec::new();
            if root.is_none() {
                // Walking n steps from anywhere lands on the cycle.
                let mut v = s;
                for _ in 0..vertices.len() {
                    v = succ[v].unwrap();
                }
                let start = {
                    let mut members = vec![v];
                    let mut w = succ[v].unwrap();
                    while w != v {
                        members.push(w);
                        w = succ[w].unwrap();
                    }
                    *members.iter().min().unwrap()
                };
                cycle.push(start);
                let mut w = succ[start].unwrap();
                while w != start {
                    cycle.push(w);
                    w = succ[w].unwrap();
                }
            }
            components.push(FunctionalComponent { vertices, root, cycle });
        }
        Ok(FunctionalForest {
            succ,
            preds,
            components,
            component_of,
        })
    }

    /// Vertices of the tree obtained by cutting `root`'s out-edge, children before parents.
    pub fn postorder(&self, root: usize) -> Vec<usize> {
        let mut pre = vec![root];
        let mut head = 0;
        while head < pre.len() {
            let v = pre[head];
            head += 1;
            pre.extend(self.children(v, root));
        }
        pre.reverse();
        pre
    }

    /// Children of `v` in the tree rooted at `root`.
    pub fn children(&self, v: usize, root: usize) -> impl Iterator<Item = usize> + '_ {
        self.preds[v].iter().copied().filter(move |&c| c != root)
    }

    /// Candidate roots of a component: its root, or every cycle vertex ascending.
    fn root_candidates(&self, comp: &FunctionalComponent) -> Vec<usize> {
        match comp.root {
            Some(r) => vec![r],
            None => {
                let mut c = comp.cycle.clone();
                c.sort_unstable();
                c
            }
        }
    }
}

type Cost = i64;
const INF: Cost = i64::MAX / 4;

fn plus(a: Cost, b: Cost) -> Cost {
    if a >= INF || b >= INF {
        INF
    } else {
        a + b
    }
}

/// Minimal cost of the tree hanging from `root` (which casts) and its casters.
type TreeSolver = fn(&Election, &FunctionalForest, usize, usize) -> Option<(Cost, Vec<usize>)>;

/// Bounded max-length tree DP.
///
/// `rows[i][k]`: cost of `v` plus its first `i` child subtrees with `v`
/// casting and every voter it represents at most `k` hops away.
fn max_length_tree(e: &Election, f: &FunctionalForest, root: usize, ell: usize) -> Option<(Cost, Vec<usize>)> {
    let n = e.len();
    let mut rows: Vec<Vec<Vec<Cost>>> = vec![Vec::new(); n];
    // delegate[v][i][k]: whether the i-th child delegates in the optimum of rows[v][i][k].
    let mut delegate: Vec<Vec<Vec<bool>>> = vec![Vec::new(); n];
    for v in f.postorder(root) {
        let mut cur = vec![e.voting_cost(v) as Cost; ell + 1];
        let mut table = vec![cur.clone()];
        let mut picks = vec![vec![false; ell + 1]];
        for c in f.children(v, root) {
            let child = rows[c].last().unwrap();
            let swap = e.delegating_cost(c) as Cost - e.voting_cost(c) as Cost;
            let mut next = vec![INF; ell + 1];
            let mut pick = vec![false; ell + 1];
            for k in 0..=ell {
                let cast = plus(cur[k], child[ell]);
                let del = if k >= 1 { plus(plus(cur[k], child[k - 1]), swap) } else { INF };
                if del < cast {
                    next[k] = del;
                    pick[k] = true;
                } else {
                    next[k] = cast;
                }
            }
            cur = next;
            table.push(cur.clone());
            picks.push(pick);
        }
        rows[v] = table;
        delegate[v] = picks;
    }
    let best = rows[root].last().unwrap()[ell];
    let mut casters = Vec::new();
    let mut stack = vec![(root, ell, true)];
    while let Some((v, k, casts)) = stack.pop() {
        if casts {
            casters.push(v);
        }
        let kids: Vec<usize> = f.children(v, root).collect();
        for (i, &c) in kids.iter().enumerate().rev() {
            if delegate[v][i + 1][k] {
                stack.push((c, k - 1, false));
            } else {
                stack.push((c, ell, true));
            }
        }
    }
    Some((best, casters))
}

/// Bounded power tree DP.
///
/// `rows[i][k]`: cost of `v` plus its first `i` child subtrees with `v`
/// casting and representing at most `k` voters including itself.
fn power_tree(e: &Election, f: &FunctionalForest, root: usize, ell: usize) -> Option<(Cost, Vec<usize>)> {
    let n = e.len();
    let mut rows: Vec<Vec<Vec<Cost>>> = vec![Vec::new(); n];
    // split[v][i][k]: 0 if the i-th child casts, otherwise the share x kept by the first i-1 children.
    let mut split: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for v in f.postorder(root) {
        let mut cur = vec![e.voting_cost(v) as Cost; ell + 1];
        cur[0] = INF;
        let mut table = vec![cur.clone()];
        let mut picks = vec![vec![0usize; ell + 1]];
        for c in f.children(v, root) {
            let child = rows[c].last().unwrap();
            let swap = e.delegating_cost(c) as Cost - e.voting_cost(c) as Cost;
            let mut next = vec![INF; ell + 1];
            let mut pick = vec![0usize; ell + 1];
            for k in 1..=ell {
                next[k] = plus(cur[k], child[ell]);
                for x in 1..k {
                    let del = plus(plus(cur[x], child[k - x]), swap);
                    if del < next[k] {
                        next[k] = del;
                        pick[k] = x;
                    }
                }
            }
            cur = next;
            table.push(cur.clone());
            picks.push(pick);
        }
        rows[v] = table;
        split[v] = picks;
    }
    let best = rows[root].last().unwrap()[ell];
    if best >= INF {
        return None;
    }
    let mut casters = Vec::new();
    let mut stack = vec![(root, ell, true)];
    while let Some((v, mut k, casts)) = stack.pop() {
        if casts {
            casters.push(v);
        }
        let kids: Vec<usize> = f.children(v, root).collect();
        for (i, &c) in kids.iter().enumerate().rev() {
            let x = split[v][i + 1][k];
            if x == 0 {
                stack.push((c, ell, true));
            } else {
                stack.push((c, k - x, false));
                k = x;
            }
        }
    }
    Some((best, casters))
}

/// How the i-th child was merged in the sum-length DP.
#[derive(Clone, Copy)]
enum SumPick {
    Cast,
    /// State `(c1, s1)` of the first i-1 children and `(c2, s2)` of the child.
    Delegate(u32, u32, u32, u32),
}

/// Bounded sum-length tree DP.
///
/// State `(c, s)`: `v` casts and represents `c` delegators of the merged
/// subtrees whose path lengths sum to `s`. A delegating child in state
/// `(c2, s2)` contributes `c2 + 1` delegators and `s2 + c2 + 1` to the sum.
fn sum_length_tree(e: &Election, f: &FunctionalForest, root: usize, ell: usize) -> Option<(Cost, Vec<usize>)> {
    let n = e.len();
    let w = ell + 1;
    let idx = |c: usize, s: usize| c * w + s;
    let mut finals: Vec<Vec<Cost>> = vec![Vec::new(); n];
    let mut best_state: Vec<(Cost, usize, usize)> = vec![(INF, 0, 0); n];
    let mut picks: Vec<Vec<Vec<SumPick>>> = vec![Vec::new(); n];
    let mut size = vec![0usize; n];
    for v in f.postorder(root) {
        let mut cur = vec![INF; w * w];
        cur[idx(0, 0)] = e.voting_cost(v) as Cost;
        let mut count = 0usize;
        let mut vp = vec![Vec::new()];
        for c in f.children(v, root) {
            let child = &finals[c];
            let swap = e.delegating_cost(c) as Cost - e.voting_cost(c) as Cost;
            let child_max = size[c].saturating_sub(1).min(ell);
            let mut next = vec![INF; w * w];
            let mut pick = vec![SumPick::Cast; w * w];
            let cast = best_state[c].0;
            for c1 in 0..=count.min(ell) {
                for s1 in c1..=ell {
                    let base = cur[idx(c1, s1)];
                    if base >= INF {
                        continue;
                    }
                    let at = idx(c1, s1);
                    let val = plus(base, cast);
                    if val < next[at] {
                        next[at] = val;
                        pick[at] = SumPick::Cast;
                    }
                    for c2 in 0..=child_max {
                        let cc = c1 + c2 + 1;
                        if cc > ell {
                            break;
                        }
                        for s2 in c2..=ell {
                            let ss = s1 + s2 + c2 + 1;
                            if ss > ell {
                                break;
                            }
                            let sub = child[idx(c2, s2)];
                            if sub >= INF {
                                continue;
                            }
                            let val = base + sub + swap;
                            let to = idx(cc, ss);
                            if val < next[to] {
                                next[to] = val;
                                pick[to] = SumPick::Delegate(c1 as u32, s1 as u32, c2 as u32, s2 as u32);
                            }
                        }
                    }
                }
            }
            count += size[c];
            cur = next;
            vp.push(pick);
        }
        size[v] = count + 1;
        let mut best = (INF, 0, 0);
        for c in 0..=ell {
            for s in 0..=ell {
                if cur[idx(c, s)] < best.0 {
                    best = (cur[idx(c, s)], c, s);
                }
            }
        }
        best_state[v] = best;
        finals[v] = cur;
        picks[v] = vp;
    }
    let (best, c0, s0) = best_state[root];
    if best >= INF {
        return None;
    }
    let mut casters = Vec::new();
    let mut stack = vec![(root, c0, s0, true)];
    while let Some((v, mut c, mut s, casts)) = stack.pop() {
        if casts {
            casters.push(v);
        }
        let kids: Vec<usize> = f.children(v, root).collect();
        for (i, &ch) in kids.iter().enumerate().rev() {
            match picks[v][i + 1][idx(c, s)] {
                SumPick::Cast => {
                    let (_, bc, bs) = best_state[ch];
                    stack.push((ch, bc, bs, true));
                }
                SumPick::Delegate(c1, s1, c2, s2) => {
                    stack.push((ch, c2 as usize, s2 as usize, false));
                    c = c1 as usize;
                    s = s1 as usize;
                }
            }
        }
    }
    Some((best, casters))
}

fn solve_forest(e: &Election, ell: usize, solver: TreeSolver, constraint: Constraint) -> Result<Option<(Solution, u64)>> {
    if ell == 0 {
        return Err(Error::InvalidParameter("the bound ell must be at least 1".into()));
    }
    let forest = FunctionalForest::new(e)?;
    let mut casting = vec![false; e.len()];
    for comp in &forest.components {
        let mut best: Option<(Cost, Vec<usize>)> = None;
        for root in forest.root_candidates(comp) {
            if let Some((cost, casters)) = solver(e, &forest, root, ell) {
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, casters));
                }
            }
        }
        let Some((_, casters)) = best else {
            return Ok(None);
        };
        for c in casters {
            casting[c] = true;
        }
    }
    let choices: Vec<Option<usize>> = (0..e.len()).map(|i| if casting[i] { None } else { forest.succ[i] }).collect();
    let solution = Solution::from_choices(&choices);
    let report = metrics(e, &solution)?;
    debug_assert!(constraint.allows(&report));
    Ok(Some((solution, report.total_cost)))
}

/// Cheapest solution in which every delegation walk has at most `ell` hops.
pub fn solve_bounded_max_length(e: &Election, ell: usize) -> Result<Option<(Solution, u64)>> {
    solve_forest(e, ell, max_length_tree, Constraint::MaxLength(ell))
}

/// Cheapest solution in which every caster has power at most `ell`.
pub fn solve_bounded_power(e: &Election, ell: usize) -> Result<Option<(Solution, u64)>> {
    solve_forest(e, ell, power_tree, Constraint::Power(ell))
}

/// Cheapest solution in which each caster's delegation path lengths sum to at most `ell`.
pub fn solve_bounded_sum_length(e: &Election, ell: usize) -> Result<Option<(Solution, u64)>> {
    solve_forest(e, ell, sum_length_tree, Constraint::SumLength(ell))
}

/// Dispatches to the tree DP for `kind`.
pub fn solve_bounded(e: &Election, kind: ConstraintKind, ell: usize) -> Result<Option<(Solution, u64)>> {
    match kind {
        ConstraintKind::MaxLength => solve_bounded_max_length(e, ell),
        ConstraintKind::Power => solve_bounded_power(e, ell),
        ConstraintKind::SumLength => solve_bounded_sum_length(e, ell),
    }
}

/// Voter count accepted by [`exact_general`] without `force`.
pub const EXACT_VOTER_LIMIT: u64 = 20;

/// Multi-source reverse BFS from the casters: hop distances (or `usize::MAX`)
/// and the discovering voter of each delegator.
fn bfs_from(e: &Election, casting: &[bool]) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = e.len();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![None; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if casting[i] {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for &i in e.in_neighbors(j) {
            if dist[i] == usize::MAX {
                dist[i] = dist[j] + 1;
                parent[i] = Some(j);
                queue.push_back(i);
            }
        }
    }
    (dist, parent)
}

/// Depth-first search over delegation choices for a fixed casting set,
/// pruning as soon as a caster's power or length sum exceeds its bound.
struct DelegationSearch {
    power_bound: usize,
    sum_bound: usize,
    order: Vec<usize>,
    targets: Vec<Vec<usize>>,
    parent: Vec<usize>,
    rep: Vec<usize>,
    depth: Vec<usize>,
    load: Vec<usize>,
    sum: Vec<usize>,
    kids: Vec<Vec<usize>>,
}

const NONE: usize = usize::MAX;

impl DelegationSearch {
    fn new(e: &Election, casting: &[bool], dist: &[usize], constraint: Constraint) -> Self {
        let n = e.len();
        let (power_bound, sum_bound) = match constraint {
            Constraint::Power(l) => (l, usize::MAX),
            Constraint::SumLength(l) => (usize::MAX, l),
            _ => (usize::MAX, usize::MAX),
        };
        let mut order: Vec<usize> = (0..n).filter(|&i| !casting[i]).collect();
        order.sort_by_key(|&i| (dist[i], i));
        let targets = (0..n)
            .map(|i| {
                let mut t: Vec<usize> = e.out_neighbors(i).iter().copied().filter(|&j| dist[j] != usize::MAX).collect();
                t.sort_by_key(|&j| (dist[j], j));
                t
            })
            .collect();
        let rep = (0..n).map(|i| if casting[i] { i } else { NONE }).collect();
        DelegationSearch {
            power_bound,
            sum_bound,
            order,
            targets,
            parent: vec![NONE; n],
            rep,
            depth: vec![0; n],
            load: vec![0; n],
            sum: vec![0; n],
            kids: vec![Vec::new(); n],
        }
    }

    /// Sets representative and depth on the pending subtree of `i`; returns (size, depth sum).
    fn settle(&mut self, i: usize, r: usize) -> (usize, usize) {
        let mut stack = vec![i];
        let (mut size, mut total) = (0, 0);
        while let Some(v) = stack.pop() {
            self.rep[v] = r;
            self.depth[v] = self.depth[self.parent[v]] + 1;
            size += 1;
            total += self.depth[v];
            stack.extend(self.kids[v].iter().copied());
        }
        (size, total)
    }

    fn unsettle(&mut self, i: usize) {
        let mut stack = vec![i];
        while let Some(v) = stack.pop() {
            self.rep[v] = NONE;
            stack.extend(self.kids[v].iter().copied());
        }
    }

    fn run(&mut self, pos: usize) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let i = self.order[pos];
        for t in 0..self.targets[i].len() {
            let j = self.targets[i][t];
            self.parent[i] = j;
            self.kids[j].push(i);
            let r = self.rep[j];
            if r != NONE {
                let (size, total) = self.settle(i, r);
                self.load[r] += size;
                self.sum[r] += total;
                let ok = self.load[r] < self.power_bound && self.sum[r] <= self.sum_bound;
                if ok && self.run(pos + 1) {
                    return true;
                }
                self.load[r] -= size;
                self.sum[r] -= total;
                self.unsettle(i);
            } else {
                // j is pending: reject if its chain leads back to i.
                let mut top = j;
                while self.parent[top] != NONE && top != i {
                    top = self.parent[top];
                }
                if top != i && self.run(pos + 1) {
                    return true;
                }
            }
            self.kids[j].pop();
            self.parent[i] = NONE;
        }
        false
    }
}

/// Necessary condition for power and sum bounds: every delegator can be
/// matched to a caster it reaches through delegators, with at most `cap`
/// delegators per caster.
fn capacity_relaxation_holds(e: &Election, casting: &[bool], cap: usize) -> bool {
    let n = e.len();
    let reach: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if casting[i] {
                return Vec::new();
            }
            let mut seen = vec![false; n];
            let mut stack = vec![i];
            let mut found = Vec::new();
            seen[i] = true;
            while let Some(v) = stack.pop() {
                for &j in e.out_neighbors(v) {
                    if !seen[j] {
                        seen[j] = true;
                        if casting[j] {
                            found.push(j);
                        } else {
                            stack.push(j);
                        }
                    }
                }
            }
            found
        })
        .collect();
    let mut holder: Vec<Vec<usize>> = vec![Vec::new(); n];
    fn augment(i: usize, reach: &[Vec<usize>], holder: &mut [Vec<usize>], cap: usize, seen: &mut [bool]) -> bool {
        for &c in &reach[i] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if holder[c].len() < cap {
                holder[c].push(i);
                return true;
            }
            for slot in 0..holder[c].len() {
                let other = holder[c][slot];
                if augment(other, reach, holder, cap, seen) {
                    holder[c][slot] = i;
                    return true;
                }
            }
        }
        false
    }
    (0..n)
        .filter(|&i| !casting[i])
        .all(|i| augment(i, &reach, &mut holder, cap, &mut vec![false; n]))
}

/// Delegation choices meeting `constraint` for this casting set, if any exist.
fn delegation_for(e: &Election, casting: &[bool], constraint: Constraint) -> Option<Vec<Option<usize>>> {
    let (dist, parent) = bfs_from(e, casting);
    if dist.contains(&usize::MAX) {
        return None;
    }
    match constraint {
        Constraint::None => Some(parent),
        Constraint::MaxLength(l) => dist.iter().all(|&d| d <= l).then_some(parent),
        Constraint::Power(l) | Constraint::SumLength(l) => {
            let cap = if matches!(constraint, Constraint::Power(_)) { l - 1 } else { l };
            if !capacity_relaxation_holds(e, casting, cap) {
                return None;
            }
            let mut search = DelegationSearch::new(e, casting, &dist, constraint);
            search.run(0).then(|| {
                (0..e.len())
                    .map(|i| if casting[i] { None } else { Some(search.parent[i]) })
                    .collect()
            })
        }
    }
}

/// Exhaustive reference solver for any out-degree.
///
/// Adding a caster with `v <= d` never raises the cost and never breaks a
/// length, power or sum bound, so such voters and those without delegates
/// are fixed as casters. The remaining voters are tried as extra casters in
/// order of increasing cost; the first casting set admitting a delegation
/// that meets the constraint is optimal.
pub fn exact_general(e: &Election, constraint: Constraint, budget: Option<Budget>, limits: Limits) -> Result<Option<(Solution, u64)>> {
    limits.check("voter count", e.len() as u128, EXACT_VOTER_LIMIT)?;
    if constraint.ell() == Some(0) {
        return Err(Error::InvalidParameter("the bound ell must be at least 1".into()));
    }
    let n = e.len();
    let mut casting: Vec<bool> = (0..n).map(|i| e.excess(i) <= 0 || e.out_degree(i) == 0).collect();
    let base: u64 = e.cost_of_casting(|i| casting[i]);
    // Interchangeable voters sit next to each other; only prefixes of a run are tried.
    let twin_key = |i: usize| (e.voting_cost(i), e.delegating_cost(i), e.out_neighbors(i), e.in_neighbors(i));
    let mut optional: Vec<usize> = (0..n).filter(|&i| !casting[i]).collect();
    let first_twin: Vec<usize> = optional
        .iter()
        .map(|&i| *optional.iter().find(|&&j| twin_key(j) == twin_key(i)).expect("i itself matches"))
        .collect();
    let mut keyed: Vec<(usize, usize)> = first_twin.into_iter().zip(optional.iter().copied()).collect();
    keyed.sort_unstable();
    optional = keyed.iter().map(|&(_, i)| i).collect();
    let twin_of_prev: Vec<bool> = (0..keyed.len()).map(|t| t > 0 && keyed[t - 1].0 == keyed[t].0).collect();
    let weights: Vec<u64> = optional.iter().map(|&i| e.excess(i) as u64).collect();
    let total: u64 = weights.iter().sum();
    let max_extra = match budget {
        Some(Budget(b)) if b < base => return Ok(None),
        Some(Budget(b)) => (b - base).min(total),
        None => total,
    };
    let mut suffix = vec![0u64; weights.len() + 1];
    for t in (0..weights.len()).rev() {
        suffix[t] = suffix[t + 1] + weights[t];
    }

    struct Level<'s> {
        e: &'s Election,
        constraint: Constraint,
        optional: &'s [usize],
        weights: &'s [u64],
        suffix: &'s [u64],
        twin_of_prev: &'s [bool],
    }
    impl Level<'_> {
        /// Subsets of `optional[from..]` adding exactly `left` cost, in lexicographic order.
        fn search(&self, from: usize, left: u64, casting: &mut [bool]) -> Option<Vec<Option<usize>>> {
            if left == 0 {
                return delegation_for(self.e, casting, self.constraint);
            }
            if self.suffix[from] < left {
                return None;
            }
            for t in from..self.optional.len() {
                if self.suffix[t] < left {
                    break;
                }
                let w = self.weights[t];
                if w > left || (t > from && self.twin_of_prev[t]) {
                    continue;
                }
                let v = self.optional[t];
                casting[v] = true;
                let found = self.search(t + 1, left - w, casting);
                casting[v] = false;
                if found.is_some() {
                    return found;
                }
            }
            None
        }
    }

    let level = Level {
        e,
        constraint,
        optional: &optional,
        weights: &weights,
        suffix: &suffix,
        twin_of_prev: &twin_of_prev,
    };
    for extra in 0..=max_extra {
        if let Some(choices) = level.search(0, extra, &mut casting) {
            let solution = Solution::from_choices(&choices);
            let report = metrics(e, &solution)?;
            debug_assert!(constraint.allows(&report));
            debug_assert_eq!(report.total_cost, base + extra);
            return Ok(Some((solution, report.total_cost)));
        }
    }
    Ok(None)
}
