//! Brute-force enumeration of every (casting set, delegation) pair.
//!
//! Deliberately naive: walks are followed step by step with no memoization
//! and nothing from the solver modules is reused, so the oracle can serve
//! as an independent reference in tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::constrained::{Constraint, ConstraintKind};
use crate::error::Result;
use crate::model::{Election, Solution};
use crate::Limits;

pub const ORACLE_VOTER_LIMIT: u64 = 12;
/// Limit on the number of (casting set, delegation) pairs, `prod (1 + outdeg)`.
pub const ORACLE_PAIR_LIMIT: u64 = 10_000_000;

/// Metrics of one feasible pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairMetrics {
    pub cost: u64,
    pub max_length: usize,
    /// Power of every voter; 0 for delegators.
    pub power: Vec<usize>,
    /// Path length sum per voter; 0 for delegators.
    pub sum_length: Vec<usize>,
}

impl PairMetrics {
    pub fn max_power(&self) -> usize {
        self.power.iter().copied().max().unwrap_or(0)
    }

    pub fn max_sum_length(&self) -> usize {
        self.sum_length.iter().copied().max().unwrap_or(0)
    }

    fn allows(&self, c: Constraint) -> bool {
        match c {
            Constraint::None => true,
            Constraint::MaxLength(l) => self.max_length <= l,
            Constraint::Power(l) => self.max_power() <= l,
            Constraint::SumLength(l) => self.max_sum_length() <= l,
        }
    }
}

fn guard(e: &Election, limits: Limits) -> Result<()> {
    limits.check("oracle voter count", e.len() as u128, ORACLE_VOTER_LIMIT)?;
    let pairs = (0..e.len()).fold(1u128, |acc, i| acc.saturating_mul(1 + e.out_degree(i) as u128));
    limits.check("oracle solution pairs", pairs, ORACLE_PAIR_LIMIT)
}

/// Calls `f` on every feasible pair, given as per-voter choices.
pub fn for_each_feasible(e: &Election, limits: Limits, mut f: impl FnMut(&[Option<usize>], &PairMetrics)) -> Result<()> {
    guard(e, limits)?;
    let n = e.len();
    let mut choice: Vec<Option<usize>> = vec![None; n];
    for mask in 0u32..(1u32 << n) {
        let casts = |i: usize| mask >> i & 1 == 1;
        let delegators: Vec<usize> = (0..n).filter(|&i| !casts(i)).collect();
        if delegators.iter().any(|&i| e.out_degree(i) == 0) {
            continue;
        }
        let cost: u64 = (0..n).map(|i| if casts(i) { e.voting_cost(i) } else { e.delegating_cost(i) }).sum();
        let mut digits = vec![0usize; delegators.len()];
        loop {
            for i in 0..n {
                choice[i] = None;
            }
            for (t, &i) in delegators.iter().enumerate() {
                choice[i] = Some(e.out_neighbors(i)[digits[t]]);
            }
            let mut m = PairMetrics {
                cost,
                max_length: 0,
                power: (0..n).map(|i| usize::from(casts(i))).collect(),
                sum_length: vec![0; n],
            };
            let mut feasible = true;
            for &i in &delegators {
                let mut cur = i;
                let mut steps = 0;
                while let Some(next) = choice[cur] {
                    cur = next;
                    steps += 1;
                    if steps > n {
                        break;
                    }
                }
                if steps > n {
                    feasible = false;
                    break;
                }
                m.power[cur] += 1;
                m.sum_length[cur] += steps;
                m.max_length = m.max_length.max(steps);
            }
            if feasible {
                f(&choice, &m);
            }
            let Some(pos) = (0..digits.len()).find(|&p| digits[p] + 1 < e.out_degree(delegators[p])) else {
                break;
            };
            digits[pos] += 1;
            for q in 0..pos {
                digits[q] = 0;
            }
        }
    }
    Ok(())
}

/// Minimum cost and all pairs attaining it, for one constraint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstrainedOptimum {
    pub cost: Option<u64>,
    pub witnesses: Vec<Solution>,
}

impl ConstrainedOptimum {
    fn offer(&mut self, cost: u64, choice: &[Option<usize>]) {
        match self.cost {
            Some(c) if c < cost => return,
            Some(c) if c == cost => {}
            _ => {
                self.cost = Some(cost);
                self.witnesses.clear();
            }
        }
        self.witnesses.push(Solution::from_choices(choice));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationResult {
    pub min_cost: Option<u64>,
    /// Every cost-minimizing feasible pair.
    pub optimal_solutions: Vec<Solution>,
    /// Number of feasible pairs.
    pub all_feasible_count: u64,
    pub constrained: BTreeMap<Constraint, ConstrainedOptimum>,
}

/// Enumerates all pairs, tracking the unconstrained optimum and one optimum per constraint.
pub fn enumerate_all(e: &Election, constraints: &[Constraint], limits: Limits) -> Result<EnumerationResult> {
    let mut plain = ConstrainedOptimum::default();
    let mut per: BTreeMap<Constraint, ConstrainedOptimum> = constraints.iter().map(|&c| (c, ConstrainedOptimum::default())).collect();
    let mut count = 0u64;
    for_each_feasible(e, limits, |choice, m| {
        count += 1;
        plain.offer(m.cost, choice);
        for (c, opt) in per.iter_mut() {
            if m.allows(*c) {
                opt.offer(m.cost, choice);
            }
        }
    })?;
    Ok(EnumerationResult {
        min_cost: plain.cost,
        optimal_solutions: plain.witnesses,
        all_feasible_count: count,
        constrained: per,
    })
}

/// Optimal cost for every bound of one constraint kind, indexed by the bound
/// (`None` where infeasible). Covers bounds `0..=n*n`.
pub fn bounded_optima(e: &Election, kind: ConstraintKind, limits: Limits) -> Result<Vec<Option<u64>>> {
    let n = e.len();
    let mut best: Vec<Option<u64>> = vec![None; n * n + 1];
    for_each_feasible(e, limits, |_, m| {
        let metric = match kind {
            ConstraintKind::MaxLength => m.max_length,
            ConstraintKind::Power => m.max_power(),
            ConstraintKind::SumLength => m.max_sum_length(),
        };
        let slot = &mut best[metric];
        if slot.is_none_or(|c| m.cost < c) {
            *slot = Some(m.cost);
        }
    })?;
    for l in 1..best.len() {
        best[l] = match (best[l - 1], best[l]) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    Ok(best)
}

/// Power outcome of one cost-minimizing solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub solution: Solution,
    /// Casting voters of maximum power.
    pub argmax: BTreeSet<usize>,
    pub max_power: usize,
}

/// The maximum-power voters of every cost-minimizing solution.
pub fn super_voter_profile(e: &Election, limits: Limits) -> Result<Vec<ProfileEntry>> {
    let mut best: Option<u64> = None;
    let mut entries = Vec::new();
    for_each_feasible(e, limits, |choice, m| {
        if best.is_some_and(|b| m.cost > b) {
            return;
        }
        if best != Some(m.cost) {
            best = Some(m.cost);
            entries.clear();
        }
        let max_power = m.max_power();
        let argmax = (0..e.len()).filter(|&i| m.power[i] == max_power).collect();
        entries.push(ProfileEntry {
            solution: Solution::from_choices(choice),
            argmax,
            max_power,
        });
    })?;
    Ok(entries)
}

/// Whether `x` is the unique maximum-power voter in every cost-minimizing solution.
pub fn is_sole_super_voter(e: &Election, x: usize, limits: Limits) -> Result<bool> {
    Ok(super_voter_profile(e, limits)?
        .iter()
        .all(|p| p.argmax.len() == 1 && p.argmax.contains(&x)))
}

/// Whether `x` casts in every cost-minimizing solution.
pub fn casts_in_all_optima(e: &Election, x: usize, limits: Limits) -> Result<bool> {
    Ok(enumerate_all(e, &[], limits)?
        .optimal_solutions
        .iter()
        .all(|s| s.casting.contains(&x)))
}

/// Smallest power of `x` over cost-minimizing solutions where it casts.
pub fn min_power_over_optima(e: &Election, x: usize, limits: Limits) -> Result<Option<usize>> {
    let mut best: Option<u64> = None;
    let mut power: Option<usize> = None;
    for_each_feasible(e, limits, |_, m| {
        if best.is_some_and(|b| m.cost > b) {
            return;
        }
        if best != Some(m.cost) {
            best = Some(m.cost);
            power = None;
        }
        if m.power[x] > 0 {
            power = Some(power.map_or(m.power[x], |p| p.min(m.power[x])));
        }
    })?;
    Ok(power)
}
