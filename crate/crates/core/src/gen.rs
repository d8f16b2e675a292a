//! Seeded random elections.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Election, VoterRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EdgeModel {
    /// Every ordered pair independently with probability `p`.
    UniformP { p: f64 },
    /// Out-degree at most one: random upward trees whose roots close a
    /// cycle into their own tree with probability `q`.
    Functional { q: f64 },
    /// Each voter approves a uniform number in `0..=max_degree` of distinct others.
    OutDegreeCapped { max_degree: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CostModel {
    /// Voting and delegating costs drawn independently from `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
    /// Delegating cost from `lo..=hi`, voting cost that plus an offset from
    /// `offset_lo..=offset_hi`, floored at zero.
    Correlated { lo: u64, hi: u64, offset_lo: i64, offset_hi: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub edge_model: EdgeModel,
    pub cost_model: CostModel,
    pub seed: u64,
}

/// Probability that a voter other than the first in the permutation starts a new tree.
const FUNCTIONAL_ROOT_PROBABILITY: f64 = 0.25;

impl GeneratorSpec {
    pub fn new(n: usize, edge_model: EdgeModel, cost_model: CostModel, seed: u64) -> Self {
        GeneratorSpec {
            n,
            edge_model,
            cost_model,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        match self.edge_model {
            EdgeModel::UniformP { p } => prob("p", p)?,
            EdgeModel::Functional { q } => prob("q", q)?,
            EdgeModel::OutDegreeCapped { .. } => {}
        }
        let ordered = match self.cost_model {
            CostModel::Uniform { lo, hi } => lo <= hi,
            CostModel::Correlated {
                lo,
                hi,
                offset_lo,
                offset_hi,
            } => lo <= hi && offset_lo <= offset_hi,
        };
        if !ordered {
            return Err(Error::InvalidParameter("cost ranges need lo <= hi".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Election> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n;
        let edges = match self.edge_model {
            EdgeModel::UniformP { p } => {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if i != j && rng.gen_bool(p) {
                            edges.push((i, j));
                        }
                    }
                }
                edges
            }
            EdgeModel::Functional { q } => functional_edges(n, q, &mut rng),
            EdgeModel::OutDegreeCapped { max_degree } => {
                let mut edges = Vec::new();
                let others: Vec<usize> = (0..n).collect();
                for i in 0..n {
                    let pool: Vec<usize> = others.iter().copied().filter(|&j| j != i).collect();
                    let d = rng.gen_range(0..=max_degree.min(pool.len()));
                    let mut picked: Vec<usize> = pool.choose_multiple(&mut rng, d).copied().collect();
                    picked.sort_unstable();
                    edges.extend(picked.into_iter().map(|j| (i, j)));
                }
                edges
            }
        };
        let voters = (0..n)
            .map(|i| {
                let (v, d) = match self.cost_model {
                    CostModel::Uniform { lo, hi } => (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)),
                    CostModel::Correlated {
                        lo,
                        hi,
                        offset_lo,
                        offset_hi,
                    } => {
                        let d = rng.gen_range(lo..=hi);
                        let off = rng.gen_range(offset_lo..=offset_hi);
                        ((d as i64 + off).max(0) as u64, d)
                    }
                };
                VoterRecord::new(format!("v{i}"), v, d)
            })
            .collect();
        Election::new(voters, edges)
    }
}

fn functional_edges(n: usize, q: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parent = vec![None; n];
    let mut tree = vec![0usize; n];
    let mut roots = Vec::new();
    for (t, &v) in order.iter().enumerate() {
        if t == 0 || rng.gen_bool(FUNCTIONAL_ROOT_PROBABILITY) {
            tree[v] = roots.len();
            roots.push(v);
        } else {
            let p = order[rng.gen_range(0..t)];
            parent[v] = Some(p);
            tree[v] = tree[p];
        }
    }
    for &r in &roots {
        let members: Vec<usize> = order.iter().copied().filter(|&u| u != r && tree[u] == tree[r]).collect();
        if !members.is_empty() && rng.gen_bool(q) {
            parent[r] = Some(members[rng.gen_range(0..members.len())]);
        }
    }
    (0..n).filter_map(|v| parent[v].map(|p| (v, p))).collect()
}
