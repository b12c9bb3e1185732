//! Exact branch and bound over `{-c, +c}` binaries with LP-relaxation bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{relaxation_lp, solve_lp, LpStatus};
use super::realify::IlpInstance;
use crate::error::{IsacError, Result};

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

/// Absolute pruning tolerance on the objective.
const PRUNE_TOL: f64 = 1e-9;
/// Relative row tolerance used to accept a binary point.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    /// `x_r`, empty when no feasible point was found.
    pub solution: Vec<f64>,
    pub objective_value: f64,
    pub status: BnbStatus,
    pub nodes_explored: usize,
    pub continuous_value: Option<f64>,
    /// Certified upper bound on the optimum.
    pub best_bound: f64,
    /// `best_bound - objective_value`, zero up to tolerance when optimal.
    pub gap: f64,
    /// Largest observed `child bound - parent bound` (at most rounding noise).
    pub max_bound_increase: f64,
}

#[derive(Debug, Clone)]
pub struct BnbOptions {
    pub node_limit: usize,
    /// Candidate incumbent checked before the search starts.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            warm_start: None,
        }
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    fixed: Vec<i8>,
    branch: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: higher bound, then deeper, then newer.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

struct Search<'a> {
    inst: &'a IlpInstance,
    best: Option<(f64, Vec<f64>, Option<f64>)>,
    lp_solves: usize,
}

enum Relaxation {
    Empty,
    Integral(f64),
    Fractional { bound: f64, branch: usize },
}

impl Search<'_> {
    fn incumbent_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0)
    }

    fn offer(&mut self, x: Vec<f64>) {
        if let Some((v, lambda)) = self.inst.evaluate(&x, FEAS_TOL) {
            if v > self.incumbent_value() {
                self.best = Some((v, x, lambda));
            }
        }
    }

    fn sign_round(&self, y: &[f64]) -> Vec<f64> {
        let c = self.inst.amplitude;
        y[..self.inst.n_binaries()]
            .iter()
            .map(|v| if *v < 0.0 { -c } else { c })
            .collect()
    }

    fn relax(&mut self, fixed: &[i8]) -> Result<Relaxation> {
        let c = self.inst.amplitude;
        let pins: Vec<Option<f64>> = fixed
            .iter()
            .map(|f| (*f != 0).then(|| f64::from(*f) * c))
            .collect();
        self.lp_solves += 1;
        let sol = solve_lp(&relaxation_lp(self.inst, &pins));
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(Relaxation::Empty),
            LpStatus::Unbounded => {
                return Err(IsacError::Degenerate(
                    "continuous variable is unbounded in the relaxation".into(),
                ))
            }
            LpStatus::IterationLimit => {
                return Err(IsacError::Degenerate("simplex iteration limit reached".into()))
            }
        }
        let rounded = self.sign_round(&sol.point);
        self.offer(rounded);

        // Branch on the fractional coordinate with the largest objective
        // weight, most fractional first among equals.
        let mut branch: Option<(usize, f64, f64)> = None;
        for (j, y) in sol.point[..self.inst.n_binaries()].iter().enumerate() {
            let frac = c - y.abs();
            if fixed[j] != 0 || frac <= 1e-9 * c {
                continue;
            }
            let weight = self.inst.objective[j].abs();
            let better = match branch {
                None => true,
                Some((_, w, f)) => weight > w || (weight == w && frac > f),
            };
            if better {
                branch = Some((j, weight, frac));
            }
        }
        Ok(match branch {
            None => Relaxation::Integral(sol.objective),
            Some((j, _, _)) => Relaxation::Fractional {
                bound: sol.objective,
                branch: j,
            },
        })
    }
}

/// Solve with default options and the given node budget.
pub fn solve_bnb(inst: &IlpInstance, node_limit: usize) -> Result<BnbResult> {
    solve_bnb_with(
        inst,
        &BnbOptions {
            node_limit,
            warm_start: None,
        },
    )
}

pub fn solve_bnb_with(inst: &IlpInstance, opts: &BnbOptions) -> Result<BnbResult> {
    inst.validate()?;
    let n = inst.n_binaries();
    let mut search = Search {
        inst,
        best: None,
        lp_solves: 0,
    };
    if let Some(x) = &opts.warm_start {
        if x.len() == n {
            let c = inst.amplitude;
            let snapped: Vec<f64> = x.iter().map(|v| if *v < 0.0 { -c } else { c }).collect();
            search.offer(snapped);
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut max_increase = f64::NEG_INFINITY;
    let root_fixed = vec![0i8; n];
    match search.relax(&root_fixed)? {
        Relaxation::Empty | Relaxation::Integral(_) => {}
        Relaxation::Fractional { bound, branch } => {
            heap.push(Node {
                bound,
                depth: 0,
                seq,
                fixed: root_fixed,
                branch,
            });
        }
    }

    let mut hit_limit = false;
    while let Some(node) = heap.pop() {
        if node.bound <= search.incumbent_value() + PRUNE_TOL {
            heap.clear();
            break;
        }
        if search.lp_solves >= opts.node_limit {
            heap.push(node);
            hit_limit = true;
            break;
        }
        for side in [1i8, -1] {
            let mut fixed = node.fixed.clone();
            fixed[node.branch] = side;
            let (bound, branch) = match search.relax(&fixed)? {
                Relaxation::Empty => continue,
                Relaxation::Integral(b) => (b, None),
                Relaxation::Fractional { bound, branch } => (bound, Some(branch)),
            };
            max_increase = max_increase.max(bound - node.bound);
            if let Some(branch) = branch {
                if bound > search.incumbent_value() + PRUNE_TOL {
                    seq += 1;
                    heap.push(Node {
                        bound,
                        depth: node.depth + 1,
                        seq,
                        fixed,
                        branch,
                    });
                }
            }
        }
    }

    let open_bound = heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
    Ok(match search.best {
        None if !hit_limit => BnbResult {
            solution: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            status: BnbStatus::Infeasible,
            nodes_explored: search.lp_solves,
            continuous_value: None,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            max_bound_increase: max_increase,
        },
        None => BnbResult {
            solution: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            status: BnbStatus::NodeLimit,
            nodes_explored: search.lp_solves,
            continuous_value: None,
            best_bound: open_bound,
            gap: f64::INFINITY,
            max_bound_increase: max_increase,
        },
        Some((value, x, lambda)) => {
            let best_bound = if hit_limit { open_bound.max(value) } else { value };
            BnbResult {
                solution: x,
                objective_value: value,
                status: if hit_limit {
                    BnbStatus::NodeLimit
                } else {
                    BnbStatus::Optimal
                },
                nodes_explored: search.lp_solves,
                continuous_value: lambda,
                best_bound,
                gap: best_bound - value,
                max_bound_increase: max_increase,
            }
        }
    })
}
