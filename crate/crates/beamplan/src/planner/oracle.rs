//! Exhaustive expectimax over adaptive measurement policies.
//!
//! The information state is the set of (measured location, realized skeleton)
//! pairs. Chance nodes are weighted by exact conditional laws obtained by
//! enumerating all state paths, and a terminal state is one whose
//! measurements admit a feasible partition, checked by exhaustive enumeration
//! of boundary sets and edge references under full conditioning. No block
//! decomposition or recursive value structure is assumed, so agreement with
//! the solver validates that structure end to end.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::planner::solver::Expectation;
use crate::planner::PlannerConfig;
use crate::prob::{ratio_from_f64, Prob};
use crate::stochastic::SkeletonProcess;

/// Minimum expected number of measurements over all adaptive policies.
pub fn oracle_expectimax(
    process: &SkeletonProcess,
    config: &PlannerConfig,
    m: usize,
) -> Result<Expectation> {
    config.validate()?;
    if m != process.m() {
        return Err(Error::InvalidArgument(format!(
            "oracle: M = {m} does not match the process trajectory length {}",
            process.m()
        )));
    }
    if m > config.oracle_m_cap {
        return Err(Error::Capacity(format!(
            "oracle: M = {m} exceeds the cap of {}",
            config.oracle_m_cap
        )));
    }
    if process.n_states() > config.oracle_state_cap {
        return Err(Error::Capacity(format!(
            "oracle: {} states exceed the cap of {}",
            process.n_states(),
            config.oracle_state_cap
        )));
    }
    let mut oracle = Oracle::new(process, config)?;
    match oracle.value(&Vec::new()) {
        Cost::Finite(v) => Ok(Expectation::from_ratio(v)),
        Cost::Infeasible => Err(Error::Infeasible(
            "no measurement policy satisfies the coverage constraints".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cost {
    Finite(BigRational),
    Infeasible,
}

type Info = Vec<(usize, usize)>;

struct Oracle {
    m: usize,
    s: usize,
    epsilon: BigRational,
    /// Every state path with its exact joint probability.
    paths: Vec<(Vec<usize>, Prob)>,
    dissim: Vec<bool>,
    memo: HashMap<Info, Cost>,
}

impl Oracle {
    fn new(process: &SkeletonProcess, config: &PlannerConfig) -> Result<Self> {
        let m = process.m();
        let s = process.n_states();
        let mut paths: Vec<(Vec<usize>, Prob)> = process
            .initial_dist()
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(st, p)| (vec![st], p.clone()))
            .collect();
        for x in 1..m {
            let kernel = process.step_kernel(x);
            let mut next = Vec::with_capacity(paths.len() * s);
            for (path, p) in &paths {
                let last = *path.last().unwrap();
                for t in 0..s {
                    let q = kernel.entry(last, t);
                    if q.is_zero() {
                        continue;
                    }
                    let mut np = path.clone();
                    np.push(t);
                    next.push((np, p * q));
                }
            }
            paths = next;
        }

        let dim = m * s;
        let mut dissim = vec![false; dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                let (x, sx) = (a / s + 1, a % s);
                let (y, sy) = (b / s + 1, b % s);
                let d = crate::skeleton::quantized_distance(
                    process.skeleton(x, sx),
                    process.skeleton(y, sy),
                    process.bs_book(),
                    process.ue_book(),
                )?;
                dissim[a * dim + b] = d <= config.gamma;
            }
        }

        Ok(Self {
            m,
            s,
            epsilon: ratio_from_f64(config.epsilon)?,
            paths,
            dissim,
            memo: HashMap::new(),
        })
    }

    fn is_dissimilar(&self, x: usize, sx: usize, y: usize, sy: usize) -> bool {
        let dim = self.m * self.s;
        self.dissim[((x - 1) * self.s + sx) * dim + (y - 1) * self.s + sy]
    }

    /// Unnormalized posterior over states per location, plus the total mass
    /// of paths consistent with the measurements.
    fn posterior(&self, info: &Info) -> (Vec<Vec<Prob>>, Prob) {
        let mut post = vec![vec![Prob::zero(); self.s]; self.m];
        let mut total = Prob::zero();
        'paths: for (path, p) in &self.paths {
            for &(loc, st) in info {
                if path[loc - 1] != st {
                    continue 'paths;
                }
            }
            total += p;
            for (x, &st) in path.iter().enumerate() {
                post[x][st] += p;
            }
        }
        (post, total)
    }

    /// Exhaustive partition feasibility: some boundary set containing every
    /// measured location, with an edge reference per region, must pass the
    /// coverage test at every location under full conditioning.
    fn feasible(&self, info: &Info, post: &[Vec<Prob>], total: &Prob) -> bool {
        if info.is_empty() {
            return false;
        }
        let measured: HashMap<usize, usize> = info.iter().copied().collect();
        let inner: Vec<usize> = (1..self.m).collect();
        let threshold_scale = total; // compare mass <= epsilon * total

        // A region (a, b] is coverable if some measured edge reference
        // (a or b) passes the test at every interior location.
        let region_ok = |a: usize, b: usize| -> bool {
            let candidates = [a, b];
            'refs: for &r in &candidates {
                if r == 0 {
                    continue;
                }
                let Some(&ref_state) = measured.get(&r) else {
                    continue;
                };
                for x in a + 1..=b {
                    let mut mass = Prob::zero();
                    for (st, w) in post[x - 1].iter().enumerate() {
                        if !w.is_zero() && self.is_dissimilar(x, st, r, ref_state) {
                            mass += w;
                        }
                    }
                    if mass > &self.epsilon * threshold_scale {
                        continue 'refs;
                    }
                }
                return true;
            }
            false
        };

        // Boundary sets as bitmasks over the inner positions 1..m-1; every
        // measured location below m must be a boundary.
        let n_inner = inner.len();
        'masks: for mask in 0..(1u32 << n_inner) {
            for &loc in measured.keys() {
                if loc < self.m && mask & (1 << (loc - 1)) == 0 {
                    continue 'masks;
                }
            }
            let mut edges = vec![0usize];
            for (i, &pos) in inner.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    edges.push(pos);
                }
            }
            edges.push(self.m);
            if edges.windows(2).all(|w| region_ok(w[0], w[1])) {
                return true;
            }
        }
        false
    }

    fn value(&mut self, info: &Info) -> Cost {
        if let Some(hit) = self.memo.get(info) {
            return hit.clone();
        }
        let (post, total) = self.posterior(info);
        let result = if self.feasible(info, &post, &total) {
            Cost::Finite(BigRational::zero())
        } else if info.len() == self.m {
            Cost::Infeasible
        } else {
            let mut best: Option<Cost> = None;
            for x in 1..=self.m {
                if info.iter().any(|&(loc, _)| loc == x) {
                    continue;
                }
                // E[V | measure x] = sum_sigma w_sigma V(child) / total.
                let mut acc = Some(BigRational::zero());
                for (st, w) in post[x - 1].iter().enumerate() {
                    let w = w.clone();
                    if w.is_zero() {
                        continue;
                    }
                    let mut child: Info = info.clone();
                    child.push((x, st));
                    child.sort_unstable();
                    match self.value(&child) {
                        Cost::Finite(v) => {
                            if let Some(a) = &mut acc {
                                *a += w * v;
                            }
                        }
                        Cost::Infeasible => {
                            acc = None;
                            break;
                        }
                    }
                }
                let total_cost = match acc {
                    Some(a) => Cost::Finite(BigRational::from_integer(1.into()) + a / &total),
                    None => Cost::Infeasible,
                };
                let better = match (&total_cost, &best) {
                    (_, None) => true,
                    (Cost::Finite(a), Some(Cost::Finite(b))) => a < b,
                    (Cost::Finite(_), Some(Cost::Infeasible)) => true,
                    _ => false,
                };
                if better {
                    best = Some(total_cost);
                }
            }
            best.unwrap_or(Cost::Infeasible)
        };
        self.memo.insert(info.clone(), result.clone());
        result
    }
}

