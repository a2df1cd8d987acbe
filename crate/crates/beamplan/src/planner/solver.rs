//! Recursive block value functions and the adaptive measurement plan.
//!
//! A block's value is the minimum expected number of new reference points
//! inside it given its endpoint evidence. A Type 1 block is free when some
//! split index lets the left endpoint cover the left piece and the right
//! endpoint the right piece; otherwise the best interior measurement point is
//! chosen and the block decomposes into two conditionally independent
//! sub-blocks. Type 2/3 blocks mirror this with one-sided evidence. The whole
//! trajectory is solved by choosing the first measurement point under the
//! unconditional skeleton law.
//!
//! All probabilities and expectations are exact rationals, so equal
//! quantities compare equal and threshold tests have no floating-point tie
//! ambiguity.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{BlockKind, BlockState, Decision, PlannerConfig};
use crate::prob::{ratio_from_f64, Prob};
use crate::skeleton::QuantizedSkeleton;
use crate::stochastic::SkeletonProcess;

/// An exact expected count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expectation(BigRational);

impl Expectation {
    pub(crate) fn from_ratio(v: BigRational) -> Self {
        Expectation(v)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Block value: finite expected count, or infeasible (the chance constraint
/// fails on a positive-probability realization under every policy).
#[derive(Debug, Clone, PartialEq)]
enum Cost {
    Finite(BigRational),
    Infeasible,
}

impl Cost {
    fn zero() -> Self {
        Cost::Finite(BigRational::zero())
    }

    fn add_scaled(&mut self, p: &Prob, v: &Cost) {
        match (&mut *self, v) {
            (Cost::Finite(acc), Cost::Finite(x)) => *acc += p * x,
            _ => *self = Cost::Infeasible,
        }
    }

    fn add(&mut self, v: &Cost) {
        match (&mut *self, v) {
            (Cost::Finite(acc), Cost::Finite(x)) => *acc += x,
            _ => *self = Cost::Infeasible,
        }
    }

    fn plus_one(mut self) -> Self {
        if let Cost::Finite(v) = &mut self {
            *v += BigRational::from_integer(1.into());
        }
        self
    }

    fn better_than(&self, other: &Cost) -> bool {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => a < b,
            (Cost::Finite(_), Cost::Infeasible) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
struct Eval {
    cost: Cost,
    decision: Option<Decision>,
}

/// Memoizing solver over one skeleton process and one parameter set.
pub struct Solver<'a> {
    process: &'a SkeletonProcess,
    epsilon: BigRational,
    n_states: usize,
    /// `dissim[(x-1)*S + s][(y-1)*S + t]` = `d(PS_x(s), PS_y(t)) <= gamma`.
    dissim: Vec<bool>,
    memo: HashMap<BlockState, Eval>,
}

impl<'a> Solver<'a> {
    pub fn new(process: &'a SkeletonProcess, config: &'a PlannerConfig) -> Result<Self> {
        config.validate()?;
        if process.l() != config.l {
            return Err(Error::InvalidArgument(format!(
                "planner L = {} does not match process L = {}",
                config.l,
                process.l()
            )));
        }
        if process.n_states() > config.state_cap {
            return Err(Error::Capacity(format!(
                "{} states exceed the planner cap of {}",
                process.n_states(),
                config.state_cap
            )));
        }
        let m = process.m();
        let s = process.n_states();
        let dim = m * s;
        let mut dissim = vec![false; dim * dim];
        for a in 0..dim {
            for b in a..dim {
                let (x, sx) = (a / s + 1, a % s);
                let (y, sy) = (b / s + 1, b % s);
                let d = crate::skeleton::quantized_distance(
                    process.skeleton(x, sx),
                    process.skeleton(y, sy),
                    process.bs_book(),
                    process.ue_book(),
                )?;
                let flag = d <= config.gamma;
                dissim[a * dim + b] = flag;
                dissim[b * dim + a] = flag;
            }
        }
        Ok(Self {
            process,
            epsilon: ratio_from_f64(config.epsilon)?,
            n_states: s,
            dissim,
            memo: HashMap::new(),
        })
    }

    pub fn process(&self) -> &SkeletonProcess {
        self.process
    }

    fn is_dissimilar(&self, x: usize, s: usize, y: usize, t: usize) -> bool {
        let dim = self.process.m() * self.n_states;
        self.dissim[((x - 1) * self.n_states + s) * dim + (y - 1) * self.n_states + t]
    }

    /// Exact `Pr{ d(PS(x), PS_y(t)) <= gamma | evidence } <= epsilon`.
    fn covered(
        &self,
        x: usize,
        ref_loc: usize,
        ref_state: usize,
        dist: &[Prob],
    ) -> bool {
        let mut mass = BigRational::zero();
        for (s, p) in dist.iter().enumerate() {
            if !p.is_zero() && self.is_dissimilar(x, s, ref_loc, ref_state) {
                mass += p;
            }
        }
        mass <= self.epsilon
    }

    fn conditional(&self, x: usize, state: &BlockState) -> Result<Vec<Prob>> {
        self.process.conditional_at(x, &state.evidence())
    }

    fn check_state(&self, state: &BlockState) -> Result<()> {
        let m = self.process.m();
        if state.x_l > state.x_h || state.x_h > m {
            return Err(Error::InvalidArgument(format!(
                "block ({}, {}] outside the trajectory of length {m}",
                state.x_l, state.x_h
            )));
        }
        match state.kind {
            BlockKind::Type1 => {
                if state.x_l == 0 || state.s_l.is_none() || state.s_h.is_none() {
                    return Err(Error::InvalidArgument(
                        "Type 1 block needs measured endpoints at x_l >= 1 and x_h".into(),
                    ));
                }
            }
            BlockKind::Type2 => {
                if state.x_l == 0 || state.s_l.is_none() || state.s_h.is_some() {
                    return Err(Error::InvalidArgument(
                        "Type 2 block needs exactly the left endpoint measured".into(),
                    ));
                }
            }
            BlockKind::Type3 => {
                if state.x_h == 0 || state.s_h.is_none() || state.s_l.is_some() {
                    return Err(Error::InvalidArgument(
                        "Type 3 block needs exactly the right endpoint measured".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn value(&mut self, state: &BlockState) -> Result<Eval> {
        if let Some(hit) = self.memo.get(state) {
            return Ok(hit.clone());
        }
        let eval = match state.kind {
            BlockKind::Type1 => self.eval_type1(state)?,
            BlockKind::Type2 => self.eval_type2(state)?,
            BlockKind::Type3 => self.eval_type3(state)?,
        };
        self.memo.insert(*state, eval.clone());
        Ok(eval)
    }

    /// Both endpoints known. Free when some split `alpha` in
    /// `{x_l, ..., x_h}` passes the two-sided coverage test; the degenerate
    /// `alpha = x_l` split (everything covered by the right endpoint) keeps
    /// singleton blocks solvable when the endpoints disagree.
    fn eval_type1(&mut self, state: &BlockState) -> Result<Eval> {
        if state.is_empty() {
            return Ok(Eval {
                cost: Cost::zero(),
                decision: Some(Decision::NoRef { alpha: state.x_l }),
            });
        }
        let (x_l, x_h) = (state.x_l, state.x_h);
        let (s_l, s_h) = (state.s_l.unwrap(), state.s_h.unwrap());

        let dists: Vec<Vec<Prob>> = (x_l + 1..=x_h)
            .map(|x| self.conditional(x, state))
            .collect::<Result<_>>()?;
        let ok_left: Vec<bool> = (x_l + 1..=x_h)
            .map(|x| self.covered(x, x_l, s_l, &dists[x - x_l - 1]))
            .collect();
        let ok_right: Vec<bool> = (x_l + 1..=x_h)
            .map(|x| self.covered(x, x_h, s_h, &dists[x - x_l - 1]))
            .collect();

        // suffix_ok[i]: every x > x_l + i passes the right test.
        let n = x_h - x_l;
        let mut suffix_ok = vec![true; n + 1];
        for i in (0..n).rev() {
            suffix_ok[i] = suffix_ok[i + 1] && ok_right[i];
        }
        let mut prefix_ok = true;
        for i in 0..=n {
            if i > 0 {
                prefix_ok = prefix_ok && ok_left[i - 1];
            }
            if prefix_ok && suffix_ok[i] {
                return Ok(Eval {
                    cost: Cost::zero(),
                    decision: Some(Decision::NoRef { alpha: x_l + i }),
                });
            }
            if !prefix_ok {
                break;
            }
        }

        // Place the next reference point; x_h is already measured.
        let mut best: Option<(Cost, usize)> = None;
        for x in x_l + 1..x_h {
            let dist = &dists[x - x_l - 1];
            let mut expect = Cost::zero();
            for (sigma, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let left = self.value(&BlockState::type1(x_l, x, s_l, sigma))?;
                let right = self.value(&BlockState::type1(x, x_h, sigma, s_h))?;
                let mut pair = left.cost.clone();
                pair.add(&right.cost);
                expect.add_scaled(p, &pair);
                if expect == Cost::Infeasible {
                    break;
                }
            }
            let total = expect.plus_one();
            if best.as_ref().is_none_or(|(c, _)| total.better_than(c)) {
                best = Some((total, x));
            }
        }
        Ok(match best {
            Some((cost @ Cost::Finite(_), x)) => Eval {
                cost,
                decision: Some(Decision::NewRef { x }),
            },
            _ => Eval {
                cost: Cost::Infeasible,
                decision: None,
            },
        })
    }

    /// Left endpoint known, open to the right. Free when the left endpoint
    /// covers the whole block.
    fn eval_type2(&mut self, state: &BlockState) -> Result<Eval> {
        if state.is_empty() {
            return Ok(Eval {
                cost: Cost::zero(),
                decision: Some(Decision::NoRef { alpha: state.x_l }),
            });
        }
        let (x_l, x_h) = (state.x_l, state.x_h);
        let s_l = state.s_l.unwrap();

        let dists: Vec<Vec<Prob>> = (x_l + 1..=x_h)
            .map(|x| self.conditional(x, state))
            .collect::<Result<_>>()?;
        if (x_l + 1..=x_h).all(|x| self.covered(x, x_l, s_l, &dists[x - x_l - 1])) {
            return Ok(Eval {
                cost: Cost::zero(),
                decision: Some(Decision::NoRef { alpha: x_h }),
            });
        }

        let mut best: Option<(Cost, usize)> = None;
        for x in x_l + 1..=x_h {
            let dist = &dists[x - x_l - 1];
            let mut expect = Cost::zero();
            for (sigma, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let left = self.value(&BlockState::type1(x_l, x, s_l, sigma))?;
                let right = self.value(&BlockState::type2(x, x_h, sigma))?;
                let mut pair = left.cost.clone();
                pair.add(&right.cost);
                expect.add_scaled(p, &pair);
                if expect == Cost::Infeasible {
                    break;
                }
            }
            let total = expect.plus_one();
            if best.as_ref().is_none_or(|(c, _)| total.better_than(c)) {
                best = Some((total, x));
            }
        }
        Ok(match best {
            Some((cost @ Cost::Finite(_), x)) => Eval {
                cost,
                decision: Some(Decision::NewRef { x }),
            },
            _ => Eval {
                cost: Cost::Infeasible,
                decision: None,
            },
        })
    }

    /// Right endpoint known, open to the left: the mirror of Type 2.
    /// Splitting at `x` yields a Type 3 block `(x_l, x]` and a Type 1 block
    /// `(x, x_h]`; `x_h` itself is already measured.
    fn eval_type3(&mut self, state: &BlockState) -> Result<Eval> {
        if state.is_empty() {
            return Ok(Eval {
                cost: Cost::zero(),
                decision: Some(Decision::NoRef { alpha: state.x_l }),
            });
        }
        let (x_l, x_h) = (state.x_l, state.x_h);
        let s_h = state.s_h.unwrap();

        let dists: Vec<Vec<Prob>> = (x_l + 1..=x_h)
            .map(|x| self.conditional(x, state))
            .collect::<Result<_>>()?;
        if (x_l + 1..=x_h).all(|x| self.covered(x, x_h, s_h, &dists[x - x_l - 1])) {
            return Ok(Eval {
                cost: Cost::zero(),
                decision: Some(Decision::NoRef { alpha: x_l }),
            });
        }

        let mut best: Option<(Cost, usize)> = None;
        for x in x_l + 1..x_h {
            let dist = &dists[x - x_l - 1];
            let mut expect = Cost::zero();
            for (sigma, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let left = self.value(&BlockState::type3(x_l, x, sigma))?;
                let right = self.value(&BlockState::type1(x, x_h, sigma, s_h))?;
                let mut pair = left.cost.clone();
                pair.add(&right.cost);
                expect.add_scaled(p, &pair);
                if expect == Cost::Infeasible {
                    break;
                }
            }
            let total = expect.plus_one();
            if best.as_ref().is_none_or(|(c, _)| total.better_than(c)) {
                best = Some((total, x));
            }
        }
        Ok(match best {
            Some((cost @ Cost::Finite(_), x)) => Eval {
                cost,
                decision: Some(Decision::NewRef { x }),
            },
            _ => Eval {
                cost: Cost::Infeasible,
                decision: None,
            },
        })
    }

    /// Value and decision of one block state.
    pub fn block_value(&mut self, state: &BlockState) -> Result<(Expectation, Decision)> {
        self.check_state(state)?;
        let eval = self.value(state)?;
        match (eval.cost, eval.decision) {
            (Cost::Finite(v), Some(d)) => Ok((Expectation(v), d)),
            _ => Err(Error::Infeasible(format!(
                "block ({}, {}] admits no feasible policy",
                state.x_l, state.x_h
            ))),
        }
    }

    /// Solve the whole trajectory: choose the first measurement point under
    /// the unconditional skeleton law and recurse into the flanking blocks.
    pub fn solve(&mut self) -> Result<Plan> {
        let m = self.process.m();
        let mut best: Option<(Cost, usize)> = None;
        for x in 1..=m {
            let dist = self.process.marginal(x).to_vec();
            let mut expect = Cost::zero();
            for (sigma, p) in dist.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let left = self.value(&BlockState::type3(0, x, sigma))?;
                let right = self.value(&BlockState::type2(x, m, sigma))?;
                let mut pair = left.cost.clone();
                pair.add(&right.cost);
                expect.add_scaled(p, &pair);
                if expect == Cost::Infeasible {
                    break;
                }
            }
            let total = expect.plus_one();
            if best.as_ref().is_none_or(|(c, _)| total.better_than(c)) {
                best = Some((total, x));
            }
        }
        let Some((Cost::Finite(expected), root)) = best else {
            return Err(Error::Infeasible(
                "no measurement policy satisfies the coverage constraints".into(),
            ));
        };

        let decisions = self.reachable_decisions(root)?;
        Ok(Plan {
            m,
            root,
            expected_k: Expectation(expected),
            decisions,
        })
    }

    /// Decisions for every block state reachable under the optimal policy.
    fn reachable_decisions(&mut self, root: usize) -> Result<HashMap<BlockState, Decision>> {
        let m = self.process.m();
        let mut out = HashMap::new();
        let mut stack: Vec<BlockState> = Vec::new();
        for (sigma, p) in self.process.marginal(root).to_vec().iter().enumerate() {
            if !p.is_zero() {
                stack.push(BlockState::type3(0, root, sigma));
                stack.push(BlockState::type2(root, m, sigma));
            }
        }
        while let Some(state) = stack.pop() {
            if out.contains_key(&state) {
                continue;
            }
            let eval = self.value(&state)?;
            let Some(decision) = eval.decision else {
                return Err(Error::Infeasible(format!(
                    "reachable block ({}, {}] is infeasible",
                    state.x_l, state.x_h
                )));
            };
            out.insert(state, decision);
            if let Decision::NewRef { x } = decision {
                let dist = self.conditional(x, &state)?;
                for (sigma, p) in dist.iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    match state.kind {
                        BlockKind::Type1 => {
                            stack.push(BlockState::type1(state.x_l, x, state.s_l.unwrap(), sigma));
                            stack.push(BlockState::type1(x, state.x_h, sigma, state.s_h.unwrap()));
                        }
                        BlockKind::Type2 => {
                            stack.push(BlockState::type1(state.x_l, x, state.s_l.unwrap(), sigma));
                            stack.push(BlockState::type2(x, state.x_h, sigma));
                        }
                        BlockKind::Type3 => {
                            stack.push(BlockState::type3(state.x_l, x, sigma));
                            stack.push(BlockState::type1(x, state.x_h, sigma, state.s_h.unwrap()));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Value and decision of a Type 1 block.
pub fn value_type1(
    state: &BlockState,
    process: &SkeletonProcess,
    config: &PlannerConfig,
) -> Result<(Expectation, Decision)> {
    if state.kind != BlockKind::Type1 {
        return Err(Error::InvalidArgument("expected a Type 1 state".into()));
    }
    Solver::new(process, config)?.block_value(state)
}

/// Value and decision of a Type 2 block.
pub fn value_type2(
    state: &BlockState,
    process: &SkeletonProcess,
    config: &PlannerConfig,
) -> Result<(Expectation, Decision)> {
    if state.kind != BlockKind::Type2 {
        return Err(Error::InvalidArgument("expected a Type 2 state".into()));
    }
    Solver::new(process, config)?.block_value(state)
}

/// Value and decision of a Type 3 block.
pub fn value_type3(
    state: &BlockState,
    process: &SkeletonProcess,
    config: &PlannerConfig,
) -> Result<(Expectation, Decision)> {
    if state.kind != BlockKind::Type3 {
        return Err(Error::InvalidArgument("expected a Type 3 state".into()));
    }
    Solver::new(process, config)?.block_value(state)
}

/// Compute the optimal adaptive plan for the whole trajectory.
pub fn solve(process: &SkeletonProcess, config: &PlannerConfig, m: usize) -> Result<Plan> {
    if m != process.m() {
        return Err(Error::InvalidArgument(format!(
            "solve: M = {m} does not match the process trajectory length {}",
            process.m()
        )));
    }
    Solver::new(process, config)?.solve()
}

/// The adaptive measurement policy: the first reference location, the exact
/// expected number of reference points, and a decision for every block state
/// reachable under the policy.
#[derive(Debug, Clone)]
pub struct Plan {
    m: usize,
    root: usize,
    expected_k: Expectation,
    decisions: HashMap<BlockState, Decision>,
}

impl Plan {
    pub fn m(&self) -> usize {
        self.m
    }

    /// First location to measure.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn expected_k(&self) -> &Expectation {
        &self.expected_k
    }

    pub fn decision(&self, state: &BlockState) -> Option<Decision> {
        self.decisions.get(state).copied()
    }

    pub fn decisions(&self) -> &HashMap<BlockState, Decision> {
        &self.decisions
    }

    /// JSON document with stable field names; endpoint skeletons are spelled
    /// out as beam-index pairs.
    pub fn to_doc(&self, process: &SkeletonProcess) -> PlanDoc {
        let mut decisions: Vec<BlockDecisionDoc> = self
            .decisions
            .iter()
            .map(|(state, decision)| BlockDecisionDoc {
                x_l: state.x_l,
                x_h: state.x_h,
                block_type: state.kind,
                s_l: state.s_l.map(|s| process.skeleton(state.x_l, s).clone()),
                s_h: state.s_h.map(|s| process.skeleton(state.x_h, s).clone()),
                decision: *decision,
            })
            .collect();
        decisions.sort_by(|a, b| {
            (a.x_l, a.x_h, a.block_type, &a.s_l, &a.s_h).cmp(&(
                b.x_l,
                b.x_h,
                b.block_type,
                &b.s_l,
                &b.s_h,
            ))
        });
        PlanDoc {
            m: self.m,
            expected_k: self.expected_k.to_f64(),
            expected_k_exact: self.expected_k.as_ratio().to_string(),
            root: self.root,
            decisions,
        }
    }
}

/// Serialized form of a [`Plan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDoc {
    pub m: usize,
    pub expected_k: f64,
    pub expected_k_exact: String,
    pub root: usize,
    pub decisions: Vec<BlockDecisionDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockDecisionDoc {
    pub x_l: usize,
    pub x_h: usize,
    pub block_type: BlockKind,
    pub s_l: Option<QuantizedSkeleton>,
    pub s_h: Option<QuantizedSkeleton>,
    pub decision: Decision,
}
