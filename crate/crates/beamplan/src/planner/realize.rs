//! Plan realization: walk the decision tree against realized skeletons and
//! emit the concrete regions and reference points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{BlockKind, BlockState, Decision, Plan};
use crate::skeleton::QuantizedSkeleton;
use crate::stochastic::SkeletonProcess;

/// Realized regions and reference points.
///
/// `boundaries` is the full list `alpha_0 = 0 <= ... <= alpha_K = M`; region
/// `k` is `{alpha_(k-1)+1, ..., alpha_k}` and uses `references[k-1]`.
/// `measured` lists every location whose skeleton was actually measured
/// (adjacent regions may share one reference, so it can be shorter than the
/// region list, and a measurement may end up referenced by no region).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub boundaries: Vec<usize>,
    pub references: Vec<usize>,
    pub measured: Vec<usize>,
}

impl Partition {
    /// Assemble from region pieces, merging adjacent pieces that share a
    /// reference.
    pub(crate) fn from_pieces(
        mut pieces: Vec<(usize, usize, usize)>,
        mut measured: Vec<usize>,
        m: usize,
    ) -> Result<Self> {
        pieces.retain(|(start, end, _)| start <= end);
        pieces.sort_unstable();
        let mut boundaries = vec![0usize];
        let mut references = Vec::new();
        for (start, end, reference) in pieces {
            if start != boundaries.last().unwrap() + 1 {
                return Err(Error::InvalidArgument(format!(
                    "region pieces do not tile the trajectory at {start}"
                )));
            }
            if references.last() == Some(&reference) {
                *boundaries.last_mut().unwrap() = end;
            } else {
                boundaries.push(end);
                references.push(reference);
            }
        }
        if *boundaries.last().unwrap() != m {
            return Err(Error::InvalidArgument(
                "region pieces do not reach the trajectory end".into(),
            ));
        }
        measured.sort_unstable();
        measured.dedup();
        let partition = Partition {
            boundaries,
            references,
            measured,
        };
        partition.validate(m)?;
        Ok(partition)
    }

    pub fn region_count(&self) -> usize {
        self.references.len()
    }

    /// Locations of region `k` (0-based).
    pub fn region(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        self.boundaries[k] + 1..=self.boundaries[k + 1]
    }

    /// Number of distinct measured locations (the pre-setup sweep count).
    pub fn measured_count(&self) -> usize {
        self.measured.len()
    }

    /// Check the partition invariants: boundaries strictly increasing from 0
    /// to `m`; every reference measured, inside `[1, m]`, and within its
    /// region's closed hull (the region itself or the locations immediately
    /// adjacent on either side, covering both endpoint conventions and
    /// shared-boundary references).
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.boundaries.first() != Some(&0) || self.boundaries.last() != Some(&m) {
            return Err(Error::InvalidArgument(
                "boundaries must run from 0 to M".into(),
            ));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "boundaries must be strictly increasing".into(),
            ));
        }
        if self.references.len() + 1 != self.boundaries.len() {
            return Err(Error::InvalidArgument(
                "need exactly one reference per region".into(),
            ));
        }
        for (k, &reference) in self.references.iter().enumerate() {
            let lo = self.boundaries[k].max(1);
            let hi = (self.boundaries[k + 1] + 1).min(m);
            if !(lo..=hi).contains(&reference) {
                return Err(Error::InvalidArgument(format!(
                    "reference {reference} outside the hull [{lo}, {hi}] of region {}",
                    k + 1
                )));
            }
            if !self.measured.contains(&reference) {
                return Err(Error::InvalidArgument(format!(
                    "reference {reference} was never measured"
                )));
            }
        }
        if self
            .measured
            .iter()
            .any(|&x| x == 0 || x > m)
        {
            return Err(Error::InvalidArgument(
                "measured locations must lie in [1, M]".into(),
            ));
        }
        Ok(())
    }
}

/// Walk a plan against realized skeletons. `measure` is called once per new
/// reference location (in tree order) and must return the skeleton observed
/// there; realizations outside the modeled alphabet fail with a
/// model-mismatch error.
pub fn realize_plan(
    plan: &Plan,
    process: &SkeletonProcess,
    measure: &mut dyn FnMut(usize) -> Result<QuantizedSkeleton>,
) -> Result<Partition> {
    if plan.m() != process.m() {
        return Err(Error::InvalidArgument(format!(
            "plan is for M = {}, process has M = {}",
            plan.m(),
            process.m()
        )));
    }
    let m = process.m();
    let mut observe = |loc: usize| -> Result<usize> {
        let q = measure(loc)?;
        process.state_of(loc, &q).ok_or_else(|| {
            Error::ModelMismatch(format!(
                "measured skeleton at location {loc} is outside the modeled alphabet"
            ))
        })
    };

    let root = plan.root();
    let sigma = observe(root)?;
    let mut measured = vec![root];
    let mut pieces: Vec<(usize, usize, usize)> = Vec::new();
    let mut stack = vec![
        BlockState::type3(0, root, sigma),
        BlockState::type2(root, m, sigma),
    ];

    while let Some(state) = stack.pop() {
        if state.is_empty() {
            continue;
        }
        let decision = plan.decision(&state).ok_or_else(|| {
            Error::ModelMismatch(format!(
                "plan has no decision for the realized block ({}, {}]; \
                 the realization has probability zero under the model",
                state.x_l, state.x_h
            ))
        })?;
        match decision {
            Decision::NoRef { alpha } => {
                // Left piece reuses x_l, right piece x_h.
                if alpha > state.x_l {
                    debug_assert!(state.kind != BlockKind::Type3);
                    pieces.push((state.x_l + 1, alpha, state.x_l));
                }
                if alpha < state.x_h {
                    debug_assert!(state.kind != BlockKind::Type2);
                    pieces.push((alpha + 1, state.x_h, state.x_h));
                }
            }
            Decision::NewRef { x } => {
                let sigma = observe(x)?;
                measured.push(x);
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
    Partition::from_pieces(pieces, measured, m)
}

/// Realize a plan on a sampled state path (state index per location).
pub fn realize_on_state_path(
    plan: &Plan,
    process: &SkeletonProcess,
    path: &[usize],
) -> Result<Partition> {
    if path.len() != process.m() {
        return Err(Error::InvalidArgument(format!(
            "state path has {} entries for M = {}",
            path.len(),
            process.m()
        )));
    }
    realize_plan(plan, process, &mut |loc| {
        Ok(process.skeleton(loc, path[loc - 1]).clone())
    })
}
