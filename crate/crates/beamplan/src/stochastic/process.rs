//! The finite-alphabet Markov skeleton process.
//!
//! States are blockage patterns over the candidate paths; each state carries
//! one quantized skeleton per location. Construction verifies that the
//! pattern-to-skeleton labeling is injective at every location, so the
//! observed skeleton sequence is itself a Markov chain and conditional laws
//! computed from endpoint evidence are exact.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::arraysim::{Codebook, PathComponent};
use crate::error::{Error, Result};
use crate::prob::{normalize, prob_from_f64, to_f64, Prob, ProbMatrix};
use crate::skeleton::{extract_skeleton, quantize_skeleton, QuantizedSkeleton};
use crate::stochastic::{BlockageModel, PathBlockage, Scenario};

/// Largest state count `derive_process` will build.
pub const DEFAULT_STATE_CAP: usize = 64;
/// Largest state count for which conditional laws are enumerated exactly;
/// beyond it `coverage_prob` falls back to seeded Monte Carlo.
pub const DEFAULT_ENUMERATION_CAP: usize = 64;

/// Conditioning evidence for laws of the skeleton at an interior location,
/// mirroring the three block shapes: both endpoints, left only, right only.
/// Locations are 1-based; states index the process alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Evidence {
    Both {
        x_l: usize,
        s_l: usize,
        x_h: usize,
        s_h: usize,
    },
    Left {
        x_l: usize,
        s_l: usize,
    },
    Right {
        x_h: usize,
        s_h: usize,
    },
    Unconditional,
}

/// A coverage probability, annotated with how it was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageProb {
    Exact(f64),
    MonteCarlo {
        value: f64,
        samples: usize,
        std_error: f64,
    },
}

impl CoverageProb {
    pub fn value(&self) -> f64 {
        match self {
            CoverageProb::Exact(v) => *v,
            CoverageProb::MonteCarlo { value, .. } => *value,
        }
    }
}

/// Transition structure: one shared per-step kernel, or one kernel per step
/// (as a ray-trace importer may attach).
#[derive(Debug, Clone)]
enum Kernels {
    Homogeneous {
        kernel: ProbMatrix,
        /// `powers[k]` = kernel^k for k in 0..m.
        powers: Vec<ProbMatrix>,
    },
    PerStep {
        steps: Vec<ProbMatrix>,
        /// `segments[i][k]` = product of steps i..i+k (location i+1 to
        /// location i+1+k); `segments[i][0]` is the identity.
        segments: Vec<Vec<ProbMatrix>>,
    },
}

impl Kernels {
    /// Transition matrix across `steps` steps starting at location `from_x`.
    fn segment(&self, from_x: usize, steps: usize) -> &ProbMatrix {
        match self {
            Kernels::Homogeneous { powers, .. } => &powers[steps],
            Kernels::PerStep { segments, .. } => &segments[from_x - 1][steps],
        }
    }

    /// The single-step kernel out of location `from_x`.
    fn step(&self, from_x: usize) -> &ProbMatrix {
        match self {
            Kernels::Homogeneous { kernel, .. } => kernel,
            Kernels::PerStep { steps, .. } => &steps[from_x - 1],
        }
    }
}

/// Discrete Markov model of quantized skeletons along the trajectory.
#[derive(Debug, Clone)]
pub struct SkeletonProcess {
    m: usize,
    l: usize,
    bs_book: Codebook,
    ue_book: Codebook,
    /// `labels[x-1][s]` is the skeleton of state `s` at location `x`.
    labels: Vec<Vec<QuantizedSkeleton>>,
    lookup: Vec<HashMap<QuantizedSkeleton, usize>>,
    kernels: Kernels,
    initial: Vec<Prob>,
    /// `marginals[x-1]` = law of the state at location `x`.
    marginals: Vec<Vec<Prob>>,
    /// Per-step kernels as `f64`, for sampling.
    steps_f64: Vec<Vec<Vec<f64>>>,
    initial_f64: Vec<f64>,
    enumeration_cap: usize,
    mc_samples: usize,
    /// For processes derived from a scenario: per state, the blocked flag of
    /// each candidate path.
    state_patterns: Option<Vec<Vec<bool>>>,
}

impl SkeletonProcess {
    /// Assemble a process from explicit parts. The initial distribution and
    /// kernel rows are exactly renormalized; labels must be distinct within
    /// each location.
    pub fn from_parts(
        labels: Vec<Vec<QuantizedSkeleton>>,
        kernel: ProbMatrix,
        initial: Vec<Prob>,
        bs_book: Codebook,
        ue_book: Codebook,
        l: usize,
    ) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidArgument(
                "skeleton process needs at least one location".into(),
            ));
        }
        let mut powers = Vec::with_capacity(m);
        powers.push(ProbMatrix::identity(kernel.n()));
        for k in 1..m {
            let next = powers[k - 1].mul(&kernel);
            powers.push(next);
        }
        let kernels = Kernels::Homogeneous { kernel, powers };
        Self::assemble(labels, kernels, initial, bs_book, ue_book, l)
    }

    /// Assemble a process with one kernel per trajectory step (`m - 1`
    /// matrices), e.g. when imported data carries location-dependent
    /// transition statistics.
    pub fn from_parts_per_step(
        labels: Vec<Vec<QuantizedSkeleton>>,
        steps: Vec<ProbMatrix>,
        initial: Vec<Prob>,
        bs_book: Codebook,
        ue_book: Codebook,
        l: usize,
    ) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::InvalidArgument(
                "skeleton process needs at least one location".into(),
            ));
        }
        if steps.len() + 1 != m {
            return Err(Error::InvalidArgument(format!(
                "need {} per-step kernels for {m} locations, got {}",
                m - 1,
                steps.len()
            )));
        }
        let n = initial.len();
        if steps.iter().any(|k| k.n() != n) {
            return Err(Error::InvalidArgument(
                "per-step kernels must all match the state count".into(),
            ));
        }
        if m * m * n * n > 8_000_000 {
            return Err(Error::Capacity(
                "per-step segment cache would exceed the size budget".into(),
            ));
        }
        let mut segments = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m - i);
            row.push(ProbMatrix::identity(n));
            for k in 1..m - i {
                let next = row[k - 1].mul(&steps[i + k - 1]);
                row.push(next);
            }
            segments.push(row);
        }
        let kernels = Kernels::PerStep { steps, segments };
        Self::assemble(labels, kernels, initial, bs_book, ue_book, l)
    }

    fn assemble(
        labels: Vec<Vec<QuantizedSkeleton>>,
        kernels: Kernels,
        initial: Vec<Prob>,
        bs_book: Codebook,
        ue_book: Codebook,
        l: usize,
    ) -> Result<Self> {
        let m = labels.len();
        let n = initial.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "initial distribution is empty".into(),
            ));
        }
        if (1..m).any(|x| kernels.step(x).n() != n) {
            return Err(Error::InvalidArgument(format!(
                "kernel state count does not match the {n}-entry initial distribution"
            )));
        }
        if initial.iter().any(|p| p < &Prob::zero()) {
            return Err(Error::InvalidArgument(
                "initial distribution has a negative entry".into(),
            ));
        }
        let initial = normalize(&initial)
            .map_err(|_| Error::InvalidArgument("initial distribution sums to zero".into()))?;

        let mut lookup = Vec::with_capacity(m);
        for (x, row) in labels.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "location {} has {} labels for a {n}-state chain",
                    x + 1,
                    row.len()
                )));
            }
            let mut map = HashMap::with_capacity(n);
            for (s, q) in row.iter().enumerate() {
                if q.l() != l {
                    return Err(Error::InvalidArgument(format!(
                        "label at location {} state {s} has length {} (expected L = {l})",
                        x + 1,
                        q.l()
                    )));
                }
                if map.insert(q.clone(), s).is_some() {
                    return Err(Error::ModelMismatch(format!(
                        "two states share one skeleton at location {}; \
                         the observed process would not be Markov",
                        x + 1
                    )));
                }
            }
            lookup.push(map);
        }

        let mut marginals = Vec::with_capacity(m);
        marginals.push(initial.clone());
        for x in 1..m {
            let step = kernels.step(x);
            let prev = &marginals[x - 1];
            let mut next = vec![Prob::zero(); n];
            for (s, p) in prev.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                for (t, q) in step.row(s).iter().enumerate() {
                    if !q.is_zero() {
                        next[t] += p * q;
                    }
                }
            }
            marginals.push(next);
        }

        let steps_f64 = (1..m).map(|x| kernels.step(x).to_f64ptr()).collect();
        let initial_f64 = initial.iter().map(to_f64).collect();

        Ok(Self {
            m,
            l,
            bs_book,
            ue_book,
            labels,
            lookup,
            kernels,
            initial,
            marginals,
            steps_f64,
            initial_f64,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            mc_samples: 20_000,
            state_patterns: None,
        })
    }

    /// Same as [`from_parts`](Self::from_parts) with `f64` inputs; kernel rows
    /// must sum to 1 within 1e-12.
    pub fn from_parts_f64(
        labels: Vec<Vec<QuantizedSkeleton>>,
        kernel_rows: &[Vec<f64>],
        initial: &[f64],
        bs_book: Codebook,
        ue_book: Codebook,
        l: usize,
    ) -> Result<Self> {
        let kernel = ProbMatrix::from_f64_rows(kernel_rows, 1e-12)?;
        let initial = initial
            .iter()
            .map(|&p| prob_from_f64(p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(labels, kernel, initial, bs_book, ue_book, l)
    }

    /// Blocked flags per candidate path for state `s`, when the process was
    /// derived from scenario geometry.
    pub fn blockage_pattern(&self, state: usize) -> Option<&[bool]> {
        self.state_patterns.as_ref().map(|p| p[state].as_slice())
    }

    pub(crate) fn with_state_patterns(mut self, patterns: Vec<Vec<bool>>) -> Self {
        self.state_patterns = Some(patterns);
        self
    }

    pub fn with_enumeration_cap(mut self, cap: usize, mc_samples: usize) -> Self {
        self.enumeration_cap = cap.max(1);
        self.mc_samples = mc_samples.max(100);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn bs_book(&self) -> &Codebook {
        &self.bs_book
    }

    pub fn ue_book(&self) -> &Codebook {
        &self.ue_book
    }

    /// Skeleton values reachable at location `x` (indexed by state).
    pub fn alphabet(&self, x: usize) -> &[QuantizedSkeleton] {
        &self.labels[x - 1]
    }

    pub fn skeleton(&self, x: usize, state: usize) -> &QuantizedSkeleton {
        &self.labels[x - 1][state]
    }

    /// State index whose skeleton at `x` equals `q`, if any.
    pub fn state_of(&self, x: usize, q: &QuantizedSkeleton) -> Option<usize> {
        self.lookup[x - 1].get(q).copied()
    }

    pub fn initial_dist(&self) -> &[Prob] {
        &self.initial
    }

    /// The shared per-step kernel of a homogeneous process (for a per-step
    /// process this is the first step's kernel).
    pub fn per_step_kernel(&self) -> &ProbMatrix {
        self.step_kernel(1)
    }

    /// The single-step kernel out of location `from_x` (1-based,
    /// `from_x < M`).
    pub fn step_kernel(&self, from_x: usize) -> &ProbMatrix {
        assert!(
            from_x >= 1 && (from_x < self.m || self.m == 1),
            "step_kernel: location {from_x} has no outgoing step"
        );
        self.kernels.step(from_x.min(self.m.saturating_sub(1)).max(1))
    }

    /// Whether the process shares one kernel across all steps.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kernels, Kernels::Homogeneous { .. })
    }

    /// Marginal law of the state at location `x`.
    pub fn marginal(&self, x: usize) -> &[Prob] {
        &self.marginals[x - 1]
    }

    /// `kernel^steps` of a homogeneous process; steps = 0 gives the
    /// identity. Per-step processes have no single power and are rejected
    /// (use [`segment_kernel`](Self::segment_kernel)).
    pub fn transition_kernel(&self, steps: usize) -> Result<ProbMatrix> {
        let Kernels::Homogeneous { kernel, powers } = &self.kernels else {
            return Err(Error::InvalidArgument(
                "transition_kernel: process has per-step kernels; use segment_kernel".into(),
            ));
        };
        if steps < powers.len() {
            return Ok(powers[steps].clone());
        }
        let mut acc = powers.last().unwrap().clone();
        for _ in powers.len() - 1..steps {
            acc = acc.mul(kernel);
        }
        Ok(acc)
    }

    /// Transition matrix from location `from_x` to location `to_x`.
    pub fn segment_kernel(&self, from_x: usize, to_x: usize) -> Result<ProbMatrix> {
        self.check_loc(from_x, "segment_kernel")?;
        self.check_loc(to_x, "segment_kernel")?;
        if to_x < from_x {
            return Err(Error::InvalidArgument(format!(
                "segment_kernel: {to_x} lies before {from_x}"
            )));
        }
        Ok(self.segment(from_x, to_x - from_x).clone())
    }

    fn segment(&self, from_x: usize, steps: usize) -> &ProbMatrix {
        self.kernels.segment(from_x, steps)
    }

    fn check_loc(&self, x: usize, what: &str) -> Result<()> {
        if x == 0 || x > self.m {
            return Err(Error::InvalidArgument(format!(
                "{what}: location {x} outside 1..={}",
                self.m
            )));
        }
        Ok(())
    }

    /// Law of the state at `x` given states at both endpoints:
    /// `P(S_x = s | S_xl = s_l, S_xh = s_h)`.
    pub fn bridge_distribution(
        &self,
        x_l: usize,
        x_h: usize,
        x: usize,
        s_l: usize,
        s_h: usize,
    ) -> Result<Vec<Prob>> {
        self.check_loc(x_l, "bridge")?;
        self.check_loc(x_h, "bridge")?;
        self.check_loc(x, "bridge")?;
        if !(x_l <= x && x <= x_h) {
            return Err(Error::InvalidArgument(format!(
                "bridge: need x_l <= x <= x_h, got {x_l} <= {x} <= {x_h}"
            )));
        }
        if self.marginals[x_l - 1][s_l].is_zero()
            || self.segment(x_l, x_h - x_l).entry(s_l, s_h).is_zero()
        {
            return Err(Error::NullConditioning(format!(
                "endpoint pair (x_l={x_l}, s_l={s_l}) -> (x_h={x_h}, s_h={s_h}) has probability 0"
            )));
        }
        let fwd = self.segment(x_l, x - x_l);
        let bwd = self.segment(x, x_h - x);
        let weights: Vec<Prob> = (0..self.n_states())
            .map(|s| fwd.entry(s_l, s) * bwd.entry(s, s_h))
            .collect();
        normalize(&weights)
    }

    /// Conditional law of the state at `x` under the given evidence.
    pub fn conditional_at(&self, x: usize, evidence: &Evidence) -> Result<Vec<Prob>> {
        self.check_loc(x, "conditional_at")?;
        match *evidence {
            Evidence::Both { x_l, s_l, x_h, s_h } => {
                self.bridge_distribution(x_l, x_h, x, s_l, s_h)
            }
            Evidence::Left { x_l, s_l } => {
                self.check_loc(x_l, "conditional_at")?;
                if x < x_l {
                    return Err(Error::InvalidArgument(format!(
                        "conditional_at: x = {x} left of evidence at {x_l}"
                    )));
                }
                if self.marginals[x_l - 1][s_l].is_zero() {
                    return Err(Error::NullConditioning(format!(
                        "state {s_l} has probability 0 at location {x_l}"
                    )));
                }
                Ok(self.segment(x_l, x - x_l).row(s_l).to_vec())
            }
            Evidence::Right { x_h, s_h } => {
                self.check_loc(x_h, "conditional_at")?;
                if x > x_h {
                    return Err(Error::InvalidArgument(format!(
                        "conditional_at: x = {x} right of evidence at {x_h}"
                    )));
                }
                if self.marginals[x_h - 1][s_h].is_zero() {
                    return Err(Error::NullConditioning(format!(
                        "state {s_h} has probability 0 at location {x_h}"
                    )));
                }
                // Bayes with the forward kernel and the marginal at x.
                let step = self.segment(x, x_h - x);
                let weights: Vec<Prob> = (0..self.n_states())
                    .map(|s| &self.marginals[x - 1][s] * step.entry(s, s_h))
                    .collect();
                normalize(&weights)
            }
            Evidence::Unconditional => Ok(self.marginal(x).to_vec()),
        }
    }

    /// Exact full-conditioning posterior of the state at `x` given measured
    /// `(location, state)` pairs. Under the Markov law only the nearest
    /// measured neighbors of `x` matter.
    pub fn posterior_given_measurements(
        &self,
        x: usize,
        measured: &[(usize, usize)],
    ) -> Result<Vec<Prob>> {
        self.check_loc(x, "posterior")?;
        let mut left: Option<(usize, usize)> = None;
        let mut right: Option<(usize, usize)> = None;
        for &(loc, state) in measured {
            self.check_loc(loc, "posterior")?;
            if loc == x {
                let mut dist = vec![Prob::zero(); self.n_states()];
                dist[state] = Prob::one();
                return Ok(dist);
            }
            if loc < x && left.is_none_or(|(l, _)| loc > l) {
                left = Some((loc, state));
            }
            if loc > x && right.is_none_or(|(r, _)| loc < r) {
                right = Some((loc, state));
            }
        }
        let evidence = match (left, right) {
            (Some((x_l, s_l)), Some((x_h, s_h))) => Evidence::Both { x_l, s_l, x_h, s_h },
            (Some((x_l, s_l)), None) => Evidence::Left { x_l, s_l },
            (None, Some((x_h, s_h))) => Evidence::Right { x_h, s_h },
            (None, None) => Evidence::Unconditional,
        };
        self.conditional_at(x, &evidence)
    }

    /// Whether the skeleton of state `s` at `x` is dissimilar from `ps_ref`
    /// under threshold `gamma` (the chance-constraint event).
    pub fn dissimilar(&self, x: usize, s: usize, ps_ref: &QuantizedSkeleton, gamma: f64) -> bool {
        let d = crate::skeleton::quantized_distance(
            self.skeleton(x, s),
            ps_ref,
            &self.bs_book,
            &self.ue_book,
        )
        .expect("labels share L by construction");
        d <= gamma
    }

    /// Exact `Pr{ d(PS(x), ps_ref) <= gamma | evidence }` by summation over
    /// the alphabet at `x`.
    pub fn coverage_prob_exact(
        &self,
        x: usize,
        ps_ref: &QuantizedSkeleton,
        evidence: &Evidence,
        gamma: f64,
    ) -> Result<Prob> {
        let dist = self.conditional_at(x, evidence)?;
        let mut acc = Prob::zero();
        for (s, p) in dist.iter().enumerate() {
            if !p.is_zero() && self.dissimilar(x, s, ps_ref, gamma) {
                acc += p;
            }
        }
        Ok(acc)
    }

    /// `Pr{ d(PS(x), ps_ref) <= gamma | evidence }`. Exact when the state
    /// count is within the enumeration cap, otherwise a seeded Monte Carlo
    /// estimate over conditioned sample paths.
    pub fn coverage_prob(
        &self,
        x: usize,
        ps_ref: &QuantizedSkeleton,
        evidence: &Evidence,
        gamma: f64,
    ) -> Result<CoverageProb> {
        if self.n_states() <= self.enumeration_cap {
            return Ok(CoverageProb::Exact(to_f64(
                &self.coverage_prob_exact(x, ps_ref, evidence, gamma)?,
            )));
        }
        self.coverage_prob_mc(x, ps_ref, evidence, gamma)
    }

    fn coverage_prob_mc(
        &self,
        x: usize,
        ps_ref: &QuantizedSkeleton,
        evidence: &Evidence,
        gamma: f64,
    ) -> Result<CoverageProb> {
        use rand_chacha::rand_core::SeedableRng;
        use std::hash::{Hash, Hasher};

        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        (x, evidence).hash(&mut hasher);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(hasher.finish());

        let mut hits = 0usize;
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        let max_attempts = self.mc_samples.saturating_mul(50);
        while accepted < self.mc_samples && attempts < max_attempts {
            attempts += 1;
            let path = self.sample_path(&mut rng);
            let consistent = match *evidence {
                Evidence::Both { x_l, s_l, x_h, s_h } => {
                    path[x_l - 1] == s_l && path[x_h - 1] == s_h
                }
                Evidence::Left { x_l, s_l } => path[x_l - 1] == s_l,
                Evidence::Right { x_h, s_h } => path[x_h - 1] == s_h,
                Evidence::Unconditional => true,
            };
            if !consistent {
                continue;
            }
            accepted += 1;
            if self.dissimilar(x, path[x - 1], ps_ref, gamma) {
                hits += 1;
            }
        }
        if accepted < 100 {
            return Err(Error::Capacity(format!(
                "monte carlo coverage: only {accepted} accepted samples in {attempts} attempts"
            )));
        }
        let value = hits as f64 / accepted as f64;
        let std_error = (value * (1.0 - value) / accepted as f64).sqrt();
        Ok(CoverageProb::MonteCarlo {
            value,
            samples: accepted,
            std_error,
        })
    }

    /// Sample one state path over all locations.
    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.m);
        let first = WeightedIndex::new(&self.initial_f64)
            .expect("initial distribution is normalized")
            .sample(rng);
        path.push(first);
        for x in 1..self.m {
            let prev = *path.last().unwrap();
            let next = WeightedIndex::new(&self.steps_f64[x - 1][prev])
                .expect("kernel rows are normalized")
                .sample(rng);
            path.push(next);
        }
        path
    }

    /// Sample a state from an exact conditional distribution.
    pub fn sample_state<R: Rng>(&self, dist: &[Prob], rng: &mut R) -> usize {
        let weights: Vec<f64> = dist.iter().map(to_f64).collect();
        WeightedIndex::new(&weights)
            .expect("distribution is normalized")
            .sample(rng)
    }
}

/// Build the skeleton process of a scenario under independent per-path
/// blockage: states are reachable blockage patterns, the kernel their tensor
/// product chain, and labels the quantized skeletons of each pattern.
pub fn derive_process(
    scenario: &Scenario,
    blockage: &BlockageModel,
    bs_book: &Codebook,
    ue_book: &Codebook,
    l: usize,
    state_cap: usize,
) -> Result<SkeletonProcess> {
    let path_count = scenario.path_count().ok_or_else(|| {
        Error::InvalidArgument(
            "derive_process: candidate path count differs across locations".into(),
        )
    })?;
    if path_count == 0 {
        return Err(Error::InvalidArgument(
            "derive_process: scenario has no candidate paths".into(),
        ));
    }
    if blockage.path_count() != path_count {
        return Err(Error::InvalidArgument(format!(
            "derive_process: blockage model has {} paths, scenario has {path_count}",
            blockage.path_count()
        )));
    }
    if l == 0 || l > path_count {
        return Err(Error::InvalidArgument(format!(
            "derive_process: L = {l} must be in 1..={path_count}"
        )));
    }

    // Reachable per-path states (0 = unblocked, 1 = blocked): support of the
    // initial law, closed under positive transitions.
    let mut per_path_states: Vec<Vec<u8>> = Vec::with_capacity(path_count);
    for pb in blockage.paths() {
        let mut reach = [pb.p_blocked_initial < 1.0, pb.p_blocked_initial > 0.0];
        loop {
            let next = [
                reach[0] || (reach[1] && pb.rho_stay_blocked < 1.0),
                reach[1] || (reach[0] && pb.rho_stay_unblocked < 1.0),
            ];
            if next == reach {
                break;
            }
            reach = next;
        }
        let states: Vec<u8> = [0u8, 1u8]
            .into_iter()
            .filter(|&s| reach[s as usize])
            .collect();
        per_path_states.push(states);
    }

    let n_states: usize = per_path_states.iter().map(|s| s.len()).product();
    if n_states > state_cap {
        return Err(Error::Capacity(format!(
            "derive_process: {n_states} blockage patterns exceed the cap of {state_cap}"
        )));
    }

    // Enumerate patterns in mixed radix, path 0 most significant.
    let mut patterns: Vec<Vec<u8>> = vec![Vec::new()];
    for states in &per_path_states {
        let mut next = Vec::with_capacity(patterns.len() * states.len());
        for p in &patterns {
            for &s in states {
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        patterns = next;
    }

    // Labels: extract and quantize the skeleton of each pattern per location.
    let mut labels = Vec::with_capacity(scenario.m());
    for paths in &scenario.candidate_paths {
        let mut row = Vec::with_capacity(n_states);
        for pattern in &patterns {
            let available: Vec<PathComponent> = paths
                .iter()
                .zip(pattern)
                .filter(|(_, &blocked)| blocked == 0)
                .map(|(g, _)| {
                    PathComponent::new(
                        num_complex::Complex64::new(g.mean_amp, 0.0),
                        g.aod_rad,
                        g.aoa_rad,
                    )
                })
                .collect();
            let ps = extract_skeleton(&available, l)?;
            row.push(quantize_skeleton(&ps, bs_book, ue_book)?);
        }
        labels.push(row);
    }

    // Kernel and initial law: tensor products of the per-path chains.
    let per_path_kernel = |pb: &PathBlockage, from: u8, to: u8| -> Result<Prob> {
        let p = match (from, to) {
            (0, 0) => pb.rho_stay_unblocked,
            (0, 1) => 1.0 - pb.rho_stay_unblocked,
            (1, 1) => pb.rho_stay_blocked,
            _ => 1.0 - pb.rho_stay_blocked,
        };
        prob_from_f64(p.clamp(0.0, 1.0))
    };
    let mut rows = Vec::with_capacity(n_states);
    for from in &patterns {
        let mut row = Vec::with_capacity(n_states);
        for to in &patterns {
            let mut p = Prob::one();
            for ((pb, &f), &t) in blockage.paths().iter().zip(from).zip(to) {
                p *= per_path_kernel(pb, f, t)?;
                if p.is_zero() {
                    break;
                }
            }
            row.push(p);
        }
        rows.push(row);
    }
    let kernel = ProbMatrix::from_rows(rows)?;

    let mut initial = Vec::with_capacity(n_states);
    for pattern in &patterns {
        let mut p = Prob::one();
        for (pb, &s) in blockage.paths().iter().zip(pattern) {
            let q = if s == 1 {
                pb.p_blocked_initial
            } else {
                1.0 - pb.p_blocked_initial
            };
            p *= prob_from_f64(q.clamp(0.0, 1.0))?;
        }
        initial.push(p);
    }

    let flags = patterns
        .iter()
        .map(|p| p.iter().map(|&s| s == 1).collect())
        .collect();
    Ok(
        SkeletonProcess::from_parts(labels, kernel, initial, bs_book.clone(), ue_book.clone(), l)?
            .with_state_patterns(flags),
    )
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::arraysim::dft_codebook;
    use crate::skeleton::BeamPair;
    use crate::stochastic::{build_scenario, ScenarioConfig};
    use rand_chacha::rand_core::SeedableRng;

    fn books() -> (Codebook, Codebook) {
        (dft_codebook(64, 128).unwrap(), dft_codebook(4, 64).unwrap())
    }

    fn q(bs: u16, ue: u16) -> QuantizedSkeleton {
        QuantizedSkeleton::new(vec![Some(BeamPair { bs, ue })])
    }

    /// 2-state chain with distinct single-beam labels at every location.
    fn two_state_chain(m: usize, rho: f64) -> SkeletonProcess {
        let (bs, ue) = books();
        let labels = (0..m).map(|_| vec![q(2, 1), q(9, 5)]).collect();
        SkeletonProcess::from_parts_f64(
            labels,
            &[vec![rho, 1.0 - rho], vec![1.0 - rho, rho]],
            &[0.5, 0.5],
            bs,
            ue,
            1,
        )
        .unwrap()
    }

    #[test]
    fn frozen_blockage_gives_identity_kernel() {
        let sc = build_scenario(&ScenarioConfig::default(), 3).unwrap();
        let (bs, ue) = books();
        let blockage = BlockageModel::uniform(PathBlockage::frozen(0.5), 3).unwrap();
        let p = derive_process(&sc, &blockage, &bs, &ue, 3, 64).unwrap();
        assert_eq!(p.n_states(), 8);
        assert_eq!(p.transition_kernel(1).unwrap(), ProbMatrix::identity(8));
    }

    #[test]
    fn single_path_kernel_is_two_state() {
        let sc = build_scenario(
            &ScenarioConfig {
                n_reflectors: 0,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        let (bs, ue) = books();
        let blockage = BlockageModel::uniform(
            PathBlockage {
                rho_stay_unblocked: 0.9,
                rho_stay_blocked: 0.9,
                p_blocked_initial: 0.5,
            },
            1,
        )
        .unwrap();
        let p = derive_process(&sc, &blockage, &bs, &ue, 1, 64).unwrap();
        assert_eq!(p.n_states(), 2);
        let k = p.transition_kernel(1).unwrap();
        for (i, j, expect) in [(0, 0, 0.9), (0, 1, 0.1), (1, 0, 0.1), (1, 1, 0.9)] {
            assert!((to_f64(k.entry(i, j)) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn two_paths_kernel_is_tensor_product() {
        let sc = build_scenario(
            &ScenarioConfig {
                n_reflectors: 1,
                ..Default::default()
            },
            5,
        )
        .unwrap();
        let (bs, ue) = books();
        let a = PathBlockage {
            rho_stay_unblocked: 0.9,
            rho_stay_blocked: 0.7,
            p_blocked_initial: 0.3,
        };
        let b = PathBlockage {
            rho_stay_unblocked: 0.8,
            rho_stay_blocked: 0.6,
            p_blocked_initial: 0.2,
        };
        let blockage = BlockageModel::new(vec![a, b]).unwrap();
        let p = derive_process(&sc, &blockage, &bs, &ue, 2, 64).unwrap();
        assert_eq!(p.n_states(), 4);
        let k = p.transition_kernel(1).unwrap();
        let single = |pb: &PathBlockage, f: usize, t: usize| -> f64 {
            match (f, t) {
                (0, 0) => pb.rho_stay_unblocked,
                (0, 1) => 1.0 - pb.rho_stay_unblocked,
                (1, 1) => pb.rho_stay_blocked,
                _ => 1.0 - pb.rho_stay_blocked,
            }
        };
        // Pattern index = 2 * path0_state + path1_state.
        for fa in 0..2 {
            for fb in 0..2 {
                for ta in 0..2 {
                    for tb in 0..2 {
                        let expect = single(&a, fa, ta) * single(&b, fb, tb);
                        let got = to_f64(k.entry(2 * fa + fb, 2 * ta + tb));
                        assert!((got - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn kernel_power_closed_form() {
        let p = two_state_chain(10, 0.9);
        let k0 = p.transition_kernel(0).unwrap();
        assert_eq!(k0, ProbMatrix::identity(2));
        let k1 = p.transition_kernel(1).unwrap();
        assert_eq!(p.transition_kernel(2).unwrap(), k1.mul(&k1));
        let k3 = p.transition_kernel(3).unwrap();
        let expect = (1.0 + 0.8f64.powi(3)) / 2.0;
        assert!((to_f64(k3.entry(0, 0)) - expect).abs() < 1e-15);
        assert!((to_f64(k3.entry(1, 0)) - (1.0 - expect)).abs() < 1e-15);
    }

    #[test]
    fn chapman_kolmogorov_exact() {
        let p = two_state_chain(9, 0.83);
        for (a, b) in [(0, 3), (2, 5), (4, 4), (1, 7)] {
            assert_eq!(
                p.transition_kernel(a + b).unwrap(),
                p.transition_kernel(a).unwrap().mul(&p.transition_kernel(b).unwrap())
            );
        }
    }

    #[test]
    fn bridge_endpoints_are_point_masses() {
        let p = two_state_chain(8, 0.9);
        let at_l = p.bridge_distribution(2, 6, 2, 0, 1).unwrap();
        assert!(at_l[0].is_one() && at_l[1].is_zero());
        let at_h = p.bridge_distribution(2, 6, 6, 0, 1).unwrap();
        assert!(at_h[1].is_one() && at_h[0].is_zero());
    }

    #[test]
    fn bridge_matches_path_enumeration() {
        // Symmetric 2-state chain, x at the midpoint, equal endpoints.
        let rho = 0.7;
        let p = two_state_chain(5, rho);
        let bridge = p.bridge_distribution(1, 5, 3, 0, 0).unwrap();

        // Enumerate all state paths from location 1 to 5.
        let step = |a: usize, b: usize| if a == b { rho } else { 1.0 - rho };
        let mut mass = [0.0f64; 2];
        for s2 in 0..2usize {
            for s3 in 0..2usize {
                for s4 in 0..2usize {
                    let w = step(0, s2) * step(s2, s3) * step(s3, s4) * step(s4, 0);
                    mass[s3] += w;
                }
            }
        }
        let total = mass[0] + mass[1];
        for s in 0..2 {
            assert!((to_f64(&bridge[s]) - mass[s] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn bridge_reconstructs_endpoint_kernel() {
        // sum_s P(s|s_l) P(s_h|s) = K^{x_h-x_l}[s_l, s_h], entrywise.
        let p = two_state_chain(7, 0.85);
        let (x_l, x, x_h) = (2, 4, 7);
        let full = p.transition_kernel(x_h - x_l).unwrap();
        for s_l in 0..2 {
            for s_h in 0..2 {
                let fwd = p.transition_kernel(x - x_l).unwrap();
                let bwd = p.transition_kernel(x_h - x).unwrap();
                let mut acc = Prob::zero();
                for s in 0..2 {
                    acc += fwd.entry(s_l, s) * bwd.entry(s, s_h);
                }
                assert_eq!(&acc, full.entry(s_l, s_h));
            }
        }
    }

    #[test]
    fn reverse_conditioning_matches_path_enumeration() {
        // Asymmetric chain and non-uniform start: check Bayes with the
        // forward kernel against brute-force path enumeration.
        let (bs, ue) = books();
        let labels = (0..4).map(|_| vec![q(1, 1), q(12, 6)]).collect();
        let k = [vec![0.9, 0.1], vec![0.3, 0.7]];
        let init = [0.8, 0.2];
        let p =
            SkeletonProcess::from_parts_f64(labels, &k, &init, bs, ue, 1).unwrap();

        let cond = p
            .conditional_at(2, &Evidence::Right { x_h: 4, s_h: 1 })
            .unwrap();

        let step = |a: usize, b: usize| k[a][b];
        let mut mass = [0.0f64; 2];
        for s1 in 0..2usize {
            for s2 in 0..2usize {
                for s3 in 0..2usize {
                    let w = init[s1] * step(s1, s2) * step(s2, s3) * step(s3, 1);
                    mass[s2] += w;
                }
            }
        }
        let total = mass[0] + mass[1];
        for s in 0..2 {
            assert!((to_f64(&cond[s]) - mass[s] / total).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioning_on_null_event_errors() {
        let p = two_state_chain(6, 1.0); // frozen: cross transitions impossible
        let err = p.bridge_distribution(1, 4, 2, 0, 1).unwrap_err();
        assert_eq!(err.class(), "null-conditioning");
    }

    #[test]
    fn coverage_at_reference_with_null_free_skeleton_is_zero() {
        let p = two_state_chain(6, 0.9);
        let s_ref = p.skeleton(3, 0).clone();
        let cov = p
            .coverage_prob(
                3,
                &s_ref,
                &Evidence::Both {
                    x_l: 3,
                    s_l: 0,
                    x_h: 6,
                    s_h: 1,
                },
                0.5,
            )
            .unwrap();
        assert_eq!(cov.value(), 0.0);
    }

    #[test]
    fn coverage_on_frozen_chain_is_indicator() {
        let p = two_state_chain(6, 1.0);
        // Labels differ across states; gamma below L makes distinct states
        // dissimilar iff their beams are far apart on the grid (they are).
        let ref_a = p.skeleton(2, 0).clone();
        let same = p
            .coverage_prob(4, &ref_a, &Evidence::Left { x_l: 2, s_l: 0 }, 0.2)
            .unwrap();
        assert_eq!(same.value(), 0.0);
        let other = p
            .coverage_prob(4, &ref_a, &Evidence::Left { x_l: 2, s_l: 1 }, 0.2)
            .unwrap();
        assert_eq!(other.value(), 1.0);
    }

    #[test]
    fn coverage_matches_blockage_path_enumeration() {
        // 1 blockable path, on/off alphabet: brute-force the 2-step chain and
        // weight the per-state dissimilarity indicators, computed directly
        // from the labels.
        let sc = build_scenario(
            &ScenarioConfig {
                n_reflectors: 0,
                ..Default::default()
            },
            11,
        )
        .unwrap();
        let (bs, ue) = books();
        let rho_u = 0.85;
        let rho_b = 0.55;
        let blockage = BlockageModel::uniform(
            PathBlockage {
                rho_stay_unblocked: rho_u,
                rho_stay_blocked: rho_b,
                p_blocked_initial: 0.25,
            },
            1,
        )
        .unwrap();
        let p = derive_process(&sc, &blockage, &bs, &ue, 1, 64).unwrap();
        // State 0 = unblocked, 1 = blocked.
        let gamma = 0.2;
        let s_ref = p.skeleton(2, 0).clone();
        let cov = p
            .coverage_prob(4, &s_ref, &Evidence::Left { x_l: 2, s_l: 0 }, gamma)
            .unwrap();
        let dis: Vec<bool> = (0..2)
            .map(|s| {
                crate::skeleton::quantized_distance(p.skeleton(4, s), &s_ref, &bs, &ue).unwrap()
                    <= gamma
            })
            .collect();
        // The blocked state is all-Null, so it is always dissimilar.
        assert!(dis[1]);
        let step = |a: usize, b: usize| match (a, b) {
            (0, 0) => rho_u,
            (0, 1) => 1.0 - rho_u,
            (1, 1) => rho_b,
            _ => 1.0 - rho_b,
        };
        let mut expect = 0.0;
        for s3 in 0..2usize {
            for s4 in 0..2usize {
                if dis[s4] {
                    expect += step(0, s3) * step(s3, s4);
                }
            }
        }
        assert!(
            (cov.value() - expect).abs() < 1e-12,
            "cov = {}, enumeration = {expect}",
            cov.value()
        );
    }

    #[test]
    fn monte_carlo_coverage_agrees_with_exact() {
        let p = two_state_chain(6, 0.8).with_enumeration_cap(1, 40_000);
        let s_ref = p.skeleton(2, 0).clone();
        let evidence = Evidence::Left { x_l: 2, s_l: 0 };
        let mc = p.coverage_prob(5, &s_ref, &evidence, 0.2).unwrap();
        let exact = to_f64(&p.coverage_prob_exact(5, &s_ref, &evidence, 0.2).unwrap());
        match mc {
            CoverageProb::MonteCarlo {
                value,
                samples,
                std_error,
            } => {
                assert!(samples >= 10_000);
                assert!(
                    (value - exact).abs() < 5.0 * std_error + 1e-3,
                    "mc={value}, exact={exact}"
                );
            }
            CoverageProb::Exact(_) => panic!("expected the monte carlo path"),
        }
    }

    #[test]
    fn ambiguous_labels_rejected() {
        let (bs, ue) = books();
        let labels = vec![vec![q(1, 1), q(1, 1)]];
        let err = SkeletonProcess::from_parts_f64(
            labels,
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &[0.5, 0.5],
            bs,
            ue,
            1,
        )
        .unwrap_err();
        assert_eq!(err.class(), "model-mismatch");
    }

    #[test]
    fn state_cap_enforced() {
        let sc = build_scenario(
            &ScenarioConfig {
                n_reflectors: 2,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        let (bs, ue) = books();
        let blockage = BlockageModel::uniform(
            PathBlockage {
                rho_stay_unblocked: 0.9,
                rho_stay_blocked: 0.9,
                p_blocked_initial: 0.5,
            },
            3,
        )
        .unwrap();
        let err = derive_process(&sc, &blockage, &bs, &ue, 3, 4).unwrap_err();
        assert_eq!(err.class(), "capacity");
    }

    #[test]
    fn posterior_uses_nearest_measurements() {
        let p = two_state_chain(9, 0.9);
        let measured = [(2usize, 0usize), (7usize, 1usize)];
        let post = p.posterior_given_measurements(4, &measured).unwrap();
        let bridge = p.bridge_distribution(2, 7, 4, 0, 1).unwrap();
        assert_eq!(post, bridge);
        let at_meas = p.posterior_given_measurements(7, &measured).unwrap();
        assert!(at_meas[1].is_one());
        let tail = p.posterior_given_measurements(9, &measured).unwrap();
        let fwd = p
            .conditional_at(9, &Evidence::Left { x_l: 7, s_l: 1 })
            .unwrap();
        assert_eq!(tail, fwd);
    }

    #[test]
    fn per_step_kernels_drive_conditionals() {
        // Inhomogeneous 2-state chain: check marginals and a bridge against
        // hand enumeration over the step matrices.
        let (bs, ue) = books();
        let labels = (0..3).map(|x| vec![q(2 + x, 1), q(40 + x, 20)]).collect();
        let k1 = [[0.9, 0.1], [0.2, 0.8]];
        let k2 = [[0.6, 0.4], [0.5, 0.5]];
        let steps = vec![
            ProbMatrix::from_f64_rows(&[k1[0].to_vec(), k1[1].to_vec()], 1e-12).unwrap(),
            ProbMatrix::from_f64_rows(&[k2[0].to_vec(), k2[1].to_vec()], 1e-12).unwrap(),
        ];
        let init = [0.7, 0.3];
        let initial = init.iter().map(|&p| prob_from_f64(p).unwrap()).collect();
        let p = SkeletonProcess::from_parts_per_step(labels, steps, initial, bs, ue, 1).unwrap();
        assert!(!p.is_homogeneous());
        assert!(p.transition_kernel(1).is_err());

        // Marginal at location 3 by direct summation.
        for s3 in 0..2usize {
            let mut mass = 0.0;
            for s1 in 0..2usize {
                for s2 in 0..2usize {
                    mass += init[s1] * k1[s1][s2] * k2[s2][s3];
                }
            }
            assert!((to_f64(&p.marginal(3)[s3]) - mass).abs() < 1e-15);
        }

        // Bridge at the middle location given both endpoints.
        let bridge = p.bridge_distribution(1, 3, 2, 0, 1).unwrap();
        let mut mass = [0.0f64; 2];
        for s2 in 0..2usize {
            mass[s2] = k1[0][s2] * k2[s2][1];
        }
        let total = mass[0] + mass[1];
        for s2 in 0..2usize {
            assert!((to_f64(&bridge[s2]) - mass[s2] / total).abs() < 1e-15);
        }

        // Segment product equals the composed steps.
        let seg = p.segment_kernel(1, 3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expect = k1[a][0] * k2[0][b] + k1[a][1] * k2[1][b];
                assert!((to_f64(seg.entry(a, b)) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sample_paths_follow_the_kernel() {
        let p = two_state_chain(2, 0.9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut stay = 0usize;
        let n = 20_000;
        for _ in 0..n {
            let path = p.sample_path(&mut rng);
            if path[0] == path[1] {
                stay += 1;
            }
        }
        let frac = stay as f64 / n as f64;
        assert!((frac - 0.9).abs() < 0.01, "stay fraction {frac}");
    }
}
