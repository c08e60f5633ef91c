//! Reconstructing `H` from samples of `H⊥`.
//!
//! For product subgroups the span of a sample set is obtained by a gcd per
//! component, and `H = (span)⊥` once the span has reached `H⊥`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::{AuxState, Pipeline, OpCounts};
use crate::error::{Error, Result};
use crate::group::{brute_force_orthogonal, FiniteAbelianGroup, GroupElement, ProductSubgroup};
use crate::ops::HidingFunction;
use crate::rng::SimRng;
use crate::state::{fidelity, PureState};

/// Samples accumulated so far.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryState {
    span: ProductSubgroup,
    samples_consumed: u64,
    stable_streak: u64,
}

impl RecoveryState {
    pub fn new(group: &FiniteAbelianGroup) -> Self {
        Self {
            span: ProductSubgroup::trivial(group),
            samples_consumed: 0,
            stable_streak: 0,
        }
    }

    /// Adds one sample; returns whether the span grew.
    pub fn ingest(&mut self, tau: &GroupElement) -> Result<bool> {
        let next = self.span.join_element(tau)?;
        self.samples_consumed += 1;
        let grew = next.order() > self.span.order();
        if grew {
            self.stable_streak = 0;
            self.span = next;
        } else {
            self.stable_streak += 1;
        }
        Ok(grew)
    }

    pub fn span(&self) -> &ProductSubgroup {
        &self.span
    }

    pub fn samples_consumed(&self) -> u64 {
        self.samples_consumed
    }

    pub fn stable_streak(&self) -> u64 {
        self.stable_streak
    }

    /// `(span)⊥`, the current estimate of `H`.
    pub fn estimate(&self) -> ProductSubgroup {
        self.span.orthogonal()
    }
}

/// The estimate computed the slow way: enumerate the span and test every
/// element of `G` against it.
pub fn estimate_by_enumeration(span: &ProductSubgroup, bound: u64) -> Result<Vec<GroupElement>> {
    brute_force_orthogonal(span, bound)
}

/// Anything that yields elements of `H⊥`.
pub trait SampleSource {
    fn group(&self) -> &FiniteAbelianGroup;
    fn next_sample(&mut self) -> Result<GroupElement>;
    /// Oracle calls spent so far.
    fn oracle_calls(&self) -> u64;
}

/// Draws uniformly from `H⊥` without simulating anything.
pub struct UniformDualSource {
    group: FiniteAbelianGroup,
    dual: Vec<GroupElement>,
    rng: SimRng,
}

impl UniformDualSource {
    pub fn new(hidden: &ProductSubgroup, rng: SimRng) -> Self {
        Self {
            group: hidden.parent().clone(),
            dual: hidden.orthogonal().enumerate(),
            rng,
        }
    }
}

impl SampleSource for UniformDualSource {
    fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    fn next_sample(&mut self) -> Result<GroupElement> {
        Ok(self.dual[self.rng.random_range(0..self.dual.len())].clone())
    }

    fn oracle_calls(&self) -> u64 {
        0
    }
}

/// Repeated runs of the standard algorithm, each from `|0⟩_B`.
pub struct StandardSource<'f> {
    pipeline: Pipeline<'f>,
    dist: Vec<f64>,
    counts: OpCounts,
    per_run: OpCounts,
    rng: SimRng,
}

impl<'f> StandardSource<'f> {
    pub fn new(f: &'f HidingFunction, rng: SimRng) -> Result<Self> {
        let pipeline = Pipeline::new(f)?;
        let (psi, per_run) = pipeline.standard_state()?;
        let dist = psi.distribution(pipeline.a_targets())?;
        Ok(Self {
            pipeline,
            dist,
            counts: OpCounts::default(),
            per_run,
            rng,
        })
    }
}

impl SampleSource for StandardSource<'_> {
    fn group(&self) -> &FiniteAbelianGroup {
        self.pipeline.function().domain()
    }

    fn next_sample(&mut self) -> Result<GroupElement> {
        // ψ₃ is the same every run, so only the Born draw is repeated
        self.counts.merge(&self.per_run);
        let mut u = self.rng.random::<f64>();
        let last = self.dist.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (i, &p) in self.dist.iter().enumerate() {
            if u < p || i == last {
                return self.group().element_at(i);
            }
            u -= p;
        }
        unreachable!("distribution is non-empty")
    }

    fn oracle_calls(&self) -> u64 {
        self.counts.oracle_calls
    }
}

/// Repeated runs of the initialization-free algorithm that reuse the
/// auxiliary register: each run starts from the `B` state the previous run
/// left behind. An ensemble input is resolved to one member up front.
pub struct InitFreeSource<'f> {
    pipeline: Pipeline<'f>,
    initial: PureState,
    aux: PureState,
    counts: OpCounts,
    min_fidelity: f64,
    rng: SimRng,
}

impl<'f> InitFreeSource<'f> {
    pub fn new(f: &'f HidingFunction, aux: &AuxState, mut rng: SimRng) -> Result<Self> {
        let pipeline = Pipeline::new(f)?;
        let initial = aux.draw(&mut rng).clone();
        if initial.register() != &pipeline.aux_register() {
            return Err(Error::DimensionMismatch("auxiliary state does not fit Y".into()));
        }
        Ok(Self {
            pipeline,
            aux: initial.clone(),
            initial,
            counts: OpCounts::default(),
            min_fidelity: 1.0,
            rng,
        })
    }

    /// Smallest `|⟨Φ_initial|B⟩|` observed after any run.
    pub fn min_fidelity(&self) -> f64 {
        self.min_fidelity
    }
}

impl SampleSource for InitFreeSource<'_> {
    fn group(&self) -> &FiniteAbelianGroup {
        self.pipeline.function().domain()
    }

    fn next_sample(&mut self) -> Result<GroupElement> {
        let y = self.pipeline.function().codomain();
        let z = y.element_at(self.rng.random_range(0..y.order() as usize))?;
        let (state, counts) = self.pipeline.init_free_state(&self.aux, &z)?;
        self.counts.merge(&counts);
        let a = self.pipeline.a_targets();
        let m = state.measure(a, &mut self.rng)?;
        let (_, after) = m.state.condition(a, &m.outcome)?;
        self.min_fidelity = self.min_fidelity.min(fidelity(&after, &self.initial)?);
        self.aux = after;
        let coords: Vec<u64> = m.outcome.iter().map(|&c| c as u64).collect();
        self.group().element(&coords)
    }

    fn oracle_calls(&self) -> u64 {
        self.counts.oracle_calls
    }
}

/// When to stop drawing samples.
#[derive(Clone, Debug, PartialEq)]
pub enum StopRule {
    /// The span has not grown for this many consecutive samples.
    Stable(u64),
    /// The span equals the given subgroup (the known `H⊥`).
    ExactSpan(ProductSubgroup),
}

impl StopRule {
    /// Streak length `⌈log₂|G|⌉ + 4`.
    pub fn blind(group: &FiniteAbelianGroup) -> Self {
        StopRule::Stable(ceil_log2(group.order()) + 4)
    }

    pub fn verification(hidden: &ProductSubgroup) -> Self {
        StopRule::ExactSpan(hidden.orthogonal())
    }

    fn fired(&self, state: &RecoveryState) -> bool {
        match self {
            StopRule::Stable(s) => state.stable_streak() >= *s,
            StopRule::ExactSpan(target) => state.span() == target,
        }
    }
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    /// Generators of the estimate of `H`.
    pub estimate: Vec<u64>,
    pub queries_used: u64,
    pub oracle_calls: u64,
    /// `false` when the budget ran out before the stop rule fired.
    pub complete: bool,
}

/// Draws samples until `stop` fires or `budget` samples are used.
pub fn recover_hidden_subgroup(
    source: &mut dyn SampleSource,
    stop: &StopRule,
    budget: u64,
) -> Result<(ProductSubgroup, RecoveryOutcome)> {
    let mut state = RecoveryState::new(source.group());
    let mut complete = stop.fired(&state);
    while !complete && state.samples_consumed() < budget {
        let tau = source.next_sample()?;
        state.ingest(&tau)?;
        complete = stop.fired(&state);
    }
    let estimate = state.estimate();
    Ok((
        estimate.clone(),
        RecoveryOutcome {
            estimate: estimate.generators().to_vec(),
            queries_used: state.samples_consumed(),
            oracle_calls: source.oracle_calls(),
            complete,
        },
    ))
}

/// Query counts of a batch of trials on one group size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryStatistics {
    pub group_order: u64,
    pub log2_order: f64,
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub max: u64,
}

/// Groups `(|G|, queries)` pairs by `|G|` and summarizes each.
pub fn query_statistics(trials: &[(u64, u64)]) -> Result<Vec<QueryStatistics>> {
    if trials.is_empty() {
        return Err(Error::Config("no trials to summarize".into()));
    }
    let mut by_order: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &(order, q) in trials {
        by_order.entry(order).or_default().push(q);
    }
    Ok(by_order
        .into_iter()
        .map(|(order, mut qs)| {
            qs.sort_unstable();
            let n = qs.len();
            QueryStatistics {
                group_order: order,
                log2_order: (order as f64).log2(),
                trials: n,
                mean: qs.iter().sum::<u64>() as f64 / n as f64,
                median: quantile(&qs, 0.5),
                p90: quantile(&qs, 0.9),
                max: qs[n - 1],
            }
        })
        .collect())
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    let w = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - w) + sorted[hi] as f64 * w
}

/// Least-squares `c` in `mean ≈ c · log₂|G|`, over rows with `|G| > 1`.
pub fn fit_log_constant(stats: &[QueryStatistics]) -> Option<f64> {
    let (num, den) = stats
        .iter()
        .filter(|s| s.log2_order > 0.0)
        .fold((0.0, 0.0), |(n, d), s| (n + s.mean * s.log2_order, d + s.log2_order * s.log2_order));
    (den > 0.0).then(|| num / den)
}
