//! Both pipelines end to end.
//!
//! The standard algorithm runs `QFT_A → U_f → QFT_A` on `|0⟩_A|0⟩_B`. The
//! initialization-free algorithm runs
//! `QFT_A → U_f → S_z → U_f → S_z → QFT_A` on `|0⟩_A|Φ⟩_B` for a uniformly
//! random `z ∈ Y` and leaves `B` in `|Φ⟩`.

mod aux;
mod channel;
mod pipeline;
mod sampling;

pub use aux::{AuxSpec, AuxState, EnsembleMember};
pub use channel::{lambda_channel, lambda_channel_literal};
pub use pipeline::Pipeline;
pub use sampling::{init_free_sample, run_shots, standard_sample, Algorithm, ShotRecord};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupElement};
use crate::ops::HidingFunction;
use crate::state::{fidelity, PureState};

/// Operator applications performed by one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub oracle_calls: u64,
    pub qft_applications: u64,
    pub s_z_applications: u64,
}

impl OpCounts {
    pub fn merge(&mut self, other: &OpCounts) {
        self.oracle_calls += other.oracle_calls;
        self.qft_applications += other.qft_applications;
        self.s_z_applications += other.s_z_applications;
    }
}

/// A probability for every element of `G`, flat-indexed.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    group: FiniteAbelianGroup,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(group: &FiniteAbelianGroup, probs: Vec<f64>) -> Result<Self> {
        if probs.len() as u64 != group.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for a group of order {}",
                probs.len(),
                group.order()
            )));
        }
        Ok(Self {
            group: group.clone(),
            probs,
        })
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, tau: &GroupElement) -> Result<f64> {
        Ok(self.probs[self.group.index_of(tau)?])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Outcomes with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<GroupElement> {
        self.group
            .elements()
            .zip(&self.probs)
            .filter(|(_, &p)| p > tol)
            .map(|(x, _)| x)
            .collect()
    }

    /// `(τ, p)` pairs in flat order.
    pub fn entries(&self) -> Vec<(GroupElement, f64)> {
        self.group.elements().zip(self.probs.iter().copied()).collect()
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> Result<f64> {
        if self.group != other.group {
            return Err(Error::GroupMismatch("distributions over different groups".into()));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A simulated state together with the operator counts that produced it.
#[derive(Clone, Debug)]
pub struct Run {
    pub state: PureState,
    pub counts: OpCounts,
}

/// `ψ₃`.
pub fn standard_run_state(f: &HidingFunction) -> Result<Run> {
    let (state, counts) = Pipeline::new(f)?.standard_state()?;
    Ok(Run { state, counts })
}

/// Distribution of the `A` measurement on `ψ₃`.
pub fn standard_exact_distribution(f: &HidingFunction) -> Result<Distribution> {
    let p = Pipeline::new(f)?;
    let (s, _) = p.standard_state()?;
    Distribution::new(f.domain(), s.distribution(p.a_targets())?)
}

/// State of `B` once `A` has been measured with outcome `τ`.
#[derive(Clone, Debug)]
pub struct PostMeasurementAux {
    pub state: PureState,
    pub probability: f64,
    /// `|⟨0|B⟩|`: how far the auxiliary register ends from its start.
    pub fidelity_with_zero: f64,
}

pub fn standard_post_measurement_aux(f: &HidingFunction, tau: &GroupElement) -> Result<PostMeasurementAux> {
    let dual = f.hidden().orthogonal();
    if !f.domain().contains(tau) || !dual.contains(tau) {
        return Err(Error::GroupMismatch(format!("τ = {tau} is not in H⊥")));
    }
    let p = Pipeline::new(f)?;
    let (s, _) = p.standard_state()?;
    let outcome: Vec<usize> = tau.coords().iter().map(|&c| c as usize).collect();
    let (probability, state) = s.condition(p.a_targets(), &outcome)?;
    let fidelity_with_zero = fidelity(&state, &PureState::zero(state.register()))?;
    Ok(PostMeasurementAux {
        state,
        probability,
        fidelity_with_zero,
    })
}

/// `φ₄` for one `z`.
pub fn init_free_run_state(f: &HidingFunction, phi: &PureState, z: &GroupElement) -> Result<Run> {
    let (state, counts) = Pipeline::new(f)?.init_free_state(phi, z)?;
    Ok(Run { state, counts })
}

/// `Pr_z(τ)`: the `A` distribution of `φ₄`.
pub fn init_free_distribution_for_z(
    f: &HidingFunction,
    phi: &PureState,
    z: &GroupElement,
) -> Result<Distribution> {
    let p = Pipeline::new(f)?;
    let (s, _) = p.init_free_state(phi, z)?;
    Distribution::new(f.domain(), s.distribution(p.a_targets())?)
}

/// Runs the initialization-free circuit for every `z ∈ Y`, sharing the
/// `z`-independent head, and hands each `φ₄` to `visit`. The returned counts
/// are those of the `|Y|` separate runs this replaces.
pub fn init_free_for_each_z<V>(pipeline: &Pipeline<'_>, phi: &PureState, mut visit: V) -> Result<OpCounts>
where
    V: FnMut(&GroupElement, &PureState) -> Result<()>,
{
    let (head, head_counts) = pipeline.init_free_head(phi)?;
    let mut counts = OpCounts::default();
    let mut s = head.clone();
    for z in pipeline.function().codomain().elements() {
        let phases = pipeline.s_z_table(&z)?;
        counts.merge(&head_counts);
        pipeline.init_free_tail_into(&head, &phases, &mut counts, &mut s);
        visit(&z, &s)?;
    }
    Ok(counts)
}

/// `(1/|Y|) Σ_z Pr_z(τ)`, and for an ensemble the weighted mixture of the
/// members' averages.
pub fn init_free_expected_distribution(f: &HidingFunction, aux: &AuxState) -> Result<Distribution> {
    let p = Pipeline::new(f)?;
    let y_size = f.codomain().order() as f64;
    let mut acc = vec![0.0; f.domain().order() as usize];
    for (w, phi) in aux.members() {
        init_free_for_each_z(&p, phi, |_, s| {
            for (a, q) in acc.iter_mut().zip(s.distribution(p.a_targets())?) {
                *a += w * q / y_size;
            }
            Ok(())
        })?;
    }
    Distribution::new(f.domain(), acc)
}

/// Checks that a distribution vanishes outside `H⊥` and is flat on it.
pub fn uniform_on_dual_deviation(f: &HidingFunction, dist: &Distribution) -> f64 {
    let dual = f.hidden().orthogonal();
    let expected = f.hidden().order() as f64 / f.domain().order() as f64;
    dist.entries()
        .iter()
        .map(|(t, p)| {
            if dual.contains(t) {
                (p - expected).abs()
            } else {
                p.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Largest amplitude of the `A` register outside `H⊥`.
pub fn off_dual_amplitude(pipeline: &Pipeline<'_>, state: &PureState) -> Result<f64> {
    let dist = state.distribution(pipeline.a_targets())?;
    let dual = pipeline.function().hidden().orthogonal();
    Ok(pipeline
        .function()
        .domain()
        .elements()
        .zip(dist)
        .filter(|(t, _)| !dual.contains(t))
        .map(|(_, p)| p.max(0.0).sqrt())
        .fold(0.0, f64::max))
}

pub(crate) fn outcome_coords(x: &[usize]) -> Vec<u64> {
    x.iter().map(|&c| c as u64).collect()
}
