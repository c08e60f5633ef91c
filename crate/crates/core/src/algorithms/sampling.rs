//! Shot-level sampling of both pipelines.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::group::GroupElement;
use crate::ops::HidingFunction;
use crate::rng::StreamId;
use crate::state::{fidelity, PureState};

use super::aux::AuxState;
use super::pipeline::Pipeline;
use super::{outcome_coords, OpCounts};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Standard,
    InitFree,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Standard => "standard",
            Algorithm::InitFree => "init-free",
        }
    }
}

/// One measurement of the main register.
#[derive(Clone, Debug)]
pub struct ShotRecord {
    pub outcome: GroupElement,
    /// The `z` of an initialization-free run.
    pub z_used: Option<GroupElement>,
    pub probability_of_outcome: f64,
    /// `|⟨Φ|B_after⟩|` against the auxiliary state the shot started from.
    pub aux_restoration_fidelity: f64,
    pub shot_index: u64,
    pub rng_seed: Option<StreamId>,
    /// The auxiliary register after the measurement.
    pub aux_after: PureState,
    pub counts: OpCounts,
}

fn measure_shot<R: Rng + ?Sized>(
    p: &Pipeline<'_>,
    state: &PureState,
    aux_before: &PureState,
    rng: &mut R,
) -> Result<(GroupElement, f64, PureState, f64)> {
    let m = state.measure(p.a_targets(), rng)?;
    let (_, aux_after) = m.state.condition(p.a_targets(), &m.outcome)?;
    let fid = fidelity(&aux_after, aux_before)?;
    let outcome = p.function().domain().element(&outcome_coords(&m.outcome))?;
    Ok((outcome, m.probability, aux_after, fid))
}

/// One shot of the standard algorithm.
pub fn standard_sample<R: Rng + ?Sized>(f: &HidingFunction, rng: &mut R) -> Result<ShotRecord> {
    let p = Pipeline::new(f)?;
    let (psi, counts) = p.standard_state()?;
    standard_shot(&p, &psi, counts, rng)
}

fn standard_shot<R: Rng + ?Sized>(
    p: &Pipeline<'_>,
    psi: &PureState,
    counts: OpCounts,
    rng: &mut R,
) -> Result<ShotRecord> {
    let zero = PureState::zero(&p.aux_register());
    let (outcome, probability_of_outcome, aux_after, fid) = measure_shot(p, psi, &zero, rng)?;
    Ok(ShotRecord {
        outcome,
        z_used: None,
        probability_of_outcome,
        aux_restoration_fidelity: fid,
        shot_index: 0,
        rng_seed: None,
        aux_after,
        counts,
    })
}

/// One shot of the initialization-free algorithm: draws `z` uniformly from
/// `Y` and, for an ensemble, a member by weight.
pub fn init_free_sample<R: Rng + ?Sized>(f: &HidingFunction, aux: &AuxState, rng: &mut R) -> Result<ShotRecord> {
    let p = Pipeline::new(f)?;
    init_free_shot(&p, aux.draw(rng), rng)
}

pub(crate) fn init_free_shot<R: Rng + ?Sized>(
    p: &Pipeline<'_>,
    phi: &PureState,
    rng: &mut R,
) -> Result<ShotRecord> {
    let y = p.function().codomain();
    let z = y.element_at(rng.random_range(0..y.order() as usize))?;
    let (state, counts) = p.init_free_state(phi, &z)?;
    let (outcome, probability_of_outcome, aux_after, fid) = measure_shot(p, &state, phi, rng)?;
    Ok(ShotRecord {
        outcome,
        z_used: Some(z),
        probability_of_outcome,
        aux_restoration_fidelity: fid,
        shot_index: 0,
        rng_seed: None,
        aux_after,
        counts,
    })
}

/// A shot campaign. Shot `i` draws from stream `(seed, i)`, so results do not
/// depend on scheduling. The standard state is deterministic and computed
/// once; the counters still report one circuit execution per shot.
pub fn run_shots(
    f: &HidingFunction,
    algorithm: Algorithm,
    aux: &AuxState,
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    let outer = Execution::current();
    let p = Pipeline::new(f)?.with_execution(Execution::Sequential);
    if aux.register() != &p.aux_register() {
        return Err(Error::DimensionMismatch("auxiliary state does not fit Y".into()));
    }
    let standard = match algorithm {
        Algorithm::Standard => Some(p.standard_state()?),
        Algorithm::InitFree => None,
    };
    let n = usize::try_from(shots).map_err(|_| Error::Overflow("shot count"))?;
    exec::map(outer, n, |i| {
        let id = StreamId::new(seed, i as u64);
        let mut rng = id.rng();
        let mut rec = match &standard {
            Some((psi, counts)) => standard_shot(&p, psi, *counts, &mut rng)?,
            None => init_free_shot(&p, aux.draw(&mut rng), &mut rng)?,
        };
        rec.shot_index = i as u64;
        rec.rng_seed = Some(id);
        Ok(rec)
    })
    .into_iter()
    .collect()
}
