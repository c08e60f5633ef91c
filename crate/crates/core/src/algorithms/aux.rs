//! Auxiliary-register inputs: descriptors and their realized states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, PureState, Register, C64};

/// One weighted member of an ensemble description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub weight: f64,
    pub amplitudes: Vec<C64>,
}

/// How the auxiliary register starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AuxSpec {
    /// `|0⟩_B`.
    Zero,
    GivenPure { amplitudes: Vec<C64> },
    /// A Haar-random pure state drawn from the experiment seed.
    RandomPure,
    GivenMixed { ensemble: Vec<EnsembleMember> },
    /// A random ensemble of `members` Haar-random states with flat-Dirichlet
    /// weights.
    RandomMixed { members: usize },
}

impl Default for AuxSpec {
    fn default() -> Self {
        AuxSpec::Zero
    }
}

impl AuxSpec {
    pub fn random_mixed() -> Self {
        AuxSpec::RandomMixed { members: 3 }
    }

    /// Short name used on the command line.
    pub fn label(&self) -> &'static str {
        match self {
            AuxSpec::Zero => "zero",
            AuxSpec::GivenPure { .. } => "given-pure",
            AuxSpec::RandomPure => "random-pure",
            AuxSpec::GivenMixed { .. } => "given-mixed",
            AuxSpec::RandomMixed { .. } => "random-mixed",
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, AuxSpec::GivenMixed { .. } | AuxSpec::RandomMixed { .. })
    }

    /// Turns the description into concrete states on `register`.
    pub fn realize<R: Rng + ?Sized>(&self, register: &Register, rng: &mut R) -> Result<AuxState> {
        Ok(match self {
            AuxSpec::Zero => AuxState::Pure(PureState::zero(register)),
            AuxSpec::GivenPure { amplitudes } => {
                AuxState::Pure(PureState::from_amplitudes(register, amplitudes.clone())?)
            }
            AuxSpec::RandomPure => AuxState::Pure(PureState::random(register, rng)),
            AuxSpec::GivenMixed { ensemble } => AuxState::ensemble(
                ensemble
                    .iter()
                    .map(|m| Ok((m.weight, PureState::from_amplitudes(register, m.amplitudes.clone())?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            AuxSpec::RandomMixed { members } => {
                if *members == 0 {
                    return Err(Error::Config("random mixed state needs at least one member".into()));
                }
                let raw: Vec<f64> = (0..*members)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let total: f64 = raw.iter().sum();
                AuxState::ensemble(
                    raw.into_iter()
                        .map(|w| (w / total, PureState::random(register, rng)))
                        .collect(),
                )?
            }
        })
    }
}

/// A realized auxiliary input.
#[derive(Clone, Debug, PartialEq)]
pub enum AuxState {
    Pure(PureState),
    /// `ρ_B = Σ p_i |Φ_i⟩⟨Φ_i|`.
    Ensemble(Vec<(f64, PureState)>),
}

impl AuxState {
    pub fn ensemble(members: Vec<(f64, PureState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidState("empty ensemble".into()));
        }
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        if members.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > crate::state::TOL {
            return Err(Error::InvalidState(format!(
                "ensemble weights must be non-negative and sum to 1, got {total}"
            )));
        }
        let reg = members[0].1.register();
        if members.iter().any(|(_, s)| s.register() != reg) {
            return Err(Error::DimensionMismatch("ensemble members differ in register".into()));
        }
        Ok(AuxState::Ensemble(members))
    }

    pub fn register(&self) -> &Register {
        match self {
            AuxState::Pure(s) => s.register(),
            AuxState::Ensemble(m) => m[0].1.register(),
        }
    }

    /// Members with their weights; a pure state is a one-member ensemble.
    pub fn members(&self) -> Vec<(f64, &PureState)> {
        match self {
            AuxState::Pure(s) => vec![(1.0, s)],
            AuxState::Ensemble(m) => m.iter().map(|(p, s)| (*p, s)).collect(),
        }
    }

    /// Draws one member according to the weights.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &PureState {
        match self {
            AuxState::Pure(s) => s,
            AuxState::Ensemble(m) => {
                let mut u = rng.random::<f64>();
                for (p, s) in m {
                    if u < *p {
                        return s;
                    }
                    u -= p;
                }
                &m[m.len() - 1].1
            }
        }
    }

    pub fn density(&self) -> Result<DensityMatrix> {
        match self {
            AuxState::Pure(s) => s.to_density(),
            AuxState::Ensemble(m) => DensityMatrix::from_ensemble(m),
        }
    }
}
