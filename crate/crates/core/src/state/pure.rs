use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::density::DensityMatrix;
use super::kernel::{self, LocalOp, C64, TOL, ZERO_TOL};
use super::register::Register;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// A normalized state vector over a mixed-radix register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: Register,
    amps: Vec<C64>,
}

/// Outcome of a projective measurement of some factors.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: Vec<usize>,
    pub probability: f64,
    /// Renormalized post-measurement state on the full register.
    pub state: PureState,
}

impl PureState {
    pub fn basis(register: &Register, coords: &[usize]) -> Result<Self> {
        let idx = register.index_of(coords)?;
        let mut amps = vec![C64::default(); register.total()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            register: register.clone(),
            amps,
        })
    }

    /// `|0…0⟩`.
    pub fn zero(register: &Register) -> Self {
        Self::basis(register, &vec![0; register.len()]).expect("zero is in range")
    }

    /// Wraps amplitudes that must already be normalized within [`TOL`].
    pub fn from_amplitudes(register: &Register, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != register.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a register of {}",
                amps.len(),
                register.total()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!("norm² is {norm}, expected 1")));
        }
        Ok(Self {
            register: register.clone(),
            amps,
        })
    }

    /// Wraps amplitudes after scaling them to unit norm.
    pub fn normalized(register: &Register, mut amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < ZERO_TOL {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(register, amps)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(register: &Register, rng: &mut R) -> Self {
        loop {
            let amps: Vec<C64> = (0..register.total())
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(s) = Self::normalized(register, amps) {
                return s;
            }
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub(crate) fn from_parts(register: Register, amps: Vec<C64>) -> Self {
        debug_assert_eq!(register.total(), amps.len());
        Self { register, amps }
    }

    pub(crate) fn amps_mut(&mut self) -> &mut Vec<C64> {
        &mut self.amps
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, coords: &[usize]) -> Result<C64> {
        Ok(self.amps[self.register.index_of(coords)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        exec::sum(Execution::current(), self.amps.len(), |i| self.amps[i].norm_sqr())
    }

    /// `self ⊗ other`, with `other`'s factors appended on the right.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let register = self.register.concat(&other.register)?;
        let mut amps = Vec::with_capacity(register.total());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { register, amps })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.same_register(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn same_register(&self, other: &PureState) -> Result<()> {
        if self.register.dims() != other.register.dims() {
            return Err(Error::DimensionMismatch(format!(
                "registers {:?} and {:?}",
                self.register.dims(),
                other.register.dims()
            )));
        }
        Ok(())
    }

    pub fn apply(&mut self, op: &LocalOp, targets: &[usize]) -> Result<()> {
        self.apply_with(Execution::current(), op, targets)
    }

    pub fn apply_with(&mut self, exec: Execution, op: &LocalOp, targets: &[usize]) -> Result<()> {
        kernel::apply_local(exec, &mut self.amps, &self.register, targets, op)
    }

    /// Applies a unitary matrix on `targets`; fails if it is not unitary.
    pub fn apply_matrix(&mut self, u: &DMatrix<C64>, targets: &[usize]) -> Result<()> {
        self.apply(&LocalOp::dense(u)?, targets)
    }

    /// Applies a matrix without the unitarity check. The result is no longer
    /// guaranteed to be normalized.
    pub fn apply_matrix_unchecked(&mut self, u: &DMatrix<C64>, targets: &[usize]) -> Result<()> {
        self.apply(&LocalOp::dense_unchecked(u)?, targets)
    }

    /// `out[j] = phase(j) · in[source(j)]`; the caller guarantees `source` is
    /// a permutation of the basis.
    pub(crate) fn apply_gather<F>(&mut self, map: F)
    where
        F: Fn(usize) -> (usize, C64) + Sync + Send,
    {
        kernel::apply_gather(Execution::current(), &mut self.amps, map)
    }

    /// Born probabilities of every outcome on `targets`, indexed row-major in
    /// target order.
    pub fn distribution(&self, targets: &[usize]) -> Result<Vec<f64>> {
        self.register.check_targets(targets)?;
        let (local, rest) = self.register.split_offsets(targets);
        let exec = Execution::current();
        if exec.is_parallel() && self.amps.len() >= exec::MIN_PARALLEL_LEN {
            return Ok(exec::map(exec, local.len(), |a| {
                rest.iter().map(|&r| self.amps[local[a] + r].norm_sqr()).sum()
            }));
        }
        // same per-outcome summation order, walked in memory order
        let mut out = vec![0.0; local.len()];
        for &r in &rest {
            for (o, &l) in out.iter_mut().zip(&local) {
                *o += self.amps[l + r].norm_sqr();
            }
        }
        Ok(out)
    }

    /// Samples an outcome on `targets` and collapses the state.
    pub fn measure<R: Rng + ?Sized>(&self, targets: &[usize], rng: &mut R) -> Result<Measurement> {
        let probs = self.distribution(targets)?;
        let total: f64 = probs.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &p) in probs.iter().enumerate() {
            if p <= ZERO_TOL * ZERO_TOL {
                continue;
            }
            pick = Some(i);
            if u < p {
                break;
            }
            u -= p;
        }
        let pick = pick.ok_or_else(|| {
            Error::Invariant("measurement projection is zero for every outcome".into())
        })?;
        let sub = self.register.subregister(targets)?;
        let outcome = sub.coords_of(pick)?;
        let state = self.project(targets, pick, probs[pick])?;
        Ok(Measurement {
            outcome,
            probability: probs[pick],
            state,
        })
    }

    fn project(&self, targets: &[usize], local_index: usize, prob: f64) -> Result<PureState> {
        if prob <= 0.0 {
            return Err(Error::Invariant("projection onto a zero-probability outcome".into()));
        }
        let (local, rest) = self.register.split_offsets(targets);
        let scale = 1.0 / prob.sqrt();
        let mut amps = vec![C64::default(); self.amps.len()];
        let base = local[local_index];
        for &r in &rest {
            amps[base + r] = self.amps[base + r] * scale;
        }
        Ok(PureState {
            register: self.register.clone(),
            amps,
        })
    }

    /// Conditions on `outcome` at `targets` and returns the probability
    /// together with the normalized state of the remaining factors.
    pub fn condition(&self, targets: &[usize], outcome: &[usize]) -> Result<(f64, PureState)> {
        let sub = self.register.subregister(targets)?;
        let a = sub.index_of(outcome)?;
        let rest_factors = self.register.complement(targets);
        if rest_factors.is_empty() {
            return Err(Error::DimensionMismatch("no factors left after conditioning".into()));
        }
        let rest_reg = self.register.subregister(&rest_factors)?;
        let (local, rest) = self.register.split_offsets(targets);
        let amps: Vec<C64> = rest.iter().map(|&r| self.amps[local[a] + r]).collect();
        let prob: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if prob <= ZERO_TOL * ZERO_TOL {
            return Err(Error::InvalidState(format!(
                "outcome {outcome:?} has probability {prob}"
            )));
        }
        Ok((prob, PureState::normalized(&rest_reg, amps)?))
    }

    /// Reduced density matrix on `targets` (partial trace over the rest).
    pub fn marginal(&self, targets: &[usize]) -> Result<DensityMatrix> {
        self.register.check_targets(targets)?;
        let sub = self.register.subregister(targets)?;
        DensityMatrix::check_dim(sub.total())?;
        let (local, rest) = self.register.split_offsets(targets);
        let d = local.len();
        let rows = exec::map_sized(Execution::current(), d, d * self.amps.len(), |a| {
            (0..d)
                .map(|b| {
                    rest.iter()
                        .map(|&r| self.amps[local[a] + r] * self.amps[local[b] + r].conj())
                        .sum::<C64>()
                })
                .collect::<Vec<_>>()
        });
        DensityMatrix::from_raw(sub, rows.concat())
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        let all: Vec<usize> = (0..self.register.len()).collect();
        self.marginal(&all)
    }

    /// `max_i |self_i − other_i|`.
    pub fn max_abs_diff(&self, other: &PureState) -> Result<f64> {
        self.same_register(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Elementwise distance after removing the best global phase.
    pub fn max_abs_diff_up_to_phase(&self, other: &PureState) -> Result<f64> {
        let ip = self.inner(other)?;
        let phase = if ip.norm() > ZERO_TOL {
            ip / ip.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max))
    }
}
