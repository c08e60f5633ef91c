//! Distances between states. Fidelity is the root (Uhlmann) fidelity
//! `F(ρ, σ) = tr √(√ρ σ √ρ)`, which reduces to `|⟨a|b⟩|` for pure states.

use nalgebra::DMatrix;

use super::density::{hermitian_part, DensityMatrix};
use super::kernel::C64;
use super::pure::PureState;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a PureState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a PureState> for StateRef<'a> {
    fn from(s: &'a PureState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(s: &'a DensityMatrix) -> Self {
        StateRef::Mixed(s)
    }
}

impl StateRef<'_> {
    fn dims(&self) -> &[usize] {
        match self {
            StateRef::Pure(s) => s.register().dims(),
            StateRef::Mixed(m) => m.register().dims(),
        }
    }

    fn matrix(&self) -> Result<DMatrix<C64>> {
        Ok(match self {
            StateRef::Pure(s) => s.to_density()?.matrix(),
            StateRef::Mixed(m) => m.matrix(),
        })
    }
}

fn check_same(a: &StateRef<'_>, b: &StateRef<'_>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "states on registers {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

fn psd_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

pub fn fidelity<'a, 'b>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'b>>) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    check_same(&a, &b)?;
    let f = match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => x.inner(y)?.norm(),
        (StateRef::Pure(x), StateRef::Mixed(m)) | (StateRef::Mixed(m), StateRef::Pure(x)) => {
            let v = nalgebra::DVector::from_column_slice(x.amplitudes());
            let overlap = (v.adjoint() * m.matrix() * &v)[(0, 0)].re;
            overlap.max(0.0).sqrt()
        }
        (StateRef::Mixed(p), StateRef::Mixed(q)) => {
            let s = psd_sqrt(&p.matrix());
            let inner = &s * q.matrix() * &s;
            hermitian_part(&inner)
                .symmetric_eigenvalues()
                .iter()
                .map(|l| l.max(0.0).sqrt())
                .sum()
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// `½ ‖ρ − σ‖₁`.
pub fn trace_distance<'a, 'b>(
    a: impl Into<StateRef<'a>>,
    b: impl Into<StateRef<'b>>,
) -> Result<f64> {
    let (a, b) = (a.into(), b.into());
    check_same(&a, &b)?;
    let t = match (a, b) {
        (StateRef::Pure(x), StateRef::Pure(y)) => {
            // 1 − F² evaluated as ‖x − e^{iθ}y‖²(1 + F)/2 to avoid cancellation
            let ip = x.inner(y)?;
            let f = ip.norm();
            let phase = if f > 0.0 { ip.conj() / f } else { C64::new(1.0, 0.0) };
            let dist2: f64 = x
                .amplitudes()
                .iter()
                .zip(y.amplitudes())
                .map(|(p, q)| (p - q * phase).norm_sqr())
                .sum();
            (dist2 * (1.0 + f) / 2.0).max(0.0).sqrt()
        }
        _ => {
            let diff = a.matrix()? - b.matrix()?;
            0.5 * hermitian_part(&diff)
                .symmetric_eigenvalues()
                .iter()
                .map(|l| l.abs())
                .sum::<f64>()
        }
    };
    Ok(t.clamp(0.0, 1.0))
}

/// Distance of a pure state from the product form `|a⟩ ⊗ |factor⟩`, where
/// `factor` lives on `targets`: `‖ψ − a⊗factor‖ / ‖ψ‖` with the optimal `a`.
///
/// This upper-bounds the trace distance between the marginal of `state` on
/// `targets` and `|factor⟩⟨factor|` (contractivity of the partial trace),
/// and is computed without the cancellation that `1 − F²` suffers.
pub fn factor_residual(state: &PureState, targets: &[usize], factor: &PureState) -> Result<f64> {
    let reg = state.register();
    let sub = reg.subregister(targets)?;
    if sub.dims() != factor.register().dims() {
        return Err(Error::DimensionMismatch(format!(
            "factor on {:?} for targets of dims {:?}",
            factor.register().dims(),
            sub.dims()
        )));
    }
    let (local, rest) = reg.split_offsets(targets);
    let amps = state.amplitudes();
    let phi = factor.amplitudes();
    // overlaps a_r = ⟨factor|state_r⟩, accumulated in memory order
    let mut overlap = vec![C64::default(); rest.len()];
    for (&l, p) in local.iter().zip(phi) {
        let pc = p.conj();
        for (a, &r) in overlap.iter_mut().zip(&rest) {
            *a += pc * amps[l + r];
        }
    }
    let mut residual = 0.0;
    let mut total = 0.0;
    for (&l, p) in local.iter().zip(phi) {
        for (a, &r) in overlap.iter().zip(&rest) {
            let v = amps[l + r];
            residual += (v - a * p).norm_sqr();
            total += v.norm_sqr();
        }
    }
    if total == 0.0 {
        return Err(Error::InvalidState("zero state".into()));
    }
    Ok((residual / total).sqrt())
}

/// Root fidelity `√⟨φ|ρ|φ⟩` between the reduced state `ρ` of `state` on
/// `targets` and the pure `factor`, without forming `ρ`.
pub fn marginal_fidelity(state: &PureState, targets: &[usize], factor: &PureState) -> Result<f64> {
    let reg = state.register();
    let sub = reg.subregister(targets)?;
    if sub.dims() != factor.register().dims() {
        return Err(Error::DimensionMismatch(format!(
            "factor on {:?} for targets of dims {:?}",
            factor.register().dims(),
            sub.dims()
        )));
    }
    let (local, rest) = reg.split_offsets(targets);
    let (amps, phi) = (state.amplitudes(), factor.amplitudes());
    let overlap: f64 = rest
        .iter()
        .map(|&r| {
            local
                .iter()
                .zip(phi)
                .map(|(&l, p)| p.conj() * amps[l + r])
                .sum::<C64>()
                .norm_sqr()
        })
        .sum();
    Ok(overlap.sqrt().min(1.0))
}

/// Largest eigenvalue of the reduced state on `targets`, i.e. the largest
/// squared Schmidt coefficient across the `targets | rest` cut.
pub fn largest_schmidt_weight(state: &PureState, targets: &[usize]) -> Result<f64> {
    let m = state.marginal(targets)?;
    Ok(m.eigenvalues().last().copied().unwrap_or(0.0))
}
