//! Dense mixed-radix quantum states.

mod density;
mod kernel;
mod metrics;
mod pure;
mod register;

pub use density::DensityMatrix;
pub(crate) use kernel::BlockFourier;
pub use kernel::{fourier_matrix, root_of_unity, unitarity_deviation, LocalOp, C64, TOL, ZERO_TOL};
pub use metrics::{
    factor_residual, fidelity, largest_schmidt_weight, marginal_fidelity, trace_distance, StateRef,
};
pub use pure::{Measurement, PureState};
pub use register::{
    max_amplitudes, Register, DEFAULT_MAX_AMPLITUDES, MAX_AMPLITUDES_ENV, MAX_DENSITY_DIM,
};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-random `d × d` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for c in 0..d {
        let diag = r[(c, c)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            u[(row, c)] *= phase;
        }
    }
    u
}
