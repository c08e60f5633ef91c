use nalgebra::DMatrix;

use super::kernel::{self, LocalOp, C64, TOL};
use super::pure::PureState;
use super::register::{Register, MAX_DENSITY_DIM};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// A density operator over a mixed-radix register, stored densely row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    register: Register,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub(crate) fn check_dim(dim: usize) -> Result<()> {
        if dim > MAX_DENSITY_DIM {
            return Err(Error::CapExceeded(format!(
                "density matrix of dimension {dim} exceeds cap {MAX_DENSITY_DIM}"
            )));
        }
        Ok(())
    }

    pub(crate) fn from_raw(register: Register, data: Vec<C64>) -> Result<Self> {
        Self::check_dim(register.total())?;
        debug_assert_eq!(data.len(), register.total() * register.total());
        Ok(Self { register, data })
    }

    /// Validated construction: Hermitian, unit trace and positive
    /// semidefinite, each within [`TOL`].
    pub fn new(register: &Register, matrix: &DMatrix<C64>) -> Result<Self> {
        let d = register.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} matrix for a register of {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let data = (0..d * d).map(|i| matrix[(i / d, i % d)]).collect();
        let dm = Self::from_raw(register.clone(), data)?;
        dm.validate()?;
        Ok(dm)
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        state.to_density()
    }

    /// `Σ p_i |Φ_i⟩⟨Φ_i|`.
    pub fn from_ensemble(members: &[(f64, PureState)]) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidState("empty ensemble".into()))?;
        let register = first.1.register().clone();
        let d = register.total();
        Self::check_dim(d)?;
        let total_weight: f64 = members.iter().map(|(p, _)| p).sum();
        if members.iter().any(|(p, _)| *p < 0.0) || (total_weight - 1.0).abs() > TOL {
            return Err(Error::InvalidState(format!(
                "ensemble weights must be non-negative and sum to 1, got {total_weight}"
            )));
        }
        let mut data = vec![C64::default(); d * d];
        for (p, s) in members {
            if s.register() != &register {
                return Err(Error::DimensionMismatch("ensemble members differ in register".into()));
            }
            let a = s.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    data[i * d + j] += a[i] * a[j].conj() * *p;
                }
            }
        }
        Self::from_raw(register, data)
    }

    pub fn maximally_mixed(register: &Register) -> Result<Self> {
        let d = register.total();
        Self::check_dim(d)?;
        let mut data = vec![C64::default(); d * d];
        for i in 0..d {
            data[i * d + i] = C64::new(1.0 / d as f64, 0.0);
        }
        Self::from_raw(register.clone(), data)
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub(crate) fn data(&self) -> &[C64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<C64> {
        &mut self.data
    }

    pub fn dim(&self) -> usize {
        self.register.total()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.data[r * d + c])
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    /// Eigenvalues in ascending order (Hermitian part).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_part(&self.matrix())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let mut herm: f64 = 0.0;
        for i in 0..d {
            for j in 0..i {
                herm = herm.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
            herm = herm.max(self.entry(i, i).im.abs());
        }
        if herm > TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        if let Some(&min) = self.eigenvalues().first() {
            if min < -TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    /// The matrix as a vector over the doubled register (row factors, then
    /// column factors), so local kernels can act on either side.
    fn doubled(&self) -> Result<Register> {
        let mut dims = self.register.dims().to_vec();
        dims.extend_from_slice(self.register.dims());
        Register::uncapped(&dims)
    }

    /// `ρ ↦ (I ⊗ U ⊗ I) ρ (I ⊗ U ⊗ I)†`.
    pub fn apply(&mut self, op: &LocalOp, targets: &[usize]) -> Result<()> {
        self.apply_with(Execution::current(), op, targets)
    }

    pub fn apply_with(&mut self, exec: Execution, op: &LocalOp, targets: &[usize]) -> Result<()> {
        self.register.check_targets(targets)?;
        let doubled = self.doubled()?;
        let m = self.register.len();
        let cols: Vec<usize> = targets.iter().map(|t| t + m).collect();
        kernel::apply_local(exec, &mut self.data, &doubled, targets, op)?;
        kernel::apply_local(exec, &mut self.data, &doubled, &cols, &op.conj())
    }

    /// Monomial operator in gather form (see [`PureState`]'s counterpart):
    /// `out[i,j] = c(i) conj(c(j)) in[σ(i), σ(j)]`.
    pub(crate) fn apply_gather<F>(&mut self, map: F)
    where
        F: Fn(usize) -> (usize, C64) + Sync + Send,
    {
        let d = self.dim();
        let table: Vec<(usize, C64)> = (0..d).map(&map).collect();
        let input = std::mem::take(&mut self.data);
        let mut out = vec![C64::default(); d * d];
        exec::for_each_chunk_mut(Execution::current(), &mut out, d, |i, row| {
            let (si, ci) = table[i];
            for (j, o) in row.iter_mut().enumerate() {
                let (sj, cj) = table[j];
                *o = ci * cj.conj() * input[si * d + sj];
            }
        });
        self.data = out;
    }

    /// Diagonal probabilities grouped by the outcome on `targets`.
    pub fn distribution(&self, targets: &[usize]) -> Result<Vec<f64>> {
        self.register.check_targets(targets)?;
        let (local, rest) = self.register.split_offsets(targets);
        let d = self.dim();
        Ok(local
            .iter()
            .map(|&a| rest.iter().map(|&r| self.data[(a + r) * d + a + r].re).sum())
            .collect())
    }

    /// Partial trace over everything except `targets`.
    pub fn marginal(&self, targets: &[usize]) -> Result<DensityMatrix> {
        self.register.check_targets(targets)?;
        let sub = self.register.subregister(targets)?;
        let (local, rest) = self.register.split_offsets(targets);
        let (d, k) = (self.dim(), local.len());
        let mut data = vec![C64::default(); k * k];
        for a in 0..k {
            for b in 0..k {
                data[a * k + b] = rest
                    .iter()
                    .map(|&r| self.data[(local[a] + r) * d + local[b] + r])
                    .sum();
            }
        }
        Self::from_raw(sub, data)
    }

    /// Projects `targets` onto `outcome` and returns the probability and the
    /// normalized state of the remaining factors.
    pub fn condition(&self, targets: &[usize], outcome: &[usize]) -> Result<(f64, DensityMatrix)> {
        let sub = self.register.subregister(targets)?;
        let a = sub.index_of(outcome)?;
        let rest_factors = self.register.complement(targets);
        let rest_reg = self.register.subregister(&rest_factors)?;
        let (local, rest) = self.register.split_offsets(targets);
        let d = self.dim();
        let k = rest.len();
        let base = local[a];
        let mut data = vec![C64::default(); k * k];
        for (i, &ri) in rest.iter().enumerate() {
            for (j, &rj) in rest.iter().enumerate() {
                data[i * k + j] = self.data[(base + ri) * d + base + rj];
            }
        }
        let p: f64 = (0..k).map(|i| data[i * k + i].re).sum();
        if p <= 0.0 {
            return Err(Error::InvalidState(format!("outcome {outcome:?} has probability {p}")));
        }
        data.iter_mut().for_each(|z| *z /= p);
        Ok((p, Self::from_raw(rest_reg, data)?))
    }

    /// `self += weight · other`.
    pub fn add_scaled(&mut self, other: &DensityMatrix, weight: f64) -> Result<()> {
        if self.register != other.register {
            return Err(Error::DimensionMismatch("density matrices on different registers".into()));
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b * weight);
        Ok(())
    }

    pub(crate) fn scale(&mut self, weight: f64) {
        self.data.iter_mut().for_each(|a| *a *= weight);
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.register.dims() != other.register.dims() {
            return Err(Error::DimensionMismatch("density matrices on different registers".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::state::kernel::fourier_matrix;

    fn reg(d: &[usize]) -> Register {
        Register::new(d).unwrap()
    }

    #[test]
    fn validation_catches_bad_matrices() {
        let r = reg(&[2]);
        let mut m = DMatrix::<C64>::identity(2, 2);
        assert!(DensityMatrix::new(&r, &m).is_err()); // trace 2
        m[(1, 1)] = C64::new(0.0, 0.0);
        assert!(DensityMatrix::new(&r, &m).is_ok());
        m[(0, 1)] = C64::new(0.3, 0.0);
        assert!(DensityMatrix::new(&r, &m).is_err()); // not Hermitian
        let neg = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.5, 0.0), C64::default(), C64::default(), C64::new(-0.5, 0.0)],
        );
        assert!(DensityMatrix::new(&r, &neg).is_err());
    }

    #[test]
    fn evolution_matches_pure_state_evolution() {
        let r = reg(&[3, 2]);
        let mut rng = rng::stream(5, 1);
        let psi = PureState::random(&r, &mut rng);
        let op = LocalOp::dense(&fourier_matrix(3)).unwrap();
        let mut evolved = psi.clone();
        evolved.apply(&op, &[0]).unwrap();
        let mut rho = psi.to_density().unwrap();
        rho.apply(&op, &[0]).unwrap();
        assert!(rho.max_abs_diff(&evolved.to_density().unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn marginal_and_condition_of_product() {
        let mut rng = rng::stream(6, 1);
        let a = PureState::random(&reg(&[2]), &mut rng);
        let b = PureState::random(&reg(&[3]), &mut rng);
        let rho = a.tensor(&b).unwrap().to_density().unwrap();
        let mb = rho.marginal(&[1]).unwrap();
        assert!(mb.max_abs_diff(&b.to_density().unwrap()).unwrap() < 1e-12);
        assert!((mb.trace().re - 1.0).abs() < 1e-12);
        let (p, cond) = rho.condition(&[0], &[1]).unwrap();
        assert!((p - a.amplitudes()[1].norm_sqr()).abs() < 1e-12);
        assert!(cond.max_abs_diff(&b.to_density().unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn ensemble_requires_probability_weights() {
        let r = reg(&[2]);
        let z = PureState::zero(&r);
        assert!(DensityMatrix::from_ensemble(&[(0.5, z.clone())]).is_err());
        let one = PureState::basis(&r, &[1]).unwrap();
        let rho = DensityMatrix::from_ensemble(&[(0.5, z), (0.5, one)]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(&r).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn density_cap_is_enforced() {
        let r = reg(&[1 << 13]);
        assert!(matches!(
            DensityMatrix::maximally_mixed(&r),
            Err(Error::CapExceeded(_))
        ));
    }
}
