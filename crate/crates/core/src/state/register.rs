use crate::error::{Error, Result};

/// Default cap on state-vector length.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 22;
/// Cap on density-matrix dimension.
pub const MAX_DENSITY_DIM: usize = 1 << 12;
/// Environment variable overriding [`DEFAULT_MAX_AMPLITUDES`].
pub const MAX_AMPLITUDES_ENV: &str = "AHSP_SIM_MAX_AMPLITUDES";

/// Current state-vector cap, honouring [`MAX_AMPLITUDES_ENV`].
pub fn max_amplitudes() -> usize {
    std::env::var(MAX_AMPLITUDES_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_AMPLITUDES)
}

/// A composite register of qudits with dimensions `d_1, …, d_m`, laid out
/// row-major with the leftmost factor most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Register {
    /// Builds a register, enforcing the state-vector cap.
    pub fn new(dims: &[usize]) -> Result<Self> {
        let reg = Self::uncapped(dims)?;
        let cap = max_amplitudes();
        if reg.total > cap {
            return Err(Error::CapExceeded(format!(
                "register of {} amplitudes exceeds cap {cap}",
                reg.total
            )));
        }
        Ok(reg)
    }

    pub(crate) fn uncapped(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::DimensionMismatch("register needs at least one factor".into()));
        }
        if dims.contains(&0) {
            return Err(Error::DimensionMismatch("qudit dimension 0".into()));
        }
        let mut strides = vec![1; dims.len()];
        let mut total = 1usize;
        for i in (0..dims.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(dims[i])
                .ok_or(Error::Overflow("register size"))?;
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            total,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Number of basis states.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn index_of(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for a {}-factor register",
                coords.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for ((&c, &d), &s) in coords.iter().zip(&self.dims).zip(&self.strides) {
            if c >= d {
                return Err(Error::OutOfRange(format!("coordinate {c} for dimension {d}")));
            }
            idx += c * s;
        }
        Ok(idx)
    }

    pub fn coords_of(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.total {
            return Err(Error::OutOfRange(format!("index {index} of {}", self.total)));
        }
        Ok(self
            .dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| index / s % d)
            .collect())
    }

    /// Coordinate of factor `factor` within flat `index`.
    #[inline]
    pub fn coord(&self, index: usize, factor: usize) -> usize {
        index / self.strides[factor] % self.dims[factor]
    }

    /// The register formed by `targets`, in the given order.
    pub fn subregister(&self, targets: &[usize]) -> Result<Register> {
        self.check_targets(targets)?;
        Register::uncapped(&targets.iter().map(|&t| self.dims[t]).collect::<Vec<_>>())
    }

    /// Factors not in `targets`, in increasing order.
    pub fn complement(&self, targets: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|i| !targets.contains(i)).collect()
    }

    pub fn concat(&self, other: &Register) -> Result<Register> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Register::new(&dims)
    }

    pub(crate) fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.dims.len() {
                return Err(Error::OutOfRange(format!(
                    "target {t} in a {}-factor register",
                    self.dims.len()
                )));
            }
            if targets[..i].contains(&t) {
                return Err(Error::DimensionMismatch(format!("target {t} repeated")));
            }
        }
        Ok(())
    }

    /// Flat offsets of every local index of `targets` (row-major in target
    /// order) and of every index of the complement. Any basis index is
    /// `target[a] + rest[r]` for exactly one pair `(a, r)`.
    pub(crate) fn split_offsets(&self, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let rest = self.complement(targets);
        (self.offsets(targets), self.offsets(&rest))
    }

    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize];
        for &f in factors {
            let (d, s) = (self.dims[f], self.strides[f]);
            out = out
                .iter()
                .flat_map(|&base| (0..d).map(move |c| base + c * s))
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_codec_examples() {
        let r = Register::new(&[2, 4]).unwrap();
        assert_eq!(r.index_of(&[1, 2]).unwrap(), 6);
        assert_eq!(r.coords_of(0).unwrap(), vec![0, 0]);
        let r = Register::new(&[2, 3, 2]).unwrap();
        assert_eq!(r.index_of(&[1, 2, 1]).unwrap(), 11);
        assert!(r.index_of(&[2, 0, 0]).is_err());
        assert!(r.coords_of(12).is_err());
    }

    #[test]
    fn index_codec_is_a_bijection() {
        let r = Register::new(&[3, 1, 4, 5, 2]).unwrap();
        for i in 0..r.total() {
            assert_eq!(r.index_of(&r.coords_of(i).unwrap()).unwrap(), i);
        }
    }

    #[test]
    fn split_offsets_partition_the_index_set() {
        let r = Register::new(&[2, 3, 4]).unwrap();
        let (t, rest) = r.split_offsets(&[2, 0]);
        let mut seen: Vec<usize> = t
            .iter()
            .flat_map(|&a| rest.iter().map(move |&b| a + b))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..24).collect::<Vec<_>>());
        // target order is honoured: local index 1 moves factor 0 (second target)
        assert_eq!(t[1], 12);
    }

    #[test]
    fn rejects_bad_targets_and_dims() {
        let r = Register::new(&[2, 2]).unwrap();
        assert!(r.subregister(&[0, 0]).is_err());
        assert!(r.subregister(&[2]).is_err());
        assert!(Register::new(&[]).is_err());
        assert!(Register::new(&[2, 0]).is_err());
        assert!(matches!(
            Register::new(&[1 << 12, 1 << 12]),
            Err(Error::CapExceeded(_))
        ));
    }
}
