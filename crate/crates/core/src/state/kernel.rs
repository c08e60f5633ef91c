//! Strided kernels for local operators.
//!
//! A local operator on target factors acts independently on every *fiber*:
//! the `d` amplitudes that share the same complement coordinates. Fibers are
//! disjoint, so they are gathered, transformed and scattered in parallel.
//! The full `total × total` matrix is never formed.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::register::Register;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub type C64 = Complex64;

/// Tolerance for unitarity and normalization checks.
pub const TOL: f64 = 1e-9;
/// Amplitudes below this magnitude count as exactly zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Fourier transforms of this size or smaller use the dense kernel.
const DENSE_FOURIER_MAX: usize = 1;
/// Strided block-transform factors up to this size skip the transpose.
const SMALL_STRIDED_MAX: usize = 4;
/// Upper bound on the amplitudes one work item of the blocked kernel stages.
const BLOCK_BUDGET: usize = 1 << 15;

/// `e^{2πi a/n}` with `a` reduced mod `n` before the conversion to floating
/// point.
#[inline]
pub fn root_of_unity(a: u64, n: u64) -> C64 {
    let r = a % n;
    if r == 0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, TAU * r as f64 / n as f64)
}

#[derive(Clone)]
enum Kind {
    Dense(Vec<C64>),
    Fourier {
        inverse: bool,
        plan: Arc<dyn Fft<f64>>,
    },
}

/// A `d × d` operator applied to a set of target factors.
#[derive(Clone)]
pub struct LocalOp {
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for LocalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Dense(_) => write!(f, "LocalOp::Dense({})", self.dim),
            Kind::Fourier { inverse, .. } => {
                write!(f, "LocalOp::Fourier({}, inverse={inverse})", self.dim)
            }
        }
    }
}

impl LocalOp {
    /// Wraps a matrix, rejecting it unless `U†U = I` within [`TOL`].
    pub fn dense(matrix: &DMatrix<C64>) -> Result<Self> {
        let dev = unitarity_deviation(matrix)?;
        if dev > TOL {
            return Err(Error::NotUnitary(dev));
        }
        Self::dense_unchecked(matrix)
    }

    /// Wraps a square matrix without checking unitarity.
    pub fn dense_unchecked(matrix: &DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let data = (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| matrix[(r, c)])
            .collect();
        Ok(Self {
            dim: d,
            kind: Kind::Dense(data),
        })
    }

    /// The quantum Fourier transform over `Z_n`:
    /// `|j⟩ ↦ n^{-1/2} Σ_l ω_n^{jl} |l⟩`.
    pub fn fourier(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("Fourier transform of size 0".into()));
        }
        if n <= DENSE_FOURIER_MAX {
            return Self::dense_unchecked(&fourier_matrix(n));
        }
        let plan = FftPlanner::new().plan_fft_inverse(n);
        Ok(Self {
            dim: n,
            kind: Kind::Fourier {
                inverse: true,
                plan,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        match &self.kind {
            Kind::Dense(m) => {
                let d = self.dim;
                let data = (0..d * d).map(|i| m[(i % d) * d + i / d].conj()).collect();
                Self {
                    dim: d,
                    kind: Kind::Dense(data),
                }
            }
            Kind::Fourier { inverse, .. } => self.fourier_flipped(!inverse),
        }
    }

    /// Entrywise complex conjugate, used on the column side of `ρ ↦ UρU†`.
    pub fn conj(&self) -> Self {
        match &self.kind {
            Kind::Dense(m) => Self {
                dim: self.dim,
                kind: Kind::Dense(m.iter().map(|z| z.conj()).collect()),
            },
            // the Fourier matrix is symmetric, so conj = adjoint
            Kind::Fourier { inverse, .. } => self.fourier_flipped(!inverse),
        }
    }

    fn fourier_flipped(&self, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let plan = if inverse {
            planner.plan_fft_inverse(self.dim)
        } else {
            planner.plan_fft_forward(self.dim)
        };
        Self {
            dim: self.dim,
            kind: Kind::Fourier { inverse, plan },
        }
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let d = self.dim;
        match &self.kind {
            Kind::Dense(m) => DMatrix::from_fn(d, d, |r, c| m[r * d + c]),
            Kind::Fourier { inverse, .. } => {
                let f = fourier_matrix(d);
                if *inverse {
                    f
                } else {
                    f.adjoint()
                }
            }
        }
    }

    fn scratch_len(&self) -> usize {
        match &self.kind {
            Kind::Dense(_) => self.dim,
            Kind::Fourier { plan, .. } => plan.get_inplace_scratch_len(),
        }
    }

    /// Transforms consecutive fibers of length `dim`.
    fn apply_batch(&self, fibers: &mut [C64], scratch: &mut [C64]) {
        match &self.kind {
            Kind::Dense(_) => fibers
                .chunks_exact_mut(self.dim)
                .for_each(|f| self.apply_fiber(f, scratch)),
            Kind::Fourier { plan, .. } => {
                plan.process_with_scratch(fibers, scratch);
                let scale = 1.0 / (self.dim as f64).sqrt();
                fibers.iter_mut().for_each(|z| *z *= scale);
            }
        }
    }

    fn apply_fiber(&self, fiber: &mut [C64], scratch: &mut [C64]) {
        match &self.kind {
            Kind::Dense(m) => {
                let d = self.dim;
                let out = &mut scratch[..d];
                for (l, o) in out.iter_mut().enumerate() {
                    let row = &m[l * d..(l + 1) * d];
                    *o = row.iter().zip(fiber.iter()).map(|(a, b)| a * b).sum();
                }
                fiber.copy_from_slice(out);
            }
            Kind::Fourier { plan, .. } => {
                plan.process_with_scratch(fiber, scratch);
                let scale = 1.0 / (self.dim as f64).sqrt();
                fiber.iter_mut().for_each(|z| *z *= scale);
            }
        }
    }
}

/// `F_n` as an explicit matrix, entry `(l, j) = ω_n^{jl} / √n`.
pub fn fourier_matrix(n: usize) -> DMatrix<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |l, j| {
        root_of_unity((j as u64 * l as u64) % n as u64, n as u64) * scale
    })
}

/// `max |(U†U − I)_{ij}|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> Result<f64> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch("operator is not square".into()));
    }
    let p = u.adjoint() * u;
    let mut dev: f64 = 0.0;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let expect = if r == c { 1.0 } else { 0.0 };
            dev = dev.max((p[(r, c)] - C64::new(expect, 0.0)).norm());
        }
    }
    Ok(dev)
}

#[derive(Clone, Copy)]
struct SharedMut(*mut C64);
// SAFETY: only used to write fibers, which are pairwise disjoint index sets.
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}

/// Applies `op` to the factors `targets` of an amplitude array laid out as
/// `register`.
pub(crate) fn apply_local(
    exec: Execution,
    amps: &mut [C64],
    register: &Register,
    targets: &[usize],
    op: &LocalOp,
) -> Result<()> {
    register.check_targets(targets)?;
    let d: usize = targets.iter().map(|&t| register.dims()[t]).product();
    if d != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} on targets of dimension {d}",
            op.dim()
        )));
    }
    if targets.is_empty() {
        return Ok(());
    }
    debug_assert_eq!(amps.len(), register.total());
    if let [t] = targets {
        apply_single(exec, amps, d, register.strides()[*t], op);
        return Ok(());
    }
    let (local, rest) = register.split_offsets(targets);
    let ptr = SharedMut(amps.as_mut_ptr());
    let scratch = op.scratch_len().max(d);
    exec::for_each_index_init(
        exec,
        rest.len(),
        amps.len() * d.min(64),
        || (vec![C64::default(); d], vec![C64::default(); scratch]),
        |(fiber, scratch), r| {
            let base = rest[r];
            let p = ptr;
            // SAFETY: `base + local[l]` enumerates fiber `r`, which no other
            // iteration touches; indices are in bounds by construction.
            unsafe {
                for (f, &o) in fiber.iter_mut().zip(&local) {
                    *f = *p.0.add(base + o);
                }
                op.apply_fiber(fiber, scratch);
                for (f, &o) in fiber.iter().zip(&local) {
                    *p.0.add(base + o) = *f;
                }
            }
        },
    );
    Ok(())
}

/// Single-factor kernel. The amplitudes form `outer` blocks of a `d × stride`
/// row-major matrix whose columns are the fibers. Each work item copies a
/// panel of columns into fiber-major scratch, transforms all of them in one
/// batch and writes them back.
fn apply_single(exec: Execution, amps: &mut [C64], d: usize, stride: usize, op: &LocalOp) {
    if stride == 1 {
        let per_item = (BLOCK_BUDGET / d).max(1) * d;
        let scratch = op.scratch_len().max(d);
        exec::for_each_chunk_init(
            exec,
            amps,
            per_item,
            || vec![C64::default(); scratch],
            |scratch, _, chunk| op.apply_batch(chunk, scratch),
        );
        return;
    }
    let outer = amps.len() / (d * stride);
    let width = (BLOCK_BUDGET / d).clamp(1, 64);
    let cols = stride.min(width);
    let blocks = if stride < width { (width / stride).max(1) } else { 1 };
    let col_chunks = stride.div_ceil(cols);
    let items = outer.div_ceil(blocks) * col_chunks;
    let fibers = blocks * cols;
    let ptr = SharedMut(amps.as_mut_ptr());
    let scratch = op.scratch_len().max(d);
    exec::for_each_index_init(
        exec,
        items,
        amps.len(),
        || (vec![C64::default(); fibers * d], vec![C64::default(); scratch]),
        |(buf, scratch), item| {
            let (bi, ci) = (item / col_chunks, item % col_chunks);
            let b_lo = bi * blocks;
            let b_hi = (b_lo + blocks).min(outer);
            let c_lo = ci * cols;
            let c_hi = (c_lo + cols).min(stride);
            let w = c_hi - c_lo;
            let n = (b_hi - b_lo) * w;
            let p = ptr;
            // SAFETY: item (bi, ci) owns columns c_lo..c_hi of blocks
            // b_lo..b_hi; no other item touches them.
            unsafe {
                for b in b_lo..b_hi {
                    let base = b * d * stride + c_lo;
                    let f0 = (b - b_lo) * w;
                    for r in 0..d {
                        let row = p.0.add(base + r * stride);
                        for c in 0..w {
                            buf[(f0 + c) * d + r] = *row.add(c);
                        }
                    }
                }
                op.apply_batch(&mut buf[..n * d], scratch);
                for b in b_lo..b_hi {
                    let base = b * d * stride + c_lo;
                    let f0 = (b - b_lo) * w;
                    for r in 0..d {
                        let row = p.0.add(base + r * stride);
                        for c in 0..w {
                            *row.add(c) = buf[(f0 + c) * d + r];
                        }
                    }
                }
            }
        },
    );
}

/// Unnormalized Fourier transform over every factor of a contiguous
/// row-major block. Factors of dimension 1 are skipped.
#[derive(Clone)]
pub(crate) struct BlockFourier {
    len: usize,
    /// `(d, stride, plan)` per non-trivial factor.
    factors: Vec<(usize, usize, Arc<dyn Fft<f64>>)>,
    /// Unnormalized `ω_d^{jl}` for factors handled in place, keyed like `factors`.
    small: Vec<Option<Vec<C64>>>,
    scratch_len: usize,
}

impl fmt::Debug for BlockFourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<usize> = self.factors.iter().map(|x| x.0).collect();
        write!(f, "BlockFourier({dims:?})")
    }
}

impl BlockFourier {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let len: usize = dims.iter().product();
        let mut stride = len;
        let mut factors = Vec::new();
        for &d in dims {
            stride /= d;
            if d > 1 {
                factors.push((d, stride, planner.plan_fft_inverse(d)));
            }
        }
        let scratch_len = factors
            .iter()
            .map(|f| f.2.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let small = factors
            .iter()
            .map(|&(d, stride, _)| {
                (stride > 1 && d <= SMALL_STRIDED_MAX).then(|| {
                    (0..d * d)
                        .map(|i| root_of_unity(((i / d) * (i % d)) as u64, d as u64))
                        .collect()
                })
            })
            .collect();
        Self {
            len,
            factors,
            small,
            scratch_len,
        }
    }

    /// The normalization `1/√len` left out by [`Self::apply_unscaled`].
    pub(crate) fn scale(&self) -> f64 {
        1.0 / (self.len as f64).sqrt()
    }

    /// `(transpose buffer, FFT scratch)` sized for this block.
    pub(crate) fn workspace(&self) -> (Vec<C64>, Vec<C64>) {
        (vec![C64::default(); self.len], vec![C64::default(); self.scratch_len])
    }

    pub(crate) fn apply_unscaled(&self, block: &mut [C64], buf: &mut [C64], scratch: &mut [C64]) {
        debug_assert_eq!(block.len(), self.len);
        for ((d, stride, plan), small) in self.factors.iter().zip(&self.small) {
            let (d, stride) = (*d, *stride);
            if let Some(m) = small {
                strided_small_dft(block, d, stride, m);
                continue;
            }
            if stride == 1 {
                plan.process_with_scratch(block, scratch);
                continue;
            }
            let slab = d * stride;
            for (o, chunk) in block.chunks_exact(slab).enumerate() {
                let fibers = &mut buf[o * slab..(o + 1) * slab];
                for r in 0..d {
                    for c in 0..stride {
                        fibers[c * d + r] = chunk[r * stride + c];
                    }
                }
            }
            plan.process_with_scratch(buf, scratch);
            for (o, chunk) in block.chunks_exact_mut(slab).enumerate() {
                let fibers = &buf[o * slab..(o + 1) * slab];
                for r in 0..d {
                    for c in 0..stride {
                        chunk[r * stride + c] = fibers[c * d + r];
                    }
                }
            }
        }
    }
}

/// In-place DFT along a strided axis of length `d ≤ SMALL_STRIDED_MAX` with
/// matrix `m`, one column of `stride` fibers at a time.
fn strided_small_dft(block: &mut [C64], d: usize, stride: usize, m: &[C64]) {
    let mut v = [C64::default(); SMALL_STRIDED_MAX];
    for slab in block.chunks_exact_mut(d * stride) {
        if d == 2 {
            let (lo, hi) = slab.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
            continue;
        }
        for c in 0..stride {
            for (r, x) in v[..d].iter_mut().enumerate() {
                *x = slab[r * stride + c];
            }
            for l in 0..d {
                slab[l * stride + c] = m[l * d..(l + 1) * d].iter().zip(&v[..d]).map(|(a, b)| a * b).sum();
            }
        }
    }
}

/// Applies a monomial operator given in gather form:
/// `out[j] = phase(j) · in[source(j)]`. Unitary when `source` is a bijection.
pub(crate) fn apply_gather<F>(exec: Execution, amps: &mut Vec<C64>, map: F)
where
    F: Fn(usize) -> (usize, C64) + Sync + Send,
{
    let input = std::mem::take(amps);
    let mut out = vec![C64::default(); input.len()];
    exec::for_each_mut(exec, &mut out, |j, o| {
        let (src, phase) = map(j);
        *o = phase * input[src];
    });
    *amps = out;
}
