//! Precompiled circuits for one hiding function.
//!
//! The auxiliary register `B` occupies factors `0..k` and the main register
//! `A` factors `k..2k`, so a flat index is `y · |G| + x` and every `A`
//! vector is contiguous. The oracle and `S_z` are stored as gather tables
//! over that layout.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::group::GroupElement;
use crate::ops::{dims_of, quotient_add, quotient_neg, s_z_phases, HidingFunction};
use crate::state::{BlockFourier, LocalOp, PureState, Register, C64};

use super::OpCounts;

#[derive(Clone, Debug)]
pub struct Pipeline<'f> {
    f: &'f HidingFunction,
    register: Register,
    a: Vec<usize>,
    b: Vec<usize>,
    fourier: Vec<LocalOp>,
    /// `QFT_A` on one contiguous `A` vector, unnormalized.
    a_block: BlockFourier,
    g_size: usize,
    /// `out[x, y] = in[x, y − f(x)]`.
    oracle_src: Vec<u32>,
    /// `out[x, y] = in[x, −y]`.
    neg_src: Vec<u32>,
    /// `S_z U_f S_z` composed: `out[j] = ω^{z·a_j} ω^{z·b_j} in[tail_src[j]]`.
    /// The `S_z` table is a character of `Y`, so only `tail_phase[j] = a_j + b_j`
    /// is stored.
    tail_src: Vec<u32>,
    tail_phase: Vec<u32>,
    exec: Execution,
}

impl<'f> Pipeline<'f> {
    pub fn new(f: &'f HidingFunction) -> Result<Self> {
        let a_dims = dims_of(f.domain())?;
        let b_dims = dims_of(f.codomain())?;
        let k = a_dims.len();
        let register = Register::new(&[b_dims, a_dims.clone()].concat())?;
        let total = register.total();
        if u32::try_from(total).is_err() {
            return Err(Error::CapExceeded(format!("{total} amplitudes")));
        }
        let y_size = f.codomain().order() as usize;
        let g_size = f.domain().order() as usize;
        let y = f.codomain();
        let neg: Vec<usize> = (0..y_size).map(|v| quotient_neg(y, v)).collect();
        let mut oracle_src = Vec::with_capacity(total);
        let mut neg_src = Vec::with_capacity(total);
        for v in 0..y_size {
            for x in 0..g_size {
                let shifted = quotient_add(y, v, f.eval_index(x), true);
                oracle_src.push((shifted * g_size + x) as u32);
                neg_src.push((neg[v] * g_size + x) as u32);
            }
        }
        // out3[j] = ph(n(j)) · ph(n(o(n(j)))) · in[n(o(n(j)))]
        let (mut tail_src, mut tail_phase) = (Vec::with_capacity(total), Vec::with_capacity(total));
        for j in 0..total {
            let nj = neg_src[j] as usize;
            let src = neg_src[oracle_src[nj] as usize];
            tail_src.push(src);
            tail_phase.push(quotient_add(y, nj / g_size, src as usize / g_size, false) as u32);
        }
        Ok(Self {
            f,
            register,
            a: (k..2 * k).collect(),
            b: (0..k).collect(),
            fourier: a_dims.iter().map(|&n| LocalOp::fourier(n)).collect::<Result<_>>()?,
            a_block: BlockFourier::new(&a_dims),
            g_size,
            oracle_src,
            neg_src,
            tail_src,
            tail_phase,
            exec: Execution::current(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn function(&self) -> &'f HidingFunction {
        self.f
    }

    /// The joint `A ⊗ B` register.
    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn a_targets(&self) -> &[usize] {
        &self.a
    }

    pub fn b_targets(&self) -> &[usize] {
        &self.b
    }

    pub fn aux_register(&self) -> Register {
        self.register.subregister(&self.b).expect("auxiliary factors")
    }

    /// `|0⟩_A ⊗ |Φ⟩_B`.
    pub fn input_state(&self, phi: &PureState) -> Result<PureState> {
        if phi.register() != &self.aux_register() {
            return Err(Error::DimensionMismatch(format!(
                "auxiliary state has dims {:?}, expected {:?}",
                phi.register().dims(),
                self.aux_register().dims()
            )));
        }
        let mut amps = vec![C64::default(); self.register.total()];
        for (v, &c) in phi.amplitudes().iter().enumerate() {
            amps[v * self.g_size] = c;
        }
        Ok(PureState::from_parts(self.register.clone(), amps))
    }

    pub(crate) fn qft_a(&self, state: &mut PureState, counts: &mut OpCounts) -> Result<()> {
        for (t, op) in self.a.iter().zip(&self.fourier) {
            state.apply_with(self.exec, op, &[*t])?;
        }
        counts.qft_applications += 1;
        Ok(())
    }

    pub(crate) fn oracle(&self, state: &mut PureState, counts: &mut OpCounts) {
        let src = &self.oracle_src;
        gather(self.exec, state.amps_mut(), |j, input| input[src[j] as usize]);
        counts.oracle_calls += 1;
    }

    /// `S_z` on `B` given the phase table `ω^{z·y}` from [`Self::s_z_table`].
    #[cfg(test)]
    pub(crate) fn s_z(&self, state: &mut PureState, phases: &[C64], counts: &mut OpCounts) {
        let (src, gs) = (&self.neg_src, self.g_size);
        gather(self.exec, state.amps_mut(), |j, input| {
            let s = src[j] as usize;
            phases[s / gs] * input[s]
        });
        counts.s_z_applications += 1;
    }

    pub fn s_z_table(&self, z: &GroupElement) -> Result<Vec<C64>> {
        let y = self.f.codomain();
        if !y.contains(z) {
            return Err(Error::GroupMismatch(format!("z = {z} is not in {y}")));
        }
        Ok(s_z_phases(y, z))
    }

    /// `ψ₃ = QFT_A · U_f · QFT_A |0⟩|0⟩`.
    pub fn standard_state(&self) -> Result<(PureState, OpCounts)> {
        let mut counts = OpCounts::default();
        let mut s = PureState::zero(&self.register);
        self.qft_a(&mut s, &mut counts)?;
        self.oracle(&mut s, &mut counts);
        self.qft_a(&mut s, &mut counts)?;
        Ok((s, counts))
    }

    /// The `z`-independent head of the initialization-free run:
    /// `φ₁ = U_f · QFT_A |0⟩|Φ⟩`.
    pub fn init_free_head(&self, phi: &PureState) -> Result<(PureState, OpCounts)> {
        let mut counts = OpCounts::default();
        let mut s = self.input_state(phi)?;
        self.qft_a(&mut s, &mut counts)?;
        self.oracle(&mut s, &mut counts);
        Ok((s, counts))
    }

    /// Continues a head state: `QFT_A · S_z · U_f · S_z`, with the three
    /// monomial operators applied as one precomposed gather.
    pub fn init_free_tail(
        &self,
        head: &PureState,
        phases: &[C64],
        counts: &mut OpCounts,
    ) -> Result<PureState> {
        let mut out = PureState::from_parts(self.register.clone(), vec![C64::default(); head.amplitudes().len()]);
        self.init_free_tail_into(head, phases, counts, &mut out);
        Ok(out)
    }

    /// [`Self::init_free_tail`] into an existing state on the joint register.
    /// Each `A` vector is gathered and transformed while it is in cache.
    pub(crate) fn init_free_tail_into(
        &self,
        head: &PureState,
        phases: &[C64],
        counts: &mut OpCounts,
        out: &mut PureState,
    ) {
        let (src, ph) = (&self.tail_src, &self.tail_phase);
        let input = head.amplitudes();
        let scale = self.a_block.scale();
        let scaled: Vec<C64> = phases.iter().map(|&c| c * scale).collect();
        let gs = self.g_size;
        exec::for_each_chunk_init(
            self.exec,
            out.amps_mut(),
            gs,
            || self.a_block.workspace(),
            |(buf, scratch), y, block| {
                let range = y * gs..(y + 1) * gs;
                for ((o, &k), &from) in block.iter_mut().zip(&ph[range.clone()]).zip(&src[range]) {
                    *o = scaled[k as usize] * input[from as usize];
                }
                self.a_block.apply_unscaled(block, buf, scratch);
            },
        );
        counts.s_z_applications += 2;
        counts.oracle_calls += 1;
        counts.qft_applications += 1;
    }

    /// `φ₄` for one `z`.
    pub fn init_free_state(&self, phi: &PureState, z: &GroupElement) -> Result<(PureState, OpCounts)> {
        let phases = self.s_z_table(z)?;
        let (head, mut counts) = self.init_free_head(phi)?;
        let s = self.init_free_tail(&head, &phases, &mut counts)?;
        Ok((s, counts))
    }

    /// Gather tables `(source, phase)` of `V_z = S_z U_f S_z U_f`, the
    /// monomial middle section of the initialization-free circuit.
    pub(crate) fn middle_monomial(&self, phases: &[C64]) -> (Vec<u32>, Vec<C64>) {
        let n = self.register.total();
        let gs = self.g_size;
        let mut src: Vec<u32> = (0..n as u32).collect();
        let mut phase = vec![C64::new(1.0, 0.0); n];
        let mut push = |table: &[u32], with_phase: bool| {
            // composite gather: out[j] = c2(j) c1(s2(j)) in[s1(s2(j))]
            let (old_src, old_phase) = (src.clone(), phase.clone());
            for j in 0..n {
                let s2 = table[j] as usize;
                let c2 = if with_phase { phases[s2 / gs] } else { C64::new(1.0, 0.0) };
                src[j] = old_src[s2];
                phase[j] = c2 * old_phase[s2];
            }
        };
        push(&self.oracle_src, false);
        push(&self.neg_src, true);
        push(&self.oracle_src, false);
        push(&self.neg_src, true);
        (src, phase)
    }

    pub(crate) fn fourier_ops(&self) -> impl Iterator<Item = (usize, &LocalOp)> {
        self.a.iter().copied().zip(&self.fourier)
    }

    pub(crate) fn execution(&self) -> Execution {
        self.exec
    }
}

fn gather<F>(exec: Execution, amps: &mut Vec<C64>, f: F)
where
    F: Fn(usize, &[C64]) -> C64 + Sync + Send,
{
    let input = std::mem::take(amps);
    let mut out = vec![C64::default(); input.len()];
    exec::for_each_mut(exec, &mut out, |j, o| *o = f(j, &input));
    *amps = out;
}
