//! The operators of both pipelines: the Fourier transform over `G`, coset
//! states, the hiding-function oracle `U_f`, and `S_z`.
//!
//! Registers follow the group layout: factor `j` of the main register has
//! dimension `N_j`, factor `j` of the auxiliary register has dimension `h_j`
//! (so the auxiliary register carries `Y = ⊕ Z_{h_j} ≅ G/H`). Trivial factors
//! `h_j = 1` are kept as dimension-1 qudits.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::group::{FiniteAbelianGroup, GroupElement, ProductSubgroup};
use crate::rng;
use crate::state::{fourier_matrix, root_of_unity, LocalOp, PureState, Register, C64};

/// `F_N` with entries `ω_N^{jl} / √N`.
pub fn qft_matrix(n: usize) -> Result<DMatrix<C64>> {
    if n < 1 {
        return Err(Error::DimensionMismatch("QFT size must be at least 1".into()));
    }
    Ok(fourier_matrix(n))
}

/// Register dims `(N_1, …, N_k)` for a group.
pub fn group_register(group: &FiniteAbelianGroup) -> Result<Register> {
    Register::new(&dims_of(group)?)
}

pub(crate) fn dims_of(group: &FiniteAbelianGroup) -> Result<Vec<usize>> {
    group
        .moduli()
        .iter()
        .map(|&n| usize::try_from(n).map_err(|_| Error::Overflow("register dimension")))
        .collect()
}

fn check_target_dims(
    register: &Register,
    targets: &[usize],
    group: &FiniteAbelianGroup,
    what: &str,
) -> Result<()> {
    register.check_targets(targets)?;
    let got: Vec<usize> = targets.iter().map(|&t| register.dims()[t]).collect();
    let want = dims_of(group)?;
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} targets have dims {got:?}, expected {want:?}"
        )));
    }
    Ok(())
}

/// `F_G = F_{N_1} ⊗ … ⊗ F_{N_k}` on `targets`, one factor at a time.
pub fn apply_qft_group(state: &mut PureState, group: &FiniteAbelianGroup, targets: &[usize]) -> Result<()> {
    check_target_dims(state.register(), targets, group, "QFT")?;
    for &t in targets {
        state.apply(&LocalOp::fourier(state.register().dims()[t])?, &[t])?;
    }
    Ok(())
}

/// `F_G†`.
pub fn apply_inverse_qft_group(
    state: &mut PureState,
    group: &FiniteAbelianGroup,
    targets: &[usize],
) -> Result<()> {
    check_target_dims(state.register(), targets, group, "inverse QFT")?;
    for &t in targets {
        state.apply(&LocalOp::fourier(state.register().dims()[t])?.adjoint(), &[t])?;
    }
    Ok(())
}

/// `|r + H⟩ = |H|^{-1/2} Σ_{y∈H} |r + y⟩` on the group register.
pub fn coset_state(r: &GroupElement, h: &ProductSubgroup) -> Result<PureState> {
    let g = h.parent();
    let reg = group_register(g)?;
    let amp = C64::new(1.0 / (h.order() as f64).sqrt(), 0.0);
    let mut amps = vec![C64::default(); reg.total()];
    for y in h.enumerate() {
        amps[g.index_of(&g.add(r, &y)?)?] = amp;
    }
    PureState::from_amplitudes(&reg, amps)
}

/// The closed form `√(|H|/|G|) Σ_{t∈H⊥} ω_M^{r·t} |t⟩`, built from group
/// data alone.
pub fn qft_of_coset_state_reference(r: &GroupElement, h: &ProductSubgroup) -> Result<PureState> {
    let g = h.parent();
    let reg = group_register(g)?;
    let scale = (h.order() as f64 / g.order() as f64).sqrt();
    let mut amps = vec![C64::default(); reg.total()];
    for t in h.orthogonal().enumerate() {
        amps[g.index_of(&t)?] = root_of_unity(g.inner_product(r, &t)?, g.exponent()) * scale;
    }
    PureState::from_amplitudes(&reg, amps)
}

/// A function `f: G → Y`, `Y = ⊕ Z_{h_j}`, constant exactly on the cosets
/// of the planted subgroup `H` and onto `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct HidingFunction {
    hidden: ProductSubgroup,
    codomain: FiniteAbelianGroup,
    /// Flat codomain index of `f(x)` for every flat domain index `x`.
    table: Vec<usize>,
}

impl HidingFunction {
    /// `f(x) = (x_1 mod h_1, …, x_k mod h_k)`, optionally composed with a
    /// uniformly random relabeling of `Y` drawn from `relabel_seed`.
    pub fn canonical(hidden: &ProductSubgroup, relabel_seed: Option<u64>) -> Result<Self> {
        let g = hidden.parent();
        let codomain = hidden.quotient_group();
        let mut perm: Vec<usize> = (0..codomain.order() as usize).collect();
        if let Some(seed) = relabel_seed {
            perm.shuffle(&mut rng::stream(seed, 0));
        }
        let table = g
            .elements()
            .map(|x| {
                let label = hidden.coset_label(&x).expect("element of G");
                perm[codomain.index_of_unchecked(label.coords())]
            })
            .collect();
        let f = Self {
            hidden: hidden.clone(),
            codomain,
            table,
        };
        f.validate()?;
        Ok(f)
    }

    /// Wraps an explicit table listing `f(x)` for every `x` in flat order.
    pub fn from_table(hidden: &ProductSubgroup, values: &[GroupElement]) -> Result<Self> {
        let g = hidden.parent();
        if values.len() as u64 != g.order() {
            return Err(Error::InvalidHidingFunction(format!(
                "table has {} entries, |G| = {}",
                values.len(),
                g.order()
            )));
        }
        let codomain = hidden.quotient_group();
        let table = values
            .iter()
            .map(|y| {
                codomain
                    .index_of(y)
                    .map_err(|e| Error::InvalidHidingFunction(format!("value outside Y: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let f = Self {
            hidden: hidden.clone(),
            codomain,
            table,
        };
        f.validate()?;
        Ok(f)
    }

    /// Checks separation (`f(x) = f(y) ⇔ x − y ∈ H`) and surjectivity.
    ///
    /// Separation over all pairs is equivalent to the map
    /// `coset label ↦ f-value` being well defined and injective, which is
    /// checked in one pass.
    pub fn validate(&self) -> Result<()> {
        let g = self.hidden.parent();
        let q = self.hidden.quotient_group();
        let n_cosets = q.order() as usize;
        let mut forward = vec![usize::MAX; n_cosets];
        let mut backward = vec![usize::MAX; self.codomain.order() as usize];
        for (i, x) in g.elements().enumerate() {
            let label = q.index_of_unchecked(self.hidden.coset_label(&x)?.coords());
            let value = self.table[i];
            match forward[label] {
                usize::MAX => forward[label] = value,
                v if v != value => {
                    return Err(Error::InvalidHidingFunction(format!(
                        "f is not constant on the coset of {x}"
                    )))
                }
                _ => {}
            }
            match backward[value] {
                usize::MAX => backward[value] = label,
                l if l != label => {
                    return Err(Error::InvalidHidingFunction(format!(
                        "f takes the same value on two cosets (at {x})"
                    )))
                }
                _ => {}
            }
        }
        if backward.contains(&usize::MAX) {
            return Err(Error::InvalidHidingFunction("f is not onto Y".into()));
        }
        Ok(())
    }

    /// The literal pairwise separation check, quadratic in `|G|`.
    pub fn validate_pairwise(&self) -> bool {
        let g = self.hidden.parent();
        let elems: Vec<_> = g.elements().collect();
        elems.iter().enumerate().all(|(i, x)| {
            elems.iter().enumerate().all(|(j, y)| {
                let same = self.table[i] == self.table[j];
                let in_h = self.hidden.contains(&g.sub(x, y).expect("same group"));
                same == in_h
            })
        })
    }

    pub fn domain(&self) -> &FiniteAbelianGroup {
        self.hidden.parent()
    }

    pub fn codomain(&self) -> &FiniteAbelianGroup {
        &self.codomain
    }

    pub fn hidden(&self) -> &ProductSubgroup {
        &self.hidden
    }

    pub fn eval(&self, x: &GroupElement) -> Result<GroupElement> {
        let i = self.domain().index_of(x)?;
        self.codomain.element_at(self.table[i])
    }

    pub(crate) fn eval_index(&self, x: usize) -> usize {
        self.table[x]
    }
}

/// Flat index arithmetic over a register's factor subset.
struct SubIndexer {
    targets: Vec<usize>,
    local: Vec<usize>,
}

impl SubIndexer {
    fn new(register: &Register, targets: &[usize]) -> Self {
        let (local, _) = register.split_offsets(targets);
        Self {
            targets: targets.to_vec(),
            local,
        }
    }

    /// Local (row-major over targets) index of `j`'s target coordinates.
    #[inline]
    fn local_of(&self, register: &Register, j: usize) -> usize {
        self.targets
            .iter()
            .fold(0, |acc, &t| acc * register.dims()[t] + register.coord(j, t))
    }
}

/// Componentwise `a ± b` on flat indices of `⊕ Z_{h_j}`.
pub(crate) fn quotient_add(y: &FiniteAbelianGroup, a: usize, b: usize, subtract: bool) -> usize {
    let mut out = 0usize;
    let mut stride = 1usize;
    let (mut a, mut b) = (a, b);
    for &h in y.moduli().iter().rev() {
        let h = h as usize;
        let (ca, cb) = (a % h, b % h);
        let c = if subtract { (ca + h - cb) % h } else { (ca + cb) % h };
        out += c * stride;
        stride *= h;
        a /= h;
        b /= h;
    }
    out
}

pub(crate) fn quotient_neg(y: &FiniteAbelianGroup, a: usize) -> usize {
    quotient_add(y, 0, a, true)
}

/// `U_f |x⟩_A |y⟩_B = |x⟩_A |y + f(x)⟩_B`.
pub fn apply_oracle(
    state: &mut PureState,
    f: &HidingFunction,
    a_targets: &[usize],
    b_targets: &[usize],
) -> Result<()> {
    oracle(state, f, a_targets, b_targets, false)
}

/// `U_f† |x⟩_A |y⟩_B = |x⟩_A |y − f(x)⟩_B`.
pub fn apply_oracle_inverse(
    state: &mut PureState,
    f: &HidingFunction,
    a_targets: &[usize],
    b_targets: &[usize],
) -> Result<()> {
    oracle(state, f, a_targets, b_targets, true)
}

fn oracle(
    state: &mut PureState,
    f: &HidingFunction,
    a_targets: &[usize],
    b_targets: &[usize],
    inverse: bool,
) -> Result<()> {
    let reg = state.register().clone();
    check_disjoint(a_targets, b_targets)?;
    check_target_dims(&reg, a_targets, f.domain(), "oracle main")?;
    check_target_dims(&reg, b_targets, f.codomain(), "oracle auxiliary")?;
    let a = SubIndexer::new(&reg, a_targets);
    let b = SubIndexer::new(&reg, b_targets);
    let y = f.codomain();
    let one = C64::new(1.0, 0.0);
    // gather form: out[x, y] = in[x, y ∓ f(x)]
    state.apply_gather(|j| {
        let x = a.local_of(&reg, j);
        let yb = b.local_of(&reg, j);
        let src = quotient_add(y, yb, f.eval_index(x), !inverse);
        (j - b.local[yb] + b.local[src], one)
    });
    Ok(())
}

/// `S_z |y⟩ = ω_{h_1}^{z_1 y_1} ⋯ ω_{h_k}^{z_k y_k} |−y⟩` on the auxiliary
/// register. The phase equals `ω_{M_Y}^{z·y}` with the inner product of `Y`.
pub fn s_z_apply(
    state: &mut PureState,
    codomain: &FiniteAbelianGroup,
    z: &GroupElement,
    b_targets: &[usize],
) -> Result<()> {
    let reg = state.register().clone();
    check_target_dims(&reg, b_targets, codomain, "S_z")?;
    if !codomain.contains(z) {
        return Err(Error::GroupMismatch(format!("z = {z} is not in {codomain}")));
    }
    let b = SubIndexer::new(&reg, b_targets);
    let phases = s_z_phases(codomain, z);
    state.apply_gather(|j| {
        let yb = b.local_of(&reg, j);
        // out[y] = phase(−y) · in[−y]
        let src = quotient_neg(codomain, yb);
        (j - b.local[yb] + b.local[src], phases[src])
    });
    Ok(())
}

/// `ω^{z·y}` for every flat `y ∈ Y`.
pub(crate) fn s_z_phases(codomain: &FiniteAbelianGroup, z: &GroupElement) -> Vec<C64> {
    codomain
        .elements()
        .map(|y| root_of_unity(codomain.inner_product_unchecked(z.coords(), y.coords()), codomain.exponent()))
        .collect()
}

/// `S_z` as an explicit `|Y| × |Y|` matrix.
pub fn s_z_matrix(codomain: &FiniteAbelianGroup, z: &GroupElement) -> Result<DMatrix<C64>> {
    if !codomain.contains(z) {
        return Err(Error::GroupMismatch(format!("z = {z} is not in {codomain}")));
    }
    let n = codomain.order() as usize;
    let phases = s_z_phases(codomain, z);
    let mut m = DMatrix::zeros(n, n);
    for yi in 0..n {
        m[(quotient_neg(codomain, yi), yi)] = phases[yi];
    }
    Ok(m)
}

fn check_disjoint(a: &[usize], b: &[usize]) -> Result<()> {
    if a.iter().any(|t| b.contains(t)) {
        return Err(Error::DimensionMismatch("main and auxiliary targets overlap".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::unitarity_deviation;

    fn group(m: &[u64]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(m).unwrap()
    }

    fn sub(g: &FiniteAbelianGroup, h: &[u64]) -> ProductSubgroup {
        ProductSubgroup::new(g, h).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn qft_matrix_sizes() {
        assert!(qft_matrix(0).is_err());
        assert!((qft_matrix(1).unwrap()[(0, 0)] - c(1.0)).norm() < 1e-15);
        for n in [2, 3, 7, 16] {
            assert!(unitarity_deviation(&qft_matrix(n).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn qft_group_examples() {
        let z4 = group(&[4]);
        let mut s = PureState::zero(&group_register(&z4).unwrap());
        apply_qft_group(&mut s, &z4, &[0]).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a - c(0.5)).norm() < 1e-15));
        apply_inverse_qft_group(&mut s, &z4, &[0]).unwrap();
        assert!((s.amplitudes()[0] - c(1.0)).norm() < 1e-15);

        let g = group(&[2, 4]);
        let mut s = PureState::zero(&group_register(&g).unwrap());
        apply_qft_group(&mut s, &g, &[0, 1]).unwrap();
        let u = 1.0 / 8f64.sqrt();
        assert!(s.amplitudes().iter().all(|a| (a - c(u)).norm() < 1e-15));
        assert!(apply_qft_group(&mut s, &z4, &[0]).is_err());
    }

    #[test]
    fn coset_state_examples() {
        let z4 = group(&[4]);
        let h = sub(&z4, &[2]);
        let s = coset_state(&z4.element(&[1]).unwrap(), &h).unwrap();
        let r = 0.5f64.sqrt();
        assert_eq!(s.amplitudes()[0], c(0.0));
        assert!((s.amplitudes()[1] - c(r)).norm() < 1e-15);
        assert!((s.amplitudes()[3] - c(r)).norm() < 1e-15);

        let triv = ProductSubgroup::trivial(&z4);
        let s = coset_state(&z4.element(&[3]).unwrap(), &triv).unwrap();
        assert_eq!(s, PureState::basis(s.register(), &[3]).unwrap());

        let g = group(&[2, 4]);
        let h = sub(&g, &[1, 2]);
        let s = coset_state(&g.element(&[0, 1]).unwrap(), &h).unwrap();
        for coords in [[0, 1], [0, 3], [1, 1], [1, 3]] {
            assert!((s.amplitude(&coords).unwrap() - c(0.5)).norm() < 1e-15);
        }
    }

    #[test]
    fn coset_reference_examples() {
        let z4 = group(&[4]);
        let h = sub(&z4, &[2]);
        let s = qft_of_coset_state_reference(&z4.element(&[1]).unwrap(), &h).unwrap();
        let r = 0.5f64.sqrt();
        assert!((s.amplitudes()[0] - c(r)).norm() < 1e-15);
        assert!((s.amplitudes()[2] - c(-r)).norm() < 1e-15);

        let g = group(&[2, 4]);
        let h = sub(&g, &[1, 2]);
        let s = qft_of_coset_state_reference(&g.element(&[0, 1]).unwrap(), &h).unwrap();
        assert!((s.amplitude(&[0, 0]).unwrap() - c(r)).norm() < 1e-15);
        assert!((s.amplitude(&[0, 2]).unwrap() - c(-r)).norm() < 1e-15);

        let s = qft_of_coset_state_reference(&g.zero(), &h).unwrap();
        assert!(s.amplitudes().iter().all(|a| a.im.abs() < 1e-15 && a.re >= 0.0));
    }

    #[test]
    fn canonical_function_examples() {
        let z4 = group(&[4]);
        let f = HidingFunction::canonical(&sub(&z4, &[2]), None).unwrap();
        let vals: Vec<u64> = z4.elements().map(|x| f.eval(&x).unwrap().coords()[0]).collect();
        assert_eq!(vals, vec![0, 1, 0, 1]);

        let g = group(&[2, 4]);
        let f = HidingFunction::canonical(&ProductSubgroup::whole(&g), None).unwrap();
        assert_eq!(f.codomain().order(), 1);
        let f = HidingFunction::canonical(&sub(&g, &[1, 2]), None).unwrap();
        assert_eq!(f.eval(&g.element(&[1, 3]).unwrap()).unwrap().coords(), &[0, 1]);
        assert!(f.validate_pairwise());

        let f = HidingFunction::canonical(&sub(&group(&[6, 4]), &[3, 2]), Some(11)).unwrap();
        assert!(f.validate_pairwise());
    }

    #[test]
    fn invalid_tables_are_rejected() {
        let z4 = group(&[4]);
        let h = sub(&z4, &[2]);
        let y = h.quotient_group();
        let e = |v| y.element(&[v]).unwrap();
        // not constant on {0,2}
        assert!(HidingFunction::from_table(&h, &[e(0), e(1), e(1), e(0)]).is_err());
        // constant everywhere: not separating (and not onto)
        assert!(HidingFunction::from_table(&h, &[e(0), e(0), e(0), e(0)]).is_err());
        assert!(HidingFunction::from_table(&h, &[e(1), e(0), e(1), e(0)]).is_ok());
        assert!(HidingFunction::from_table(&h, &[e(1), e(0)]).is_err());
    }

    fn ab_state(f: &HidingFunction, a: &[usize], b: &[usize]) -> PureState {
        let mut dims = dims_of(f.domain()).unwrap();
        dims.extend(dims_of(f.codomain()).unwrap());
        let mut coords = a.to_vec();
        coords.extend_from_slice(b);
        PureState::basis(&Register::new(&dims).unwrap(), &coords).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let g = group(&[2, 4]);
        let f = HidingFunction::canonical(&sub(&g, &[1, 2]), Some(3)).unwrap();
        for x in g.elements() {
            let xs: Vec<usize> = x.coords().iter().map(|&c| c as usize).collect();
            let mut s = ab_state(&f, &xs, &[0, 0]);
            apply_oracle(&mut s, &f, &[0, 1], &[2, 3]).unwrap();
            let fx: Vec<usize> = f.eval(&x).unwrap().coords().iter().map(|&c| c as usize).collect();
            assert_eq!(s, ab_state(&f, &xs, &fx));
        }

        // Y = Z_2: applying twice is the identity
        let z4 = group(&[4]);
        let f = HidingFunction::canonical(&sub(&z4, &[2]), None).unwrap();
        for x in 0..4 {
            for y in 0..2 {
                let mut s = ab_state(&f, &[x], &[y]);
                apply_oracle(&mut s, &f, &[0], &[1]).unwrap();
                apply_oracle(&mut s, &f, &[0], &[1]).unwrap();
                assert_eq!(s, ab_state(&f, &[x], &[y]));
            }
        }
        let mut s = ab_state(&f, &[0], &[0]);
        assert!(apply_oracle(&mut s, &f, &[0], &[0]).is_err());
    }

    #[test]
    fn s_z_examples() {
        let y2 = group(&[2]);
        let reg = Register::new(&[2]).unwrap();
        let z1 = y2.element(&[1]).unwrap();
        let mut s = PureState::basis(&reg, &[1]).unwrap();
        s_z_apply(&mut s, &y2, &z1, &[0]).unwrap();
        assert!((s.amplitudes()[1] - c(-1.0)).norm() < 1e-15);
        let mut s = PureState::zero(&reg);
        s_z_apply(&mut s, &y2, &z1, &[0]).unwrap();
        assert!((s.amplitudes()[0] - c(1.0)).norm() < 1e-15);

        // z = 0 is the negation permutation
        let y = group(&[3, 4]);
        let reg = Register::new(&[3, 4]).unwrap();
        let mut s = PureState::basis(&reg, &[1, 1]).unwrap();
        s_z_apply(&mut s, &y, &y.zero(), &[0, 1]).unwrap();
        assert_eq!(s, PureState::basis(&reg, &[2, 3]).unwrap());

        assert!(s_z_apply(&mut s, &y, &y2.zero(), &[0, 1]).is_err());
    }

    #[test]
    fn s_z_matrix_agrees_with_kernel() {
        let y = group(&[3, 4]);
        let z = y.element(&[2, 3]).unwrap();
        let m = s_z_matrix(&y, &z).unwrap();
        assert!(unitarity_deviation(&m).unwrap() < 1e-12);
        let reg = Register::new(&[3, 4]).unwrap();
        for i in 0..12 {
            let mut s = PureState::basis(&reg, &reg.coords_of(i).unwrap()).unwrap();
            s_z_apply(&mut s, &y, &z, &[0, 1]).unwrap();
            for r in 0..12 {
                assert!((s.amplitudes()[r] - m[(r, i)]).norm() < 1e-15);
            }
        }
    }
}
