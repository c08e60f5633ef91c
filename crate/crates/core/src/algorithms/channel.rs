//! The `z`-averaged channel `Λ(ρ) = (1/|Y|) Σ_z Λ_z ρ Λ_z†` on
//! `|0⟩⟨0|_A ⊗ ρ_B`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exec;
use crate::ops::HidingFunction;
use crate::state::{DensityMatrix, C64};

use super::pipeline::Pipeline;

fn prepare(p: &Pipeline<'_>, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    let f = p.function();
    if f.codomain().order() != f.hidden().index() {
        return Err(Error::Invariant(format!(
            "|Y| = {} differs from |G|/|H| = {}",
            f.codomain().order(),
            f.hidden().index()
        )));
    }
    if rho_b.register() != &p.aux_register() {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary density matrix has dims {:?}, expected {:?}",
            rho_b.register().dims(),
            p.aux_register().dims()
        )));
    }
    let n = p.register().total();
    DensityMatrix::check_dim(n)?;
    let ys = rho_b.dim();
    let gs = n / ys;
    let mut data = vec![C64::default(); n * n];
    for i in 0..ys {
        for j in 0..ys {
            data[i * gs * n + j * gs] = rho_b.data()[i * ys + j];
        }
    }
    let mut rho = DensityMatrix::from_raw(p.register().clone(), data)?;
    qft_a(p, &mut rho)?;
    Ok(rho)
}

fn qft_a(p: &Pipeline<'_>, rho: &mut DensityMatrix) -> Result<()> {
    for (t, op) in p.fourier_ops() {
        rho.apply_with(p.execution(), op, &[t])?;
    }
    Ok(())
}

/// `Λ` evaluated one `z` at a time, exactly as written.
pub fn lambda_channel_literal(f: &HidingFunction, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    let p = Pipeline::new(f)?;
    let rho1 = prepare(&p, rho_b)?;
    let y = f.codomain();
    let weight = 1.0 / y.order() as f64;
    let mut acc: Option<DensityMatrix> = None;
    for z in y.elements() {
        let phases = p.s_z_table(&z)?;
        let (src, phase) = p.middle_monomial(&phases);
        let mut rho = rho1.clone();
        rho.apply_gather(|j| (src[j] as usize, phase[j]));
        qft_a(&p, &mut rho)?;
        match acc.as_mut() {
            None => {
                rho.scale(weight);
                acc = Some(rho);
            }
            Some(a) => a.add_scaled(&rho, weight)?,
        }
    }
    Ok(acc.expect("Y is non-empty"))
}

/// `Λ` computed with the `z` average folded into one pass.
///
/// The middle section `V_z = S_z U_f S_z U_f` of every run is monomial. When
/// all `V_z` share one permutation `π` and differ only in their phases
/// `c_z`, `Σ_z V_z σ V_z† = (K ∘ σ)` gathered through `π`, with
/// `K[i,j] = (1/|Y|) Σ_z c_z(i) conj(c_z(j))`. `K` depends on `i` only
/// through its phase profile `(c_z(i))_z`, so it is tabulated per pair of
/// profiles. Falls back to [`lambda_channel_literal`] otherwise.
pub fn lambda_channel(f: &HidingFunction, rho_b: &DensityMatrix) -> Result<DensityMatrix> {
    let p = Pipeline::new(f)?;
    let y = f.codomain();
    let n = p.register().total();
    let monomials: Vec<(Vec<u32>, Vec<C64>)> = y
        .elements()
        .map(|z| Ok(p.middle_monomial(&p.s_z_table(&z)?)))
        .collect::<Result<_>>()?;
    let src = monomials[0].0.clone();
    if monomials.iter().any(|(s, _)| s != &src) {
        return lambda_channel_literal(f, rho_b);
    }
    let mut rho = prepare(&p, rho_b)?;

    // phase profiles, keyed on a fine rounding of each phase
    let quantize = |c: C64| ((c.re * 1e9).round() as i64, (c.im * 1e9).round() as i64);
    let mut classes: HashMap<Vec<(i64, i64)>, usize> = HashMap::new();
    let mut class_of = vec![0usize; n];
    let mut reps: Vec<usize> = Vec::new();
    for (j, c) in class_of.iter_mut().enumerate() {
        let key: Vec<(i64, i64)> = monomials.iter().map(|(_, ph)| quantize(ph[j])).collect();
        *c = *classes.entry(key).or_insert_with(|| {
            reps.push(j);
            reps.len() - 1
        });
    }
    let m = reps.len();
    let weight = 1.0 / monomials.len() as f64;
    let mut kernel = vec![C64::default(); m * m];
    for (a, &ra) in reps.iter().enumerate() {
        for (b, &rb) in reps.iter().enumerate() {
            kernel[a * m + b] = monomials
                .iter()
                .map(|(_, ph)| ph[ra] * ph[rb].conj())
                .sum::<C64>()
                * weight;
        }
    }

    let input = std::mem::take(rho.data_mut());
    let mut out = vec![C64::default(); n * n];
    exec::for_each_chunk_mut(p.execution(), &mut out, n, |i, row| {
        let (si, ki) = (src[i] as usize, &kernel[class_of[i] * m..(class_of[i] + 1) * m]);
        let in_row = &input[si * n..(si + 1) * n];
        for (j, o) in row.iter_mut().enumerate() {
            *o = ki[class_of[j]] * in_row[src[j] as usize];
        }
    });
    *rho.data_mut() = out;
    qft_a(&p, &mut rho)?;
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{init_free_expected_distribution, AuxSpec, AuxState};
    use crate::group::{FiniteAbelianGroup, ProductSubgroup};
    use crate::rng;
    use crate::state::{trace_distance, PureState, TOL};

    fn instance(m: &[u64], h: &[u64]) -> HidingFunction {
        let g = FiniteAbelianGroup::new(m).unwrap();
        HidingFunction::canonical(&ProductSubgroup::new(&g, h).unwrap(), Some(4)).unwrap()
    }

    #[test]
    fn fast_and_literal_agree() {
        let mut g = rng::stream(12, 0);
        for (m, h) in [(&[4u64][..], &[2u64][..]), (&[2, 4], &[1, 2]), (&[6], &[1]), (&[3, 3], &[3, 1])] {
            let f = instance(m, h);
            let p = Pipeline::new(&f).unwrap();
            let aux = AuxSpec::random_mixed().realize(&p.aux_register(), &mut g).unwrap();
            let rho_b = aux.density().unwrap();
            let fast = lambda_channel(&f, &rho_b).unwrap();
            let slow = lambda_channel_literal(&f, &rho_b).unwrap();
            assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12, "{m:?} {h:?}");
        }
    }

    #[test]
    fn maximally_mixed_example() {
        let f = instance(&[2, 4], &[1, 2]);
        let p = Pipeline::new(&f).unwrap();
        let rho_b = DensityMatrix::maximally_mixed(&p.aux_register()).unwrap();
        let out = lambda_channel(&f, &rho_b).unwrap();
        assert!((out.trace().re - 1.0).abs() < TOL);
        let d = out.distribution(p.a_targets()).unwrap();
        let g = f.domain();
        for (x, q) in g.elements().zip(&d) {
            let want = if x.coords() == [0, 0] || x.coords() == [0, 2] { 0.5 } else { 0.0 };
            assert!((q - want).abs() < 1e-12);
        }
        let (_, cond) = out.condition(p.a_targets(), &[0, 2]).unwrap();
        assert_eq!(p.b_targets(), &[0, 1]);
        assert!(trace_distance(&cond, &rho_b).unwrap() < 1e-9);
    }

    #[test]
    fn pure_input_matches_averaged_runs() {
        let f = instance(&[4, 2], &[2, 1]);
        let p = Pipeline::new(&f).unwrap();
        let phi = PureState::random(&p.aux_register(), &mut rng::stream(2, 0));
        let out = lambda_channel(&f, &phi.to_density().unwrap()).unwrap();
        let d = init_free_expected_distribution(&f, &AuxState::Pure(phi)).unwrap();
        let got = out.distribution(p.a_targets()).unwrap();
        let diff = got
            .iter()
            .zip(d.probabilities())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }
}
