//! Reference computations for the integration tests, written directly from
//! the definitions and sharing no arithmetic with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use ahsp_core::group::{FiniteAbelianGroup, ProductSubgroup};
use ahsp_core::ops::HidingFunction;
use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub type Coords = Vec<u64>;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm_all(moduli: &[u64]) -> u64 {
    moduli.iter().fold(1, |m, &n| m / gcd(m, n) * n)
}

/// Every coordinate tuple, first coordinate most significant.
pub fn all_coords(moduli: &[u64]) -> Vec<Coords> {
    let mut out = vec![vec![]];
    for &n in moduli {
        out = out
            .into_iter()
            .flat_map(|c: Coords| {
                (0..n).map(move |v| {
                    let mut c = c.clone();
                    c.push(v);
                    c
                })
            })
            .collect();
    }
    out
}

/// `Σ_j (M/N_j) x_j y_j mod M`.
pub fn pairing(moduli: &[u64], x: &[u64], y: &[u64]) -> u64 {
    let m = lcm_all(moduli);
    moduli
        .iter()
        .zip(x.iter().zip(y))
        .map(|(&n, (&a, &b))| (m / n) * ((a * b) % n) % m)
        .sum::<u64>()
        % m
}

pub fn omega(k: u64, n: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (k % n) as f64 / n as f64)
}

/// Elements of `⊕⟨g_j⟩` listed by taking all multiples of each generator.
pub fn subgroup_members(moduli: &[u64], gens: &[u64]) -> Vec<Coords> {
    all_coords(moduli)
        .into_iter()
        .filter(|x| x.iter().zip(gens.iter().zip(moduli)).all(|(&v, (&g, &n))| (0..n).any(|k| k * g % n == v)))
        .collect()
}

/// `{τ : τ·h = 0 for all h ∈ H}` by direct scan.
pub fn dual_members(moduli: &[u64], gens: &[u64]) -> Vec<Coords> {
    let h = subgroup_members(moduli, gens);
    all_coords(moduli)
        .into_iter()
        .filter(|t| h.iter().all(|y| pairing(moduli, t, y) == 0))
        .collect()
}

/// `|H|/|G|` on `H⊥`, zero elsewhere, keyed by coordinates.
pub fn uniform_dual(moduli: &[u64], gens: &[u64]) -> BTreeMap<Coords, f64> {
    let order: u64 = moduli.iter().product();
    let h = subgroup_members(moduli, gens).len() as f64;
    let dual = dual_members(moduli, gens);
    all_coords(moduli)
        .into_iter()
        .map(|t| {
            let p = if dual.contains(&t) { h / order as f64 } else { 0.0 };
            (t, p)
        })
        .collect()
}

/// Values of `f` keyed by coordinates.
pub fn f_values(f: &HidingFunction) -> BTreeMap<Coords, Coords> {
    f.domain()
        .elements()
        .map(|x| (x.coords().to_vec(), f.eval(&x).unwrap().coords().to_vec()))
        .collect()
}

/// `Pr_z(τ)` for `τ ∈ H⊥` as the double sum over coset representatives `r, r'` of
/// `ω^{z·(f(r) − f(r'))} ω_M^{(r − r')·τ}`, scaled by `(|H|/|G|)²`.
pub fn pr_z_double_sum(f: &HidingFunction, z: &[u64], tau: &[u64]) -> f64 {
    let g: Vec<u64> = f.domain().moduli().to_vec();
    let y: Vec<u64> = f.codomain().moduli().to_vec();
    let vals = f_values(f);
    let mut reps: BTreeMap<Coords, Coords> = BTreeMap::new();
    for (x, v) in &vals {
        reps.entry(v.clone()).or_insert_with(|| x.clone());
    }
    let (m_g, m_y) = (lcm_all(&g), lcm_all(&y));
    let order: u64 = g.iter().product();
    let h = order as f64 / reps.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (fr, r) in &reps {
        for (fs, s) in &reps {
            let dy: Coords = fr.iter().zip(fs).zip(&y).map(|((a, b), n)| (a + n - b) % n).collect();
            let dx: Coords = r.iter().zip(s).zip(&g).map(|((a, b), n)| (a + n - b) % n).collect();
            acc += omega(pairing(&y, z, &dy), m_y) * omega(pairing(&g, &dx, tau), m_g);
        }
    }
    (h / order as f64).powi(2) * acc.re
}

/// `F_G |r + H⟩` by summing the Fourier kernel over `r + H` directly.
pub fn qft_coset_brute(moduli: &[u64], gens: &[u64], r: &[u64]) -> BTreeMap<Coords, Complex64> {
    let h = subgroup_members(moduli, gens);
    let order: u64 = moduli.iter().product();
    let m = lcm_all(moduli);
    let norm = 1.0 / ((order as f64) * h.len() as f64).sqrt();
    all_coords(moduli)
        .into_iter()
        .map(|t| {
            let s: Complex64 = h
                .iter()
                .map(|y| {
                    let x: Coords = r.iter().zip(y).zip(moduli).map(|((a, b), n)| (a + b) % n).collect();
                    omega(pairing(moduli, &x, &t), m)
                })
                .sum();
            (t, s * norm)
        })
        .collect()
}

/// Moduli lists `N_1 | N_2 | … | N_k` (all `N_j ≥ 2`) with product at most
/// `max_order`, one per isomorphism class of nontrivial groups.
pub fn invariant_factor_groups(max_order: u64) -> Vec<Vec<u64>> {
    fn extend(prefix: &mut Vec<u64>, product: u64, max: u64, out: &mut Vec<Vec<u64>>) {
        let last = prefix.last().copied().unwrap_or(1);
        let mut n = if last == 1 { 2 } else { last };
        while product * n <= max {
            if n % last == 0 {
                prefix.push(n);
                out.push(prefix.clone());
                extend(prefix, product * n, max, out);
                prefix.pop();
            }
            n += if last == 1 { 1 } else { last };
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), 1, max_order, &mut out);
    out.sort_by_key(|m| (m.iter().product::<u64>(), m.clone()));
    out
}

/// Decompositions that are not in invariant-factor form.
pub fn extra_decompositions() -> Vec<Vec<u64>> {
    vec![
        vec![4, 2],
        vec![3, 2],
        vec![2, 3],
        vec![2, 6],
        vec![6, 4],
        vec![3, 4, 2],
        vec![5, 3],
        vec![4, 3, 2],
        vec![8, 2, 4],
        vec![9, 6],
        vec![7, 5],
        vec![12, 8],
    ]
}

/// The sweep family: invariant-factor groups plus the extra decompositions,
/// all of order at most `max_order`.
pub fn group_family(max_order: u64) -> Vec<Vec<u64>> {
    let mut out = invariant_factor_groups(max_order);
    out.extend(
        extra_decompositions()
            .into_iter()
            .filter(|m| m.iter().product::<u64>() <= max_order),
    );
    out
}

/// Divisor tuples `(h_1, …, h_k)` with `h_j | N_j`.
pub fn divisor_tuples(moduli: &[u64]) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for &n in moduli {
        out = out
            .into_iter()
            .flat_map(|t: Vec<u64>| {
                (1..=n).filter(move |d| n % d == 0).map(move |d| {
                    let mut t = t.clone();
                    t.push(d);
                    t
                })
            })
            .collect();
    }
    out
}

/// One planted instance: group, subgroup and a (possibly relabelled)
/// hiding function.
pub struct Instance {
    pub moduli: Vec<u64>,
    pub hidden: ProductSubgroup,
    pub f: HidingFunction,
}

/// Every product subgroup of every group in `family`. Odd-numbered instances
/// get a seeded relabelling of `f`.
pub fn instances(family: &[Vec<u64>], seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for moduli in family {
        let g = FiniteAbelianGroup::new(moduli).unwrap();
        for gens in divisor_tuples(moduli) {
            let hidden = ProductSubgroup::new(&g, &gens).unwrap();
            let idx = out.len() as u64;
            let relabel = (idx % 2 == 1).then(|| seed.wrapping_mul(1_000_003).wrapping_add(idx));
            let f = HidingFunction::canonical(&hidden, relabel).unwrap();
            out.push(Instance {
                moduli: moduli.clone(),
                hidden,
                f,
            });
        }
    }
    out
}

/// Pearson chi-square p-value of observed counts against expected
/// probabilities (cells with zero expectation must have zero count).
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            if c > 0 {
                return 0.0;
            }
            continue;
        }
        let e = p * n as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Recovery instances `(moduli, generators)` with `16 <= |G| <= 4096`.
pub fn recovery_suite() -> Vec<(Vec<u64>, Vec<u64>)> {
    let v = |m: &[u64], g: &[u64]| (m.to_vec(), g.to_vec());
    vec![
        v(&[16], &[4]),
        v(&[16], &[1]),
        v(&[16], &[16]),
        v(&[4, 4], &[2, 1]),
        v(&[2, 2, 2, 2], &[1, 2, 1, 2]),
        v(&[32], &[8]),
        v(&[2, 16], &[1, 4]),
        v(&[6, 6], &[3, 2]),
        v(&[64], &[16]),
        v(&[8, 8], &[2, 4]),
        v(&[3, 3, 3, 3], &[3, 1, 3, 1]),
        v(&[5, 25], &[5, 5]),
        v(&[128], &[32]),
        v(&[2, 4, 16], &[2, 2, 4]),
        v(&[12, 12], &[4, 3]),
        v(&[256], &[64]),
        v(&[16, 16], &[4, 8]),
        v(&[2, 2, 2, 2, 2, 2, 2, 2], &[1, 2, 1, 2, 1, 1, 2, 1]),
        v(&[512], &[128]),
        v(&[8, 8, 8], &[2, 4, 8]),
        v(&[1024], &[256]),
        v(&[32, 32], &[8, 16]),
        v(&[4096], &[64]),
        v(&[64, 64], &[4, 8]),
        v(&[2, 2048], &[2, 16]),
        v(&[16, 16, 16], &[4, 4, 2]),
    ]
}
