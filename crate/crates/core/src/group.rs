//! Finite abelian groups in decomposed form `G = Z_{N_1} ⊕ … ⊕ Z_{N_k}`.
//!
//! Everything here is exact integer arithmetic. Subgroups are restricted to
//! product subgroups `H = ⟨h_1⟩ ⊕ … ⊕ ⟨h_k⟩` with every `h_j` normalized to a
//! divisor of `N_j`; the trivial component subgroup `{0}` is encoded as
//! `h_j = N_j` so that `|H| = Π N_j / h_j` holds without special cases.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `|G|` for exhaustive scans.
pub const ENUMERATION_BOUND: u64 = 1 << 20;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn checked_lcm(a: u64, b: u64) -> Result<u64> {
    (a / gcd(a, b))
        .checked_mul(b)
        .ok_or(Error::Overflow("lcm of moduli"))
}

/// Canonical generator of `⟨raw⟩ ⊆ Z_n`: `gcd(raw mod n, n)`, or `n` for the
/// trivial subgroup.
pub fn normalize_generator(raw: u64, n: u64) -> u64 {
    debug_assert!(n >= 1);
    match gcd(raw % n, n) {
        0 => n,
        g => g,
    }
}

/// Positive divisors of `n` in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteAbelianGroup {
    moduli: Vec<u64>,
    exponent: u64,
    alphas: Vec<u64>,
    order: u64,
}

impl FiniteAbelianGroup {
    pub fn new(moduli: &[u64]) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors given".into()));
        }
        if let Some(pos) = moduli.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGroup(format!("modulus {pos} is zero")));
        }
        let mut exponent = 1;
        let mut order = 1u64;
        for &n in moduli {
            exponent = checked_lcm(exponent, n)?;
            order = order.checked_mul(n).ok_or(Error::Overflow("group order"))?;
        }
        let alphas = moduli.iter().map(|&n| exponent / n).collect();
        Ok(Self {
            moduli: moduli.to_vec(),
            exponent,
            alphas,
            order,
        })
    }

    /// Like [`new`](Self::new) but accepts signed input, rejecting negatives.
    pub fn from_signed(moduli: &[i64]) -> Result<Self> {
        let converted = moduli
            .iter()
            .map(|&n| {
                u64::try_from(n).map_err(|_| Error::InvalidGroup(format!("negative modulus {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&converted)
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of cyclic factors `k`.
    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    /// `M = lcm(N_1, …, N_k)`.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Inner-product weights `α_j = M / N_j`.
    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        x.0.len() == self.rank() && x.0.iter().zip(&self.moduli).all(|(&c, &n)| c < n)
    }

    /// Builds an element from already-reduced coordinates.
    pub fn element(&self, coords: &[u64]) -> Result<GroupElement> {
        let x = GroupElement(coords.to_vec());
        self.check(&x)?;
        Ok(x)
    }

    /// Builds an element, reducing each coordinate mod `N_j`.
    pub fn element_reduced(&self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.rank() {
            return Err(self.mismatch(coords.len()));
        }
        Ok(GroupElement(
            coords
                .iter()
                .zip(&self.moduli)
                .map(|(&c, &n)| c.rem_euclid(n as i64) as u64)
                .collect(),
        ))
    }

    fn mismatch(&self, len: usize) -> Error {
        Error::GroupMismatch(format!(
            "expected {} coordinates for {self}, got {len}",
            self.rank()
        ))
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        if x.0.len() != self.rank() {
            return Err(self.mismatch(x.0.len()));
        }
        if !self.contains(x) {
            return Err(Error::GroupMismatch(format!("{x} is not reduced in {self}")));
        }
        Ok(())
    }

    pub fn add(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(GroupElement(
            x.0.iter()
                .zip(&y.0)
                .zip(&self.moduli)
                .map(|((&a, &b), &n)| ((a as u128 + b as u128) % n as u128) as u64)
                .collect(),
        ))
    }

    pub fn neg(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(GroupElement(
            x.0.iter()
                .zip(&self.moduli)
                .map(|(&a, &n)| (n - a) % n)
                .collect(),
        ))
    }

    pub fn sub(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.add(x, &self.neg(y)?)
    }

    /// `x · y = Σ_j α_j x_j y_j mod M`, as a representative in `[0, M)`.
    pub fn inner_product(&self, x: &GroupElement, y: &GroupElement) -> Result<u64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.inner_product_unchecked(&x.0, &y.0))
    }

    pub(crate) fn inner_product_unchecked(&self, x: &[u64], y: &[u64]) -> u64 {
        let m = self.exponent as u128;
        let mut acc = 0u128;
        for ((&a, &b), &alpha) in x.iter().zip(y).zip(&self.alphas) {
            acc = (acc + (alpha as u128 * a as u128 % m) * b as u128 % m) % m;
        }
        acc as u64
    }

    /// Row-major flat index, leftmost factor most significant. Matches the
    /// layout of the main quantum register.
    pub fn index_of(&self, x: &GroupElement) -> Result<usize> {
        self.check(x)?;
        Ok(self.index_of_unchecked(&x.0))
    }

    pub(crate) fn index_of_unchecked(&self, coords: &[u64]) -> usize {
        coords
            .iter()
            .zip(&self.moduli)
            .fold(0usize, |acc, (&c, &n)| acc * n as usize + c as usize)
    }

    pub fn element_at(&self, mut index: usize) -> Result<GroupElement> {
        if index as u64 >= self.order {
            return Err(Error::OutOfRange(format!("index {index} in {self}")));
        }
        let mut coords = vec![0; self.rank()];
        for (c, &n) in coords.iter_mut().zip(&self.moduli).rev() {
            *c = (index % n as usize) as u64;
            index /= n as usize;
        }
        Ok(GroupElement(coords))
    }

    /// All elements in flat-index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order as usize).map(|i| self.element_at(i).expect("index below order"))
    }

    /// Every product subgroup, one per tuple of divisors `(h_1, …, h_k)`.
    pub fn product_subgroups(&self) -> Vec<ProductSubgroup> {
        let mut tuples: Vec<Vec<u64>> = vec![vec![]];
        for &n in &self.moduli {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    divisors(n).into_iter().map(move |d| {
                        let mut t = t.clone();
                        t.push(d);
                        t
                    })
                })
                .collect();
        }
        tuples
            .into_iter()
            .map(|gens| ProductSubgroup::from_normalized(self.clone(), gens))
            .collect()
    }
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(|n| format!("Z_{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

/// A coordinate tuple `(x_1, …, x_k)`. Validity is checked against a group at
/// every operation that takes one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<u64>);

impl GroupElement {
    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `H = ⟨h_1⟩ ⊕ … ⊕ ⟨h_k⟩` with each `h_j | N_j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductSubgroup {
    parent: FiniteAbelianGroup,
    generators: Vec<u64>,
    order: u64,
}

impl ProductSubgroup {
    /// Builds the subgroup generated componentwise by `raw`, normalizing each
    /// entry with [`normalize_generator`].
    pub fn new(parent: &FiniteAbelianGroup, raw: &[u64]) -> Result<Self> {
        if raw.len() != parent.rank() {
            return Err(parent.mismatch(raw.len()));
        }
        let gens = raw
            .iter()
            .zip(parent.moduli())
            .map(|(&r, &n)| normalize_generator(r, n))
            .collect();
        Ok(Self::from_normalized(parent.clone(), gens))
    }

    fn from_normalized(parent: FiniteAbelianGroup, generators: Vec<u64>) -> Self {
        let order = generators
            .iter()
            .zip(parent.moduli())
            .map(|(&h, &n)| n / h)
            .product();
        Self {
            parent,
            generators,
            order,
        }
    }

    pub fn trivial(parent: &FiniteAbelianGroup) -> Self {
        Self::from_normalized(parent.clone(), parent.moduli().to_vec())
    }

    pub fn whole(parent: &FiniteAbelianGroup) -> Self {
        Self::from_normalized(parent.clone(), vec![1; parent.rank()])
    }

    pub fn parent(&self) -> &FiniteAbelianGroup {
        &self.parent
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `|G / H| = Π h_j`.
    pub fn index(&self) -> u64 {
        self.parent.order() / self.order
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.parent.contains(x) && x.0.iter().zip(&self.generators).all(|(&c, &h)| c % h == 0)
    }

    /// `H⊥ = ⊕ ⟨N_j / h_j⟩`.
    pub fn orthogonal(&self) -> Self {
        let gens = self
            .generators
            .iter()
            .zip(self.parent.moduli())
            .map(|(&h, &n)| n / h)
            .collect();
        Self::from_normalized(self.parent.clone(), gens)
    }

    /// Orthogonality to every element of `H`, checked on the generators
    /// `h_j e_j` only (the inner product is bilinear).
    pub fn is_orthogonal(&self, x: &GroupElement) -> bool {
        if !self.parent.contains(x) {
            return false;
        }
        let m = self.parent.exponent() as u128;
        x.0.iter()
            .zip(&self.generators)
            .zip(self.parent.alphas())
            .all(|((&c, &h), &a)| (a as u128 * c as u128 % m) * h as u128 % m == 0)
    }

    /// Orthogonality checked against every element of `H`.
    pub fn is_orthogonal_exhaustive(&self, x: &GroupElement) -> bool {
        self.parent.contains(x)
            && self
                .enumerate()
                .iter()
                .all(|y| self.parent.inner_product_unchecked(&x.0, &y.0) == 0)
    }

    /// Elements of `H` in flat-index order.
    pub fn enumerate(&self) -> Vec<GroupElement> {
        let mut out = vec![self.parent.zero()];
        for (j, (&h, &n)) in self.generators.iter().zip(self.parent.moduli()).enumerate() {
            out = out
                .into_iter()
                .flat_map(|x| {
                    (0..n / h).map(move |q| {
                        let mut y = x.clone();
                        y.0[j] = q * h;
                        y
                    })
                })
                .collect();
        }
        out
    }

    /// Canonical coset label `(x_1 mod h_1, …, x_k mod h_k)`, an element of
    /// the quotient `⊕ Z_{h_j}`.
    pub fn coset_label(&self, x: &GroupElement) -> Result<GroupElement> {
        self.parent.check(x)?;
        Ok(GroupElement(
            x.0.iter().zip(&self.generators).map(|(&c, &h)| c % h).collect(),
        ))
    }

    /// `⊕ Z_{h_j}`, isomorphic to `G / H`.
    pub fn quotient_group(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(&self.generators).expect("generators are positive divisors")
    }

    /// The lexicographically smallest element of every coset. Since
    /// `0 ≤ x_j mod h_j < h_j`, these are exactly the tuples in `Π [0, h_j)`.
    pub fn coset_representatives(&self) -> Vec<GroupElement> {
        self.quotient_group().elements().collect()
    }

    /// Smallest product subgroup containing all `samples`.
    pub fn generated_by(parent: &FiniteAbelianGroup, samples: &[GroupElement]) -> Result<Self> {
        let mut acc = vec![0u64; parent.rank()];
        for s in samples {
            parent.check(s)?;
            for (a, &c) in acc.iter_mut().zip(&s.0) {
                *a = gcd(*a, c);
            }
        }
        Self::new(parent, &acc)
    }

    /// Join of `self` and the subgroup generated by `x`.
    pub fn join_element(&self, x: &GroupElement) -> Result<Self> {
        self.parent.check(x)?;
        let gens = self
            .generators
            .iter()
            .zip(&x.0)
            .zip(self.parent.moduli())
            .map(|((&h, &c), &n)| normalize_generator(gcd(h, c), n))
            .collect();
        Ok(Self::from_normalized(self.parent.clone(), gens))
    }

    pub fn is_subgroup_of(&self, other: &ProductSubgroup) -> bool {
        self.parent == other.parent
            && self
                .generators
                .iter()
                .zip(&other.generators)
                .all(|(&h, &g)| h % g == 0)
    }
}

impl fmt::Display for ProductSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.generators.iter().map(|h| format!("⟨{h}⟩")).collect();
        write!(f, "{} ≤ {}", parts.join("⊕"), self.parent)
    }
}

/// Exhaustive-scan computation of `H⊥` straight from its definition. Serves
/// as the independent oracle for [`ProductSubgroup::orthogonal`].
pub fn brute_force_orthogonal(h: &ProductSubgroup, bound: u64) -> Result<Vec<GroupElement>> {
    let g = h.parent();
    if g.order() > bound {
        return Err(Error::CapExceeded(format!(
            "|G| = {} exceeds enumeration bound {bound}",
            g.order()
        )));
    }
    let members = h.enumerate();
    Ok(g.elements()
        .filter(|x| members.iter().all(|y| g.inner_product_unchecked(&x.0, &y.0) == 0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(m: &[u64]) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(m).unwrap()
    }

    #[test]
    fn construction_examples() {
        let g = group(&[2, 4]);
        assert_eq!((g.exponent(), g.alphas(), g.order()), (4, &[2, 1][..], 8));
        let g = group(&[5]);
        assert_eq!((g.exponent(), g.alphas(), g.order()), (5, &[1][..], 5));
        let g = group(&[6, 4]);
        assert_eq!((g.exponent(), g.alphas(), g.order()), (12, &[2, 3][..], 24));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(FiniteAbelianGroup::new(&[]), Err(Error::InvalidGroup(_))));
        assert!(matches!(FiniteAbelianGroup::new(&[3, 0]), Err(Error::InvalidGroup(_))));
        assert!(matches!(
            FiniteAbelianGroup::from_signed(&[4, -2]),
            Err(Error::InvalidGroup(_))
        ));
        assert!(matches!(
            FiniteAbelianGroup::new(&[u64::MAX, u64::MAX - 1]),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn element_arithmetic() {
        let g = group(&[2, 4]);
        let x = g.element(&[1, 3]).unwrap();
        let y = g.element(&[1, 2]).unwrap();
        assert_eq!(g.add(&x, &y).unwrap().coords(), &[0, 1]);
        assert_eq!(g.neg(&g.zero()).unwrap(), g.zero());
        let z4 = group(&[4]);
        assert_eq!(z4.neg(&z4.element(&[1]).unwrap()).unwrap().coords(), &[3]);
        assert_eq!(g.sub(&x, &y).unwrap().coords(), &[0, 1]);

        let other = group(&[4]);
        assert!(matches!(
            g.add(&x, &other.zero()),
            Err(Error::GroupMismatch(_))
        ));
        assert!(g.element(&[2, 0]).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let g = group(&[2, 4]);
        let e = |c: &[u64]| g.element(c).unwrap();
        assert_eq!(g.inner_product(&e(&[1, 1]), &e(&[1, 2])).unwrap(), 0);
        assert_eq!(g.inner_product(&e(&[1, 3]), &e(&[0, 1])).unwrap(), 3);
        for x in g.elements() {
            assert_eq!(g.inner_product(&x, &g.zero()).unwrap(), 0);
        }
    }

    #[test]
    fn normalize_generator_examples() {
        assert_eq!(normalize_generator(6, 4), 2);
        assert_eq!(normalize_generator(0, 4), 4);
        assert_eq!(normalize_generator(3, 4), 1);
        assert_eq!(normalize_generator(5, 1), 1);
    }

    #[test]
    fn orthogonal_examples() {
        let z4 = group(&[4]);
        let h = ProductSubgroup::new(&z4, &[2]).unwrap();
        let hp = h.orthogonal();
        assert_eq!(hp.generators(), &[2]);
        assert_eq!(hp.enumerate(), vec![z4.element(&[0]).unwrap(), z4.element(&[2]).unwrap()]);

        let g = group(&[2, 4]);
        assert_eq!(ProductSubgroup::whole(&g).orthogonal(), ProductSubgroup::trivial(&g));
        let h = ProductSubgroup::new(&g, &[1, 2]).unwrap();
        let elems = h.orthogonal().enumerate();
        assert_eq!(elems.len(), 2);
        assert_eq!(elems[1].coords(), &[0, 2]);
    }

    #[test]
    fn orthogonality_membership() {
        let g = group(&[2, 4]);
        let h = ProductSubgroup::new(&g, &[1, 2]).unwrap();
        assert!(h.is_orthogonal(&g.element(&[0, 2]).unwrap()));
        assert!(h.is_orthogonal(&g.zero()));
        let z4 = group(&[4]);
        let h2 = ProductSubgroup::new(&z4, &[2]).unwrap();
        assert!(!h2.is_orthogonal(&z4.element(&[1]).unwrap()));
        assert!(!h2.is_orthogonal_exhaustive(&z4.element(&[1]).unwrap()));
    }

    #[test]
    fn brute_force_examples() {
        let z4 = group(&[4]);
        let h = ProductSubgroup::new(&z4, &[2]).unwrap();
        let got = brute_force_orthogonal(&h, ENUMERATION_BOUND).unwrap();
        assert_eq!(got, h.orthogonal().enumerate());

        let g = group(&[2, 4]);
        let all: Vec<_> = g.elements().collect();
        assert_eq!(
            brute_force_orthogonal(&ProductSubgroup::trivial(&g), ENUMERATION_BOUND).unwrap(),
            all
        );

        let g = group(&[2, 2]);
        let h = ProductSubgroup::new(&g, &[2, 1]).unwrap();
        let got = brute_force_orthogonal(&h, ENUMERATION_BOUND).unwrap();
        assert_eq!(got, vec![g.zero(), g.element(&[1, 0]).unwrap()]);

        assert!(matches!(
            brute_force_orthogonal(&h, 2),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn coset_representative_examples() {
        let z4 = group(&[4]);
        let reps = ProductSubgroup::new(&z4, &[2]).unwrap().coset_representatives();
        assert_eq!(reps, vec![z4.element(&[0]).unwrap(), z4.element(&[1]).unwrap()]);
        let g = group(&[2, 4]);
        assert_eq!(ProductSubgroup::whole(&g).coset_representatives(), vec![g.zero()]);
        let reps = ProductSubgroup::new(&g, &[1, 2]).unwrap().coset_representatives();
        assert_eq!(reps, vec![g.zero(), g.element(&[0, 1]).unwrap()]);
    }

    #[test]
    fn generated_by_examples() {
        let z4 = group(&[4]);
        let e = |c| z4.element(&[c]).unwrap();
        assert_eq!(ProductSubgroup::generated_by(&z4, &[e(2)]).unwrap().generators(), &[2]);
        assert_eq!(
            ProductSubgroup::generated_by(&z4, &[e(0)]).unwrap(),
            ProductSubgroup::trivial(&z4)
        );
        assert_eq!(
            ProductSubgroup::generated_by(&z4, &[]).unwrap(),
            ProductSubgroup::trivial(&z4)
        );
        let g = group(&[2, 4]);
        let s = [g.element(&[0, 2]).unwrap(), g.element(&[1, 0]).unwrap()];
        let span = ProductSubgroup::generated_by(&g, &s).unwrap();
        assert_eq!(span.generators(), &[1, 2]);
        assert_eq!(span.order(), 4);
    }

    #[test]
    fn product_subgroup_count_matches_divisor_counts() {
        let g = group(&[6, 4]);
        assert_eq!(g.product_subgroups().len(), 4 * 3);
    }

    #[test]
    fn flat_index_round_trip() {
        let g = group(&[3, 1, 4]);
        for (i, x) in g.elements().enumerate() {
            assert_eq!(g.index_of(&x).unwrap(), i);
        }
        assert!(g.element_at(12).is_err());
    }
}
