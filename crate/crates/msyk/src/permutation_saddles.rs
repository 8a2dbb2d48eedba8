//! Permutations labelling the replica saddles.
//!
//! A saddle is a pair `(τ_A, τ_Ā)` with `τ_A = ε∘τ_Ā`, where `ε` is the
//! cyclic shift `α → α+1 mod n`. Its weight depends only on the cycle
//! structure of both members, and the dominant saddles are those with the
//! maximal total cycle count `n+1`. Pairs are found by exhaustive search
//! over `S_n`; the count is checked against the Catalan number.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Largest `n` for which pairs are enumerated explicitly (8! = 40320).
pub const N_MAX_ENUM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("not a permutation: {0:?}")]
    Malformed(Vec<usize>),
    #[error("n = {n} exceeds the enumeration bound {max}")]
    TooLarge { n: usize, max: usize },
    #[error("size must be at least 1")]
    Empty,
}

/// Bijection on `{0..n}`. Serialized with 1-based images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// From 0-based images.
    pub fn new(images: Vec<usize>) -> Result<Self, PermError> {
        if images.is_empty() {
            return Err(PermError::Empty);
        }
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(PermError::Malformed(images));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    /// From 1-based images, as written in the serialized form.
    pub fn from_one_based(images: &[usize]) -> Result<Self, PermError> {
        if images.contains(&0) {
            return Err(PermError::Malformed(images.to_vec()));
        }
        Self::new(images.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { images: (0..n).collect() }
    }

    /// The shift `α → α+1 mod n`.
    pub fn epsilon(n: usize) -> Self {
        Self { images: (0..n).map(|a| (a + 1) % n).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i + 1).collect()
    }

    pub fn apply(&self, a: usize) -> usize {
        self.images[a]
    }

    /// `(self ∘ other)(α) = self(other(α))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "size mismatch in compose");
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (a, &b) in self.images.iter().enumerate() {
            inv[b] = a;
        }
        Permutation { images: inv }
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        for start in 0..self.len() {
            if !seen[start] {
                count += 1;
                let mut a = start;
                while !seen[a] {
                    seen[a] = true;
                    a = self.images[a];
                }
            }
        }
        count
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// Sign convention of a canonical cycle block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleSign {
    /// Odd length: plain cyclic shift.
    Plain,
    /// Even length: the wrap-around entry carries a minus sign.
    Signed,
}

impl CycleSign {
    pub fn for_length(len: usize) -> Self {
        if len % 2 == 1 {
            CycleSign::Plain
        } else {
            CycleSign::Signed
        }
    }
}

/// Cycles of a permutation, each listed from its smallest element, ordered
/// by descending length and then by that first element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    n: usize,
    cycles: Vec<Vec<usize>>,
}

impl CycleDecomposition {
    pub fn lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(Vec::len).collect()
    }

    pub fn signs(&self) -> Vec<CycleSign> {
        self.cycles.iter().map(|c| CycleSign::for_length(c.len())).collect()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn count(&self) -> usize {
        self.cycles.len()
    }

    pub fn reconstruct(&self) -> Permutation {
        let mut images = vec![0; self.n];
        for c in &self.cycles {
            for (k, &a) in c.iter().enumerate() {
                images[a] = c[(k + 1) % c.len()];
            }
        }
        Permutation { images }
    }
}

pub fn cycle_decompose(p: &Permutation) -> CycleDecomposition {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut c = Vec::new();
        let mut a = start;
        while !seen[a] {
            seen[a] = true;
            c.push(a);
            a = p.apply(a);
        }
        cycles.push(c);
    }
    cycles.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    CycleDecomposition { n, cycles }
}

/// `cycles(ε∘τ_Ā) + cycles(τ_Ā)`.
pub fn pair_cycle_count(tau_abar: &Permutation) -> usize {
    let eps = Permutation::epsilon(tau_abar.len());
    eps.compose(tau_abar).cycle_count() + tau_abar.cycle_count()
}

/// Saddle label. Only `τ_Ā` is stored; `τ_A` is derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationPair {
    tau_abar: Permutation,
    cycles_a: CycleDecomposition,
    cycles_abar: CycleDecomposition,
}

impl PermutationPair {
    pub fn new(tau_abar: Permutation) -> Self {
        let tau_a = Permutation::epsilon(tau_abar.len()).compose(&tau_abar);
        let cycles_a = cycle_decompose(&tau_a);
        let cycles_abar = cycle_decompose(&tau_abar);
        Self { tau_abar, cycles_a, cycles_abar }
    }

    pub fn n(&self) -> usize {
        self.tau_abar.len()
    }

    pub fn tau_abar(&self) -> &Permutation {
        &self.tau_abar
    }

    pub fn tau_a(&self) -> Permutation {
        Permutation::epsilon(self.n()).compose(&self.tau_abar)
    }

    pub fn cycles_a(&self) -> &CycleDecomposition {
        &self.cycles_a
    }

    pub fn cycles_abar(&self) -> &CycleDecomposition {
        &self.cycles_abar
    }

    pub fn m_cyc(&self) -> usize {
        self.cycles_a.count() + self.cycles_abar.count()
    }

    /// Cycle lengths of both members, `A` first.
    pub fn all_cycle_lengths(&self) -> Vec<usize> {
        let mut v = self.cycles_a.lengths();
        v.extend(self.cycles_abar.lengths());
        v
    }

    pub fn is_cyclic_symmetric(&self) -> bool {
        self.tau_abar == Permutation::identity(self.n())
    }
}

#[derive(Serialize)]
struct PairRecord<'a> {
    n: usize,
    tau_abar: &'a Permutation,
    #[serde(rename = "cycles_A")]
    cycles_a: Vec<usize>,
    #[serde(rename = "cycles_Abar")]
    cycles_abar: Vec<usize>,
}

impl Serialize for PermutationPair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PairRecord {
            n: self.n(),
            tau_abar: &self.tau_abar,
            cycles_a: self.cycles_a.lengths(),
            cycles_abar: self.cycles_abar.lengths(),
        }
        .serialize(s)
    }
}

/// Advances to the next permutation in lexicographic order.
fn next_lex(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Calls `f` on every permutation of size `n` in lexicographic order.
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&Permutation)) {
    let mut p = Permutation::identity(n);
    loop {
        f(&p);
        if !next_lex(&mut p.images) {
            break;
        }
    }
}

/// All pairs with `m_cyc = n+1`, in lexicographic order of `τ_Ā`.
pub fn enumerate_maximal_pairs(n: usize) -> Result<Vec<PermutationPair>, PermError> {
    if n == 0 {
        return Err(PermError::Empty);
    }
    if n > N_MAX_ENUM {
        return Err(PermError::TooLarge { n, max: N_MAX_ENUM });
    }
    let mut out = Vec::new();
    for_each_permutation(n, |p| {
        if pair_cycle_count(p) == n + 1 {
            out.push(PermutationPair::new(p.clone()));
        }
    });
    Ok(out)
}

pub fn catalan(n: u64) -> BigUint {
    // C_n = prod_{k=2..n} (n+k)/k, accumulated exactly.
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for k in 2..=n {
        num *= n + k;
        den *= k;
    }
    num / den
}

/// Canonical signed cycle matrix of the given length.
pub fn canonical_cycle(length: usize) -> Result<DMatrix<f64>, PermError> {
    if length == 0 {
        return Err(PermError::Empty);
    }
    let mut m = DMatrix::zeros(length, length);
    for a in 0..length {
        let b = (a + 1) % length;
        m[(a, b)] = if length.is_multiple_of(2) && b < a { -1.0 } else { 1.0 };
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(v: &[usize]) -> Permutation {
        Permutation::from_one_based(v).unwrap()
    }

    #[test]
    fn decomposition_examples() {
        assert_eq!(cycle_decompose(&Permutation::identity(3)).lengths(), vec![1, 1, 1]);
        assert_eq!(cycle_decompose(&Permutation::epsilon(3)).lengths(), vec![3]);
        let d = cycle_decompose(&p1(&[2, 1, 3]));
        assert_eq!(d.lengths(), vec![2, 1]);
        assert_eq!(d.signs(), vec![CycleSign::Signed, CycleSign::Plain]);
        assert_eq!(d.reconstruct(), p1(&[2, 1, 3]));
    }

    #[test]
    fn pair_counts_small() {
        assert_eq!(pair_cycle_count(&Permutation::identity(2)), 3);
        assert_eq!(pair_cycle_count(&Permutation::epsilon(2)), 3);
        // ε∘(1 2) on three elements: 1→2→3, 2→1→2, 3→3→1, i.e. (1 3)(2).
        assert_eq!(pair_cycle_count(&p1(&[2, 1, 3])), 2 + 2);
    }

    #[test]
    fn catalan_values() {
        let expect = [1u32, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(catalan(n as u64), BigUint::from(c));
        }
        assert_eq!(catalan(30).to_string(), "3814986502092304");
    }

    #[test]
    fn small_enumerations() {
        let one = enumerate_maximal_pairs(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].tau_a(), Permutation::identity(1));
        assert_eq!(enumerate_maximal_pairs(2).unwrap().len(), 2);
        assert_eq!(enumerate_maximal_pairs(3).unwrap().len(), 5);
        assert!(matches!(enumerate_maximal_pairs(9), Err(PermError::TooLarge { .. })));
    }

    #[test]
    fn canonical_blocks() {
        assert_eq!(canonical_cycle(1).unwrap()[(0, 0)], 1.0);
        let c2 = canonical_cycle(2).unwrap();
        assert_eq!(c2, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let c3 = canonical_cycle(3).unwrap();
        assert_eq!(c3[(2, 0)], 1.0);
        assert!(canonical_cycle(0).is_err());
    }

    #[test]
    fn pair_json_shape() {
        let pairs = enumerate_maximal_pairs(2).unwrap();
        let v = serde_json::to_value(&pairs[0]).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["tau_abar"], serde_json::json!([1, 2]));
        assert_eq!(v["cycles_A"], serde_json::json!([2]));
        assert_eq!(v["cycles_Abar"], serde_json::json!([1, 1]));
    }

    #[test]
    fn malformed_rejected() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(Permutation::new(vec![]).is_err());
    }
}
