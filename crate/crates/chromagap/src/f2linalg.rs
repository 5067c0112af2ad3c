//! Linear algebra over F₂: bit vectors, canonical subspaces and linear
//! functionals with their forced extensions.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Vector {
    n: usize,
    words: Vec<u64>,
}

impl F2Vector {
    pub fn zero(n: usize) -> Self {
        F2Vector { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = F2Vector::zero(n);
        v.set(i, true);
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = F2Vector::zero(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn from_support(n: usize, support: &[usize]) -> Self {
        let mut v = F2Vector::zero(n);
        for &i in support {
            v.flip(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        assert!(i < self.n, "coordinate {i} outside ambient {}", self.n);
        if b {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.n, "coordinate {i} outside ambient {}", self.n);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn add_assign(&mut self, other: &F2Vector) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn add(&self, other: &F2Vector) -> F2Vector {
        let mut v = self.clone();
        v.add_assign(other);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the first nonzero coordinate.
    pub fn leading(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i)).collect()
    }

    pub fn dot(&self, other: &F2Vector) -> bool {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones()).sum::<u32>() % 2 == 1
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.n).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Invalid(format!("bad bit `{c}`"))),
            })
            .collect::<Result<_>>()?;
        Ok(F2Vector::from_bits(&bits))
    }
}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bitstring())
    }
}

/// Lexicographic on the bit string, coordinate 0 first.
impl Ord for F2Vector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| {
            for (a, b) in self.words.iter().zip(&other.words) {
                if a != b {
                    let low = (a ^ b).trailing_zeros();
                    return if a >> low & 1 == 1 { Ordering::Greater } else { Ordering::Less };
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for F2Vector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for F2Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for F2Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        F2Vector::from_bitstring(&s).map_err(serde::de::Error::custom)
    }
}

/// A subspace held by its reduced row echelon basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct F2Subspace {
    n: usize,
    basis: Vec<F2Vector>,
}

impl F2Subspace {
    pub fn zero(n: usize) -> Self {
        F2Subspace { n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        F2Subspace { n, basis: (0..n).map(|i| F2Vector::unit(n, i)).collect() }
    }

    pub fn span(n: usize, vectors: &[F2Vector]) -> Result<Self> {
        let mut rows = Vec::new();
        for v in vectors {
            if v.len() != n {
                return Err(Error::AmbientMismatch(n, v.len()));
            }
            rows.push(v.clone());
        }
        Ok(F2Subspace { n, basis: rref(rows) })
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[F2Vector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|b| b.leading().unwrap()).collect()
    }

    /// Coordinates of `v` in the canonical basis, if `v` lies in the subspace.
    pub fn coordinates(&self, v: &F2Vector) -> Option<Vec<bool>> {
        if v.len() != self.n {
            return None;
        }
        let mut rest = v.clone();
        let mut coords = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            let c = v.get(b.leading().unwrap());
            if c {
                rest.add_assign(b);
            }
            coords.push(c);
        }
        rest.is_zero().then_some(coords)
    }

    pub fn contains(&self, v: &F2Vector) -> bool {
        self.coordinates(v).is_some()
    }

    fn same_ambient(&self, other: &F2Subspace) -> Result<()> {
        if self.n != other.n {
            return Err(Error::AmbientMismatch(self.n, other.n));
        }
        Ok(())
    }

    pub fn sum(&self, other: &F2Subspace) -> Result<F2Subspace> {
        self.same_ambient(other)?;
        let rows = self.basis.iter().chain(&other.basis).cloned().collect();
        Ok(F2Subspace { n: self.n, basis: rref(rows) })
    }

    /// Zassenhaus: reduce `[u|u]` and `[v|0]`; rows with empty left half span the meet.
    pub fn intersect(&self, other: &F2Subspace) -> Result<F2Subspace> {
        self.same_ambient(other)?;
        let n = self.n;
        let mut rows = Vec::new();
        for u in &self.basis {
            let mut r = F2Vector::zero(2 * n);
            for i in u.support() {
                r.set(i, true);
                r.set(n + i, true);
            }
            rows.push(r);
        }
        for v in &other.basis {
            let mut r = F2Vector::zero(2 * n);
            for i in v.support() {
                r.set(i, true);
            }
            rows.push(r);
        }
        let meet: Vec<F2Vector> = rref(rows)
            .into_iter()
            .filter(|r| r.leading().is_some_and(|p| p >= n))
            .map(|r| F2Vector::from_bits(&(n..2 * n).map(|i| r.get(i)).collect::<Vec<_>>()))
            .collect();
        F2Subspace::span(n, &meet)
    }

    pub fn is_subspace_of(&self, other: &F2Subspace) -> bool {
        self.n == other.n && self.basis.iter().all(|b| other.contains(b))
    }

    /// All `2^dim` members, in order of their coordinate masks.
    pub fn elements(&self) -> Vec<F2Vector> {
        assert!(self.dim() < 32, "too many elements to list");
        (0u64..1 << self.dim())
            .map(|m| {
                let mut v = F2Vector::zero(self.n);
                for (i, b) in self.basis.iter().enumerate() {
                    if m >> i & 1 == 1 {
                        v.add_assign(b);
                    }
                }
                v
            })
            .collect()
    }
}

fn rref(mut rows: Vec<F2Vector>) -> Vec<F2Vector> {
    let mut out: Vec<F2Vector> = Vec::new();
    for mut r in rows.drain(..) {
        for b in &out {
            if r.get(b.leading().unwrap()) {
                r.add_assign(b);
            }
        }
        if let Some(p) = r.leading() {
            for b in out.iter_mut() {
                if b.get(p) {
                    b.add_assign(&r);
                }
            }
            out.push(r);
        }
    }
    out.sort_by_key(|b| b.leading().unwrap());
    out
}

/// Every `ℓ`-dimensional subspace of `restriction` meeting `avoid` only in zero,
/// sorted canonically.
pub fn enumerate_subspaces(restriction: &F2Subspace, l: usize, avoid: &F2Subspace) -> Result<Vec<F2Subspace>> {
    restriction.same_ambient(avoid)?;
    let r = restriction.dim();
    if l > r {
        return Ok(Vec::new());
    }
    let n = restriction.ambient();
    let mut out = Vec::new();
    // RREF ℓ×r coefficient matrices: choose pivots, then fill the free entries
    for pivots in choose(r, l) {
        let free: Vec<(usize, usize)> = (0..l)
            .flat_map(|i| ((pivots[i] + 1)..r).filter(|j| !pivots.contains(j)).map(move |j| (i, j)))
            .collect();
        assert!(free.len() < 63);
        for mask in 0u64..1 << free.len() {
            let mut coeffs = vec![vec![false; r]; l];
            for (i, &p) in pivots.iter().enumerate() {
                coeffs[i][p] = true;
            }
            for (k, &(i, j)) in free.iter().enumerate() {
                coeffs[i][j] = mask >> k & 1 == 1;
            }
            let vecs: Vec<F2Vector> = coeffs
                .iter()
                .map(|row| {
                    let mut v = F2Vector::zero(n);
                    for (j, &c) in row.iter().enumerate() {
                        if c {
                            v.add_assign(&restriction.basis[j]);
                        }
                    }
                    v
                })
                .collect();
            let s = F2Subspace::span(n, &vecs)?;
            if s.sum(avoid)?.dim() == l + avoid.dim() {
                out.push(s);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// A linear map to F₂ given by its values on the canonical basis of its domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct F2Functional {
    domain: F2Subspace,
    values: Vec<bool>,
}

impl F2Functional {
    pub fn new(domain: F2Subspace, values: Vec<bool>) -> Result<Self> {
        if values.len() != domain.dim() {
            return Err(Error::Invalid("one value per basis vector expected".into()));
        }
        Ok(F2Functional { domain, values })
    }

    /// The unique functional on `span(pairs)` taking the prescribed values.
    pub fn from_values(n: usize, pairs: &[(F2Vector, bool)]) -> Result<Self> {
        let mut el = Eliminator::new(n);
        for (v, b) in pairs {
            el.insert(v, *b)?;
        }
        el.into_functional()
    }

    pub fn domain(&self) -> &F2Subspace {
        &self.domain
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn eval(&self, v: &F2Vector) -> Result<bool> {
        let coords = self
            .domain
            .coordinates(v)
            .ok_or_else(|| Error::Invalid(format!("{v:?} is outside the functional's domain")))?;
        Ok(coords.iter().zip(&self.values).fold(false, |acc, (&c, &x)| acc ^ (c & x)))
    }

    /// Whether `ψ(v) = b` for every listed pair whose vector lies in the domain.
    pub fn respects(&self, eqs: &[(F2Vector, bool)]) -> bool {
        eqs.iter().all(|(v, b)| !self.domain.contains(v) || self.eval(v).unwrap() == *b)
    }
}

/// Incremental Gaussian elimination on `(vector, value)` pairs.
struct Eliminator {
    n: usize,
    rows: Vec<(F2Vector, bool)>,
}

impl Eliminator {
    fn new(n: usize) -> Self {
        Eliminator { n, rows: Vec::new() }
    }

    fn reduce(&self, v: &F2Vector, b: bool) -> (F2Vector, bool) {
        let (mut v, mut b) = (v.clone(), b);
        for (r, rb) in &self.rows {
            if v.get(r.leading().unwrap()) {
                v.add_assign(r);
                b ^= rb;
            }
        }
        (v, b)
    }

    fn insert(&mut self, v: &F2Vector, b: bool) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::AmbientMismatch(self.n, v.len()));
        }
        let (r, rb) = self.reduce(v, b);
        match r.leading() {
            None if rb => Err(Error::ExtensionConflict(format!("{v:?} is forced to both values"))),
            None => Ok(()),
            Some(p) => {
                for (row, bit) in self.rows.iter_mut() {
                    if row.get(p) {
                        row.add_assign(&r);
                        *bit ^= rb;
                    }
                }
                self.rows.push((r, rb));
                Ok(())
            }
        }
    }

    fn into_functional(self) -> Result<F2Functional> {
        let vs: Vec<F2Vector> = self.rows.iter().map(|r| r.0.clone()).collect();
        let domain = F2Subspace::span(self.n, &vs)?;
        let values = domain
            .basis()
            .iter()
            .map(|b| {
                let (rest, val) = self.reduce(b, false);
                debug_assert!(rest.is_zero());
                val
            })
            .collect();
        F2Functional::new(domain, values)
    }
}

/// Extends `ψ`, which must respect the equations `u`, to `dom ψ + span(w)` so
/// that it also respects `w`.
pub fn extend_functional(
    psi: &F2Functional,
    u: &[(F2Vector, bool)],
    w: &[(F2Vector, bool)],
) -> Result<F2Functional> {
    let n = psi.domain.ambient();
    for (v, b) in u {
        if v.len() != n {
            return Err(Error::AmbientMismatch(n, v.len()));
        }
        if psi.domain.contains(v) && psi.eval(v)? != *b {
            return Err(Error::RespectViolation(format!("ψ({v:?}) ≠ {}", *b as u8)));
        }
    }
    let mut el = Eliminator::new(n);
    for (b, &val) in psi.domain.basis().iter().zip(&psi.values) {
        el.insert(b, val)?;
    }
    for (v, b) in w {
        el.insert(v, *b)?;
    }
    el.into_functional()
}
