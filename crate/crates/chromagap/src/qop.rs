//! Exact projector algebra over the Gaussian rationals and verification of
//! perfect locally compatible quantum assignments.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{classify_label_cover, to_structures, CspInstance};
use crate::error::{Error, Result};
use crate::relstruct::{bfs, gaifman_adjacency, Homomorphism, RelStructure};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    pub re: Rational64,
    pub im: Rational64,
}

impl ExactScalar {
    pub const fn new(re: Rational64, im: Rational64) -> Self {
        ExactScalar { re, im }
    }

    pub fn real(n: i64, d: i64) -> Self {
        ExactScalar { re: Rational64::new(n, d), im: Rational64::zero() }
    }

    pub fn i() -> Self {
        ExactScalar { re: Rational64::zero(), im: Rational64::one() }
    }

    pub fn zero() -> Self {
        ExactScalar::default()
    }

    pub fn one() -> Self {
        ExactScalar::real(1, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(self) -> Self {
        ExactScalar { re: self.re, im: -self.im }
    }

    pub fn to_strings(&self) -> [String; 2] {
        [self.re.to_string(), self.im.to_string()]
    }

    pub fn parse(re: &str, im: &str) -> Result<Self> {
        let p = |s: &str| -> Result<Rational64> {
            s.trim().parse::<Rational64>().map_err(|_| Error::Invalid(format!("bad rational `{s}`")))
        };
        Ok(ExactScalar { re: p(re)?, im: p(im)? })
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl Add for ExactScalar {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ExactScalar { re: self.re + o.re, im: self.im + o.im }
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, o: Self) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl Sub for ExactScalar {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ExactScalar { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for ExactScalar {
    type Output = Self;
    fn neg(self) -> Self {
        ExactScalar { re: -self.re, im: -self.im }
    }
}

impl Mul for ExactScalar {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return ExactScalar::zero();
        }
        ExactScalar { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PMatrix {
    dim: usize,
    e: Vec<ExactScalar>,
}

impl fmt::Debug for PMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[ExactScalar]> = self.e.chunks(self.dim).collect();
        write!(f, "{rows:?}")
    }
}

impl PMatrix {
    pub fn zero(dim: usize) -> Self {
        PMatrix { dim, e: vec![ExactScalar::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        PMatrix::diagonal(&vec![ExactScalar::one(); dim])
    }

    pub fn diagonal(d: &[ExactScalar]) -> Self {
        let mut m = PMatrix::zero(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.e[i * d.len() + i] = v;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<ExactScalar>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimMismatch("matrix rows must form a nonempty square".into()));
        }
        Ok(PMatrix { dim, e: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> ExactScalar {
        self.e[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<ExactScalar>> {
        self.e.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(ExactScalar::is_zero)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = PMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.e[j * n + i] = self.e[i * n + j].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut m = PMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.e[j * n + i] = self.e[i * n + j];
            }
        }
        m
    }

    pub fn conjugate(&self) -> Self {
        PMatrix { dim: self.dim, e: self.e.iter().map(|s| s.conj()).collect() }
    }

    pub fn scale(&self, s: ExactScalar) -> Self {
        PMatrix { dim: self.dim, e: self.e.iter().map(|&v| v * s).collect() }
    }

    pub fn trace(&self) -> ExactScalar {
        (0..self.dim).fold(ExactScalar::zero(), |acc, i| acc + self.e[i * self.dim + i])
    }

    pub fn mul(&self, o: &PMatrix) -> PMatrix {
        assert_eq!(self.dim, o.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut m = PMatrix::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.e[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = o.e[k * n + j];
                    if !b.is_zero() {
                        m.e[i * n + j] += a * b;
                    }
                }
            }
        }
        m
    }

    pub fn add(&self, o: &PMatrix) -> PMatrix {
        assert_eq!(self.dim, o.dim, "dimension mismatch in sum");
        PMatrix { dim: self.dim, e: self.e.iter().zip(&o.e).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, o: &PMatrix) -> PMatrix {
        assert_eq!(self.dim, o.dim, "dimension mismatch in difference");
        PMatrix { dim: self.dim, e: self.e.iter().zip(&o.e).map(|(&a, &b)| a - b).collect() }
    }

    pub fn kron(&self, o: &PMatrix) -> PMatrix {
        let (n, m) = (self.dim, o.dim);
        let mut r = PMatrix::zero(n * m);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        r.e[(i * m + k) * n * m + j * m + l] = self.get(i, j) * o.get(k, l);
                    }
                }
            }
        }
        r
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    pub fn is_idempotent(&self) -> bool {
        self.mul(self) == *self
    }

    pub fn is_projector(&self) -> bool {
        self.is_hermitian() && self.is_idempotent()
    }

    pub fn commutes_with(&self, o: &PMatrix) -> bool {
        self.mul(o) == o.mul(self)
    }

    pub fn product<'a>(dim: usize, ms: impl IntoIterator<Item = &'a PMatrix>) -> PMatrix {
        let mut acc: Option<PMatrix> = None;
        for m in ms {
            acc = Some(match acc {
                None => m.clone(),
                Some(a) => a.mul(m),
            });
            if acc.as_ref().unwrap().is_zero() {
                return PMatrix::zero(dim);
            }
        }
        acc.unwrap_or_else(|| PMatrix::identity(dim))
    }

    pub fn sum<'a>(dim: usize, ms: impl IntoIterator<Item = &'a PMatrix>) -> PMatrix {
        ms.into_iter().fold(PMatrix::zero(dim), |acc, m| acc.add(m))
    }

    fn to_json(&self) -> Vec<Vec<[String; 2]>> {
        self.e.chunks(self.dim).map(|r| r.iter().map(|s| s.to_strings()).collect()).collect()
    }

    fn from_json(rows: &[Vec<[String; 2]>]) -> Result<Self> {
        let rows: Vec<Vec<ExactScalar>> = rows
            .iter()
            .map(|r| r.iter().map(|[a, b]| ExactScalar::parse(a, b)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        PMatrix::from_rows(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PvmReport {
    pub hermitian: bool,
    pub idempotent: bool,
    pub orthogonal: bool,
    pub complete: bool,
}

impl PvmReport {
    pub fn passed(&self) -> bool {
        self.hermitian && self.idempotent && self.orthogonal && self.complete
    }
}

pub fn verify_pvm(family: &[PMatrix]) -> Result<PvmReport> {
    let Some(dim) = family.first().map(PMatrix::dim) else {
        return Ok(PvmReport { hermitian: true, idempotent: true, orthogonal: true, complete: false });
    };
    if family.iter().any(|m| m.dim() != dim) {
        return Err(Error::DimMismatch("PVM members differ in dimension".into()));
    }
    let orthogonal = (0..family.len())
        .all(|i| (0..family.len()).all(|j| i == j || family[i].mul(&family[j]).is_zero()));
    Ok(PvmReport {
        hermitian: family.iter().all(PMatrix::is_hermitian),
        idempotent: family.iter().all(PMatrix::is_idempotent),
        orthogonal,
        complete: PMatrix::sum(dim, family) == PMatrix::identity(dim),
    })
}

/// Per-variable PVMs; absent labels stand for the zero projector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumAssignment {
    pub dim: usize,
    pub k: usize,
    pvms: BTreeMap<String, BTreeMap<String, PMatrix>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentJson {
    pub dim: usize,
    pub k: usize,
    pub pvms: BTreeMap<String, BTreeMap<String, Vec<Vec<[String; 2]>>>>,
}

impl QuantumAssignment {
    pub fn new(dim: usize, k: usize) -> Self {
        QuantumAssignment { dim, k, pvms: BTreeMap::new() }
    }

    /// Stores `m` unless it is zero; registers the variable either way.
    pub fn insert(&mut self, x: &str, y: &str, m: PMatrix) {
        assert_eq!(m.dim(), self.dim, "projector dimension differs from the assignment");
        let pvm = self.pvms.entry(x.to_string()).or_default();
        if m.is_zero() {
            pvm.remove(y);
        } else {
            pvm.insert(y.to_string(), m);
        }
    }

    pub fn ensure_variable(&mut self, x: &str) {
        self.pvms.entry(x.to_string()).or_default();
    }

    pub fn get(&self, x: &str, y: &str) -> Option<&PMatrix> {
        self.pvms.get(x).and_then(|p| p.get(y))
    }

    /// The projector, materialising zero for absent labels.
    pub fn projector(&self, x: &str, y: &str) -> PMatrix {
        self.get(x, y).cloned().unwrap_or_else(|| PMatrix::zero(self.dim))
    }

    pub fn pvm(&self, x: &str) -> Option<&BTreeMap<String, PMatrix>> {
        self.pvms.get(x)
    }

    pub fn variables(&self) -> impl Iterator<Item = &String> {
        self.pvms.keys()
    }

    pub fn len(&self) -> usize {
        self.pvms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvms.is_empty()
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn to_json(&self) -> AssignmentJson {
        AssignmentJson {
            dim: self.dim,
            k: self.k,
            pvms: self
                .pvms
                .iter()
                .map(|(x, p)| (x.clone(), p.iter().map(|(y, m)| (y.clone(), m.to_json())).collect()))
                .collect(),
        }
    }

    pub fn from_json(j: &AssignmentJson) -> Result<Self> {
        let mut q = QuantumAssignment::new(j.dim, j.k);
        for (x, p) in &j.pvms {
            q.pvms.entry(x.clone()).or_default();
            for (y, rows) in p {
                let m = PMatrix::from_json(rows)?;
                if m.dim() != j.dim {
                    return Err(Error::DimMismatch(format!("projector ({x},{y}) has dim {}", m.dim())));
                }
                q.insert(x, y, m);
            }
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Check only this many randomly drawn constraint tuples and close pairs.
    pub sample: Option<usize>,
    pub seed: u64,
    pub max_witnesses: usize,
}

impl VerifyOptions {
    pub fn full() -> Self {
        VerifyOptions { sample: None, seed: 0, max_witnesses: 16 }
    }

    pub fn sampled(n: usize, seed: u64) -> Self {
        VerifyOptions { sample: Some(n), seed, max_witnesses: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductViolation {
    pub symbol: String,
    pub vars: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutationViolation {
    pub vars: (String, String),
    pub labels: (String, String),
    pub distance: usize,
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub pvm_failures: Vec<(String, PvmReport)>,
    pub product_violations: Vec<ProductViolation>,
    pub product_violation_count: u64,
    pub commutation_violations: Vec<CommutationViolation>,
    pub commutation_violation_count: u64,
    pub product_checks: u64,
    pub commutation_checks: u64,
    pub sampled: bool,
    pub k: usize,
    pub dim: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.pvm_failures.is_empty() && self.product_violation_count == 0 && self.commutation_violation_count == 0
    }

    pub fn perfect(&self) -> bool {
        self.pvm_failures.is_empty() && self.product_violation_count == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "dim {} k {}: {} PVM failures, {}/{} product violations, {}/{} commutation violations{}",
            self.dim,
            self.k,
            self.pvm_failures.len(),
            self.product_violation_count,
            self.product_checks,
            self.commutation_violation_count,
            self.commutation_checks,
            if self.sampled { " (sampled)" } else { "" }
        )
    }
}

/// Deduplicates matrices so that repeated exact checks are memoised by id.
#[derive(Default)]
struct Interner {
    mats: Vec<PMatrix>,
    ids: HashMap<PMatrix, u32>,
}

impl Interner {
    fn intern(&mut self, m: &PMatrix) -> u32 {
        if let Some(&id) = self.ids.get(m) {
            return id;
        }
        let id = self.mats.len() as u32;
        self.mats.push(m.clone());
        self.ids.insert(m.clone(), id);
        id
    }
}

/// Nonzero projectors of each `X` variable as `(label index in Y, matrix id)`.
fn tabulate(x: &RelStructure, y: &RelStructure, q: &QuantumAssignment, int: &mut Interner) -> Result<Vec<Vec<(u32, u32)>>> {
    let mut table = vec![Vec::new(); x.len()];
    for (name, pvm) in &q.pvms {
        let v = x.vertex(name).map_err(|_| Error::KeyMismatch(format!("`{name}` is not a variable")))?;
        for (label, m) in pvm {
            let a = y.vertex(label).map_err(|_| Error::KeyMismatch(format!("`{label}` is not a label")))?;
            if m.dim() != q.dim {
                return Err(Error::DimMismatch(format!("projector ({name},{label})")));
            }
            table[v as usize].push((a, int.intern(m)));
        }
    }
    for v in 0..x.len() as u32 {
        if !q.pvms.contains_key(x.name(v)) {
            return Err(Error::KeyMismatch(format!("no PVM for `{}`", x.name(v))));
        }
    }
    Ok(table)
}

pub fn verify_assignment(x: &RelStructure, y: &RelStructure, q: &QuantumAssignment, k: usize) -> Result<VerificationReport> {
    verify_assignment_with(x, y, q, k, &VerifyOptions::full())
}

pub fn verify_assignment_with(
    x: &RelStructure,
    y: &RelStructure,
    q: &QuantumAssignment,
    k: usize,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if x.signature() != y.signature() {
        return Err(Error::SignatureMismatch("assignment structures disagree".into()));
    }
    let mut int = Interner::default();
    let table = tabulate(x, y, q, &mut int)?;
    let mut rep = VerificationReport { sampled: opts.sample.is_some(), k, dim: q.dim, ..Default::default() };
    let max_w = if opts.max_witnesses == 0 { 16 } else { opts.max_witnesses };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut pvm_memo: HashMap<Vec<u32>, PvmReport> = HashMap::new();
    for v in 0..x.len() {
        let mut ids: Vec<u32> = table[v].iter().map(|p| p.1).collect();
        ids.sort_unstable();
        let r = match pvm_memo.get(&ids) {
            Some(r) => *r,
            None => {
                let fam: Vec<PMatrix> = ids.iter().map(|&i| int.mats[i as usize].clone()).collect();
                let r = if fam.is_empty() {
                    PvmReport { hermitian: true, idempotent: true, orthogonal: true, complete: false }
                } else {
                    verify_pvm(&fam)?
                };
                pvm_memo.insert(ids, r);
                r
            }
        };
        if !r.passed() {
            rep.pvm_failures.push((x.name(v as u32).to_string(), r));
        }
    }

    // forbidden products
    let mut zero2: HashMap<(u32, u32), bool> = HashMap::new();
    let mut zero_n: HashMap<Vec<u32>, bool> = HashMap::new();
    let total: usize = x.relations().iter().map(|r| r.len()).sum();
    let picks: Vec<(usize, usize)> = match opts.sample {
        None => (0..x.relations().len()).flat_map(|r| (0..x.relation(r).len()).map(move |i| (r, i))).collect(),
        Some(s) if total > 0 => (0..s)
            .map(|_| {
                let mut g = rng.gen_range(0..total);
                let mut r = 0;
                while g >= x.relation(r).len() {
                    g -= x.relation(r).len();
                    r += 1;
                }
                (r, g)
            })
            .collect(),
        Some(_) => Vec::new(),
    };
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (r, i) in picks {
        let t = x.relation(r).tuple(i);
        let ry = y.relation(r);
        let lists: Vec<&Vec<(u32, u32)>> = t.iter().map(|&v| &table[v as usize]).collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; t.len()];
        loop {
            labels.clear();
            ids.clear();
            for (p, l) in lists.iter().enumerate() {
                labels.push(l[idx[p]].0);
                ids.push(l[idx[p]].1);
            }
            if !ry.contains(&labels) {
                rep.product_checks += 1;
                let zero = if ids.len() == 2 {
                    *zero2
                        .entry((ids[0], ids[1]))
                        .or_insert_with(|| int.mats[ids[0] as usize].mul(&int.mats[ids[1] as usize]).is_zero())
                } else {
                    match zero_n.get(&ids) {
                        Some(&z) => z,
                        None => {
                            let z = PMatrix::product(q.dim, ids.iter().map(|&i| &int.mats[i as usize])).is_zero();
                            zero_n.insert(ids.clone(), z);
                            z
                        }
                    }
                };
                if !zero {
                    rep.product_violation_count += 1;
                    if rep.product_violations.len() < max_w {
                        rep.product_violations.push(ProductViolation {
                            symbol: x.signature().symbols()[r].name.clone(),
                            vars: t.iter().map(|&v| x.name(v).to_string()).collect(),
                            labels: labels.iter().map(|&a| y.name(a).to_string()).collect(),
                        });
                    }
                }
            }
            let mut p = 0;
            loop {
                if p == idx.len() {
                    break;
                }
                idx[p] += 1;
                if idx[p] < lists[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == idx.len() {
                break;
            }
        }
    }

    // commutation within distance k
    if k > 0 {
        let adj = gaifman_adjacency(x);
        let mut comm: HashMap<(u32, u32), bool> = HashMap::new();
        let mut check_pair = |u: u32, v: u32, d: usize, rep: &mut VerificationReport| {
            for &(a, ia) in &table[u as usize] {
                for &(b, ib) in &table[v as usize] {
                    rep.commutation_checks += 1;
                    let key = if ia <= ib { (ia, ib) } else { (ib, ia) };
                    let ok = *comm
                        .entry(key)
                        .or_insert_with(|| int.mats[ia as usize].commutes_with(&int.mats[ib as usize]));
                    if !ok {
                        rep.commutation_violation_count += 1;
                        if rep.commutation_violations.len() < max_w {
                            rep.commutation_violations.push(CommutationViolation {
                                vars: (x.name(u).to_string(), x.name(v).to_string()),
                                labels: (y.name(a).to_string(), y.name(b).to_string()),
                                distance: d,
                            });
                        }
                    }
                }
            }
        };
        match opts.sample {
            None => {
                for u in 0..x.len() as u32 {
                    let dist = bfs(&adj, u, Some(k));
                    for v in u + 1..x.len() as u32 {
                        if let Some(d) = dist[v as usize] {
                            if d <= k {
                                check_pair(u, v, d, &mut rep);
                            }
                        }
                    }
                }
            }
            Some(s) if !x.is_empty() => {
                for _ in 0..s {
                    let u = rng.gen_range(0..x.len() as u32);
                    let dist = bfs(&adj, u, Some(k));
                    let near: Vec<(u32, usize)> = dist
                        .iter()
                        .enumerate()
                        .filter_map(|(v, d)| d.filter(|&d| d > 0 && d <= k).map(|d| (v as u32, d)))
                        .collect();
                    if !near.is_empty() {
                        let (v, d) = near[rng.gen_range(0..near.len())];
                        check_pair(u, v, d, &mut rep);
                    }
                }
            }
            Some(_) => {}
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QsatValue {
    Real(BigRational),
    /// Some trace had a nonzero imaginary part.
    NonReal { re: BigRational, im: BigRational },
}

impl QsatValue {
    pub fn real(&self) -> Option<&BigRational> {
        match self {
            QsatValue::Real(r) => Some(r),
            QsatValue::NonReal { .. } => None,
        }
    }
}

fn big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// `(1/dim) Σ_c π(c) Σ_{a⃗ allowed} tr(Q_{x₁,a₁}⋯Q_{x_r,a_r})`.
pub fn qsat(phi: &CspInstance, q: &QuantumAssignment) -> Result<QsatValue> {
    let (x, a) = to_structures(phi);
    let mut int = Interner::default();
    let table = tabulate(&x, &a, q, &mut int)?;
    let mut re = BigRational::zero();
    let mut im = BigRational::zero();
    let mut nonreal = false;
    let mut memo: HashMap<Vec<u32>, ExactScalar> = HashMap::new();
    for c in phi.constraints() {
        let lists: Vec<&Vec<(u32, u32)>> = c.scope.iter().map(|&v| &table[v as usize]).collect();
        let mut tr_re = BigRational::zero();
        let mut tr_im = BigRational::zero();
        if lists.iter().all(|l| !l.is_empty()) {
            let mut idx = vec![0usize; lists.len()];
            'outer: loop {
                let labels: Vec<u32> = idx.iter().zip(&lists).map(|(&i, l)| l[i].0).collect();
                if c.predicate.contains(&labels) {
                    let ids: Vec<u32> = idx.iter().zip(&lists).map(|(&i, l)| l[i].1).collect();
                    let t = *memo.entry(ids.clone()).or_insert_with(|| {
                        PMatrix::product(q.dim, ids.iter().map(|&i| &int.mats[i as usize])).trace()
                    });
                    tr_re += big(t.re);
                    tr_im += big(t.im);
                }
                for p in 0..idx.len() {
                    idx[p] += 1;
                    if idx[p] < lists[p].len() {
                        continue 'outer;
                    }
                    idx[p] = 0;
                }
                break;
            }
        } else if c.scope.is_empty() && c.predicate.contains(&[]) {
            tr_re = BigRational::from_integer(BigInt::from(q.dim));
        }
        if !tr_im.is_zero() {
            nonreal = true;
        }
        re += &c.weight * tr_re;
        im += &c.weight * tr_im;
    }
    let d = BigRational::from_integer(BigInt::from(q.dim));
    re /= &d;
    im /= &d;
    Ok(if nonreal || !im.is_zero() { QsatValue::NonReal { re, im } } else { QsatValue::Real(re) })
}

/// Dimension one; declared compatible up to `|X|`, beyond every finite distance.
pub fn lift_classical(f: &Homomorphism, x: &RelStructure, y: &RelStructure) -> QuantumAssignment {
    let mut q = QuantumAssignment::new(1, x.len());
    let one = PMatrix::identity(1);
    for (v, &img) in f.map.iter().enumerate() {
        q.insert(x.name(v as u32), y.name(img), one.clone());
    }
    q
}

/// `W_{x,y} = Σ_{y' ∈ g⁻¹(y)} Q_{f(x),y'}` without re-verifying the input.
pub fn compose_sandwich_unchecked(
    x: &RelStructure,
    f: &Homomorphism,
    xp: &RelStructure,
    q: &QuantumAssignment,
    yp: &RelStructure,
    g: &Homomorphism,
    y: &RelStructure,
) -> Result<QuantumAssignment> {
    let mut w = QuantumAssignment::new(q.dim, q.k);
    for v in 0..x.len() as u32 {
        let src = xp.name(f.map[v as usize]);
        let pvm = q.pvm(src).ok_or_else(|| Error::KeyMismatch(format!("no PVM for `{src}`")))?;
        let mut acc: BTreeMap<u32, PMatrix> = BTreeMap::new();
        for (label, m) in pvm {
            let yi = yp.vertex(label).map_err(|_| Error::KeyMismatch(format!("`{label}` is not a label")))?;
            let target = g.map[yi as usize];
            let e = acc.entry(target).or_insert_with(|| PMatrix::zero(q.dim));
            *e = e.add(m);
        }
        w.pvms.entry(x.name(v).to_string()).or_default();
        for (t, m) in acc {
            w.insert(x.name(v), y.name(t), m);
        }
    }
    Ok(w)
}

pub fn compose_sandwich(
    x: &RelStructure,
    f: &Homomorphism,
    xp: &RelStructure,
    q: &QuantumAssignment,
    yp: &RelStructure,
    g: &Homomorphism,
    y: &RelStructure,
) -> Result<QuantumAssignment> {
    let rep = verify_assignment(xp, yp, q, q.k)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(rep.summary()));
    }
    compose_sandwich_unchecked(x, f, xp, q, yp, g, y)
}

/// Moves every projector on a label of the wrong part into the least label of
/// the variable's own part.
pub fn cleanup_bipartite(phi: &CspInstance, q: &QuantumAssignment) -> Result<QuantumAssignment> {
    let prof = classify_label_cover(phi)?;
    let ((x1, _x2), (a1, a2)) = match (prof.bipartite, prof.projective) {
        (Some(b), Some(p)) => (b, p),
        _ => return Err(Error::NotBipartiteProjective),
    };
    let alphabet = phi.alphabet();
    let mut w = QuantumAssignment::new(q.dim, q.k);
    for (vi, name) in phi.variables().iter().enumerate() {
        let own: &[u32] = if x1.contains(&(vi as u32)) { &a1 } else { &a2 };
        let Some(pvm) = q.pvm(name) else {
            return Err(Error::KeyMismatch(format!("no PVM for `{name}`")));
        };
        w.pvms.entry(name.clone()).or_default();
        let mut merged: BTreeMap<String, PMatrix> = BTreeMap::new();
        for (label, m) in pvm {
            let li = alphabet
                .iter()
                .position(|a| a == label)
                .ok_or_else(|| Error::KeyMismatch(format!("`{label}` is not a label")))? as u32;
            let target = if own.contains(&li) {
                label.clone()
            } else {
                let first = *own.first().ok_or(Error::NotBipartiteProjective)?;
                alphabet[first as usize].clone()
            };
            let e = merged.entry(target).or_insert_with(|| PMatrix::zero(q.dim));
            *e = e.add(m);
        }
        for (label, m) in merged {
            w.insert(name, &label, m);
        }
    }
    let before = qsat(phi, q)?;
    let after = qsat(phi, &w)?;
    if let (QsatValue::Real(b), QsatValue::Real(a)) = (&before, &after) {
        if a < b {
            return Err(Error::VerificationFailure(format!("cleanup lowered qsat from {b} to {a}")));
        }
    }
    let (xs, ys) = to_structures(phi);
    if verify_assignment(&xs, &ys, q, q.k)?.passed() {
        let rep = verify_assignment(&xs, &ys, &w, q.k)?;
        if !rep.passed() {
            return Err(Error::VerificationFailure(rep.summary()));
        }
    }
    Ok(w)
}

/// Two-player form: Alice measures per constraint, Bob per variable.
#[derive(Debug, Clone)]
pub struct GameStrategy {
    pub dim: usize,
    /// Constraint index → answer tuple → projector.
    pub alice: BTreeMap<usize, BTreeMap<Vec<String>, PMatrix>>,
    pub bob: BTreeMap<String, BTreeMap<String, PMatrix>>,
}

impl GameStrategy {
    /// Alice takes ordered products, Bob the entrywise conjugates, so that the
    /// maximally entangled state reproduces the assignment's statistics.
    pub fn from_assignment(phi: &CspInstance, q: &QuantumAssignment) -> Self {
        let mut alice = BTreeMap::new();
        for (ci, c) in phi.constraints().iter().enumerate() {
            let mut fam = BTreeMap::new();
            let lists: Vec<Vec<(&String, &PMatrix)>> = c
                .scope
                .iter()
                .map(|&v| q.pvm(&phi.variables()[v as usize]).map(|p| p.iter().collect()).unwrap_or_default())
                .collect();
            let mut idx = vec![0usize; lists.len()];
            if lists.iter().all(|l| !l.is_empty()) {
                'outer: loop {
                    let answer: Vec<String> = idx.iter().zip(&lists).map(|(&i, l)| l[i].0.clone()).collect();
                    let m = PMatrix::product(q.dim, idx.iter().zip(&lists).map(|(&i, l)| l[i].1));
                    if !m.is_zero() {
                        fam.insert(answer, m);
                    }
                    for p in 0..idx.len() {
                        idx[p] += 1;
                        if idx[p] < lists[p].len() {
                            continue 'outer;
                        }
                        idx[p] = 0;
                    }
                    break;
                }
            }
            alice.insert(ci, fam);
        }
        let bob = phi
            .variables()
            .iter()
            .filter_map(|v| q.pvm(v).map(|p| (v.clone(), p.iter().map(|(a, m)| (a.clone(), m.conjugate())).collect())))
            .collect();
        GameStrategy { dim: q.dim, alice, bob }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GameReport {
    pub alice_pvm_failures: Vec<usize>,
    pub bob_pvm_failures: Vec<String>,
    pub consistency_violations: Vec<(usize, Vec<String>, String, String)>,
    pub predicate_violations: Vec<(usize, Vec<String>)>,
}

impl GameReport {
    pub fn perfect(&self) -> bool {
        self.alice_pvm_failures.is_empty()
            && self.bob_pvm_failures.is_empty()
            && self.consistency_violations.is_empty()
            && self.predicate_violations.is_empty()
    }
}

/// Perfection on the maximally entangled state, where `ψ*(A⊗B)ψ = tr(A Bᵀ)/dim`.
pub fn verify_game_strategy(phi: &CspInstance, s: &GameStrategy) -> Result<GameReport> {
    let mut rep = GameReport::default();
    let alpha = phi.alphabet();
    let index = |label: &str| -> Result<u32> {
        alpha
            .iter()
            .position(|a| a == label)
            .map(|i| i as u32)
            .ok_or_else(|| Error::KeyMismatch(format!("`{label}` is not a label")))
    };
    for (ci, c) in phi.constraints().iter().enumerate() {
        let fam = s.alice.get(&ci).ok_or_else(|| Error::KeyMismatch(format!("no measurement for constraint {ci}")))?;
        let members: Vec<PMatrix> = fam.values().cloned().collect();
        if members.is_empty() || !verify_pvm(&members)?.passed() {
            rep.alice_pvm_failures.push(ci);
        }
        for (answer, e) in fam {
            let labels: Vec<u32> = answer.iter().map(|a| index(a)).collect::<Result<_>>()?;
            if !c.predicate.contains(&labels) && !e.trace().is_zero() {
                rep.predicate_violations.push((ci, answer.clone()));
            }
            for (pos, &v) in c.scope.iter().enumerate() {
                let var = &phi.variables()[v as usize];
                let Some(bob) = s.bob.get(var) else {
                    return Err(Error::KeyMismatch(format!("no measurement for `{var}`")));
                };
                for (b, f) in bob {
                    if *b != answer[pos] && !e.mul(&f.transpose()).trace().is_zero() {
                        rep.consistency_violations.push((ci, answer.clone(), var.clone(), b.clone()));
                    }
                }
            }
        }
    }
    for (v, fam) in &s.bob {
        let members: Vec<PMatrix> = fam.values().cloned().collect();
        if members.is_empty() || !verify_pvm(&members)?.passed() {
            rep.bob_pvm_failures.push(v.clone());
        }
    }
    Ok(rep)
}

fn pauli(c: char) -> PMatrix {
    let z = ExactScalar::zero();
    let o = ExactScalar::one();
    let i = ExactScalar::i();
    let rows = match c {
        'I' => vec![vec![o, z], vec![z, o]],
        'X' => vec![vec![z, o], vec![o, z]],
        'Y' => vec![vec![z, -i], vec![i, z]],
        'Z' => vec![vec![o, z], vec![z, -o]],
        _ => unreachable!("not a Pauli label"),
    };
    PMatrix::from_rows(rows).unwrap()
}

/// `P ⊗ Q` for a two-letter Pauli word.
pub fn pauli_word(w: &str) -> PMatrix {
    let mut cs = w.chars();
    let (a, b) = (cs.next().unwrap(), cs.next().unwrap());
    pauli(a).kron(&pauli(b))
}

/// `(I + (-1)^bit O) / 2` for an involution `O`.
pub fn eigenprojector(o: &PMatrix, bit: bool) -> PMatrix {
    let id = PMatrix::identity(o.dim());
    let half = ExactScalar::real(1, 2);
    if bit { id.sub(o).scale(half) } else { id.add(o).scale(half) }
}

/// The magic square: cells, equations and both operator-valued assignments.
#[derive(Debug, Clone)]
pub struct MerminPeres {
    pub cells: Vec<String>,
    pub equation_names: Vec<String>,
    pub equations: Vec<([usize; 3], bool)>,
    pub observables: Vec<PMatrix>,
    /// Keyed by cell, labels "0"/"1".
    pub cell_assignment: QuantumAssignment,
    /// Keyed by equation, labels the satisfying bit strings in equation order.
    pub equation_assignment: QuantumAssignment,
}

pub fn mermin_peres() -> MerminPeres {
    const WORDS: [&str; 9] = ["XI", "IX", "XX", "IZ", "ZI", "ZZ", "XZ", "ZX", "YY"];
    let cells: Vec<String> = (1..=3).flat_map(|r| (1..=3).map(move |c| format!("a{r}{c}"))).collect();
    let equations = vec![
        ([0, 1, 2], false),
        ([3, 4, 5], false),
        ([6, 7, 8], false),
        ([0, 3, 6], false),
        ([1, 4, 7], false),
        ([2, 5, 8], true),
    ];
    let equation_names: Vec<String> =
        ["r1", "r2", "r3", "c1", "c2", "c3"].iter().map(|s| s.to_string()).collect();
    let observables: Vec<PMatrix> = WORDS.iter().map(|w| pauli_word(w)).collect();

    let mut cell_assignment = QuantumAssignment::new(4, 1);
    for (c, o) in cells.iter().zip(&observables) {
        cell_assignment.insert(c, "0", eigenprojector(o, false));
        cell_assignment.insert(c, "1", eigenprojector(o, true));
    }

    let mut equation_assignment = QuantumAssignment::new(4, 1);
    for (name, (vars, rhs)) in equation_names.iter().zip(&equations) {
        for theta in 0u8..8 {
            let bits: Vec<bool> = (0..3).map(|i| theta >> (2 - i) & 1 == 1).collect();
            if bits.iter().fold(false, |a, &b| a ^ b) != *rhs {
                continue;
            }
            let label: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let projs: Vec<PMatrix> =
                vars.iter().zip(&bits).map(|(&v, &b)| eigenprojector(&observables[v], b)).collect();
            equation_assignment.insert(name, &label, PMatrix::product(4, &projs));
        }
    }
    MerminPeres { cells, equation_names, equations, observables, cell_assignment, equation_assignment }
}
