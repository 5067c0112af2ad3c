//! From weighted `d`-to-1 label cover to unweighted `d`-to-`d` label cover in
//! three stages, each carrying perfect quantum assignments along.
//!
//! 1. [`equalize_marginals`] copies left vertices so that every left marginal
//!    becomes `1/|X₁'|`.
//! 2. [`left_regularize`] replaces each left vertex by `ℓ`-tuples of edge slots.
//! 3. [`collapse_to_d2d`] joins left vertices sharing a right neighbour.
//!
//! [`dmr_pipeline`] chains them with the parameters derived from `(ε, t, d)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::csp::{classify_label_cover, left_marginals, to_structures, CspInstance, Predicate, RawConstraint};
use crate::error::{Error, Result};
use crate::qop::{cleanup_bipartite, verify_assignment, QuantumAssignment};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ceil_u64(r: &BigRational) -> Result<u64> {
    r.ceil().to_integer().to_u64().ok_or_else(|| Error::SizeBudgetExceeded(format!("⌈{r}⌉ overflows")))
}

/// The constants of the chain for target `isat_t < ε` on alphabet fibres of size `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmrParameters {
    pub eps: BigRational,
    pub t: u64,
    pub d: u64,
    /// `ε / (3t²)`.
    pub delta: BigRational,
    /// `ε / (3d⌈1/δ⌉²t²)`.
    pub eps1: BigRational,
    /// `ε'/2`.
    pub eps2: BigRational,
    /// `δε''/2`, the soundness the input must have.
    pub eps3: BigRational,
    pub h: u64,
    pub ell: u64,
    pub m: u64,
}

impl DmrParameters {
    pub fn new(eps: &BigRational, d: u64, t: u64) -> Result<Self> {
        if !eps.is_positive() || d == 0 || t == 0 {
            return Err(Error::Invalid("need ε > 0, d ≥ 1, t ≥ 1".into()));
        }
        let t2 = rat(t as i64) * rat(t as i64);
        let delta = eps / (rat(3) * &t2);
        let ell = ceil_u64(&(BigRational::one() / &delta))?;
        let l = rat(ell as i64);
        let eps1 = eps / (rat(3) * rat(d as i64) * &l * &l * &t2);
        let eps2 = &eps1 / rat(2);
        let eps3 = &delta * &eps2 / rat(2);
        let m = ceil_u64(&(rat(2) / &eps1))?;
        Ok(DmrParameters { eps: eps.clone(), t, d, delta, eps1, eps2, eps3, h: 2, ell, m })
    }

    /// The inequalities the soundness chain relies on:
    /// `(1−1/h)δε'' = ε'''`, `0 < ε' < 1/(dℓ²)`, `ε' − 1/m ≥ ε''` and
    /// `δ + 1/ℓ + dℓ²ε' ≤ ε/t²`.
    pub fn chain_holds(&self) -> bool {
        let one = BigRational::one();
        let l = rat(self.ell as i64);
        let d = rat(self.d as i64);
        let h = rat(self.h as i64);
        let t2 = rat(self.t as i64) * rat(self.t as i64);
        (&one - &one / &h) * &self.delta * &self.eps2 == self.eps3
            && self.eps1.is_positive()
            && self.eps1 < &one / (&d * &l * &l)
            && &self.eps1 - &one / rat(self.m as i64) >= self.eps2
            && &self.delta + &one / &l + &d * &l * &l * &self.eps1 <= &self.eps / t2
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "eps": self.eps.to_string(),
            "t": self.t,
            "d": self.d,
            "delta": self.delta.to_string(),
            "eps1": self.eps1.to_string(),
            "eps2": self.eps2.to_string(),
            "eps3": self.eps3.to_string(),
            "h": self.h,
            "ell": self.ell,
            "m": self.m,
        })
    }
}

/// `(X₁, X₂)` of a bipartite instance.
fn sides(phi: &CspInstance) -> Result<(Vec<u32>, Vec<u32>)> {
    classify_label_cover(phi)?.bipartite.ok_or(Error::NotBipartiteProjective)
}

/// True iff all left marginals are equal and positive.
pub fn has_uniform_marginals(phi: &CspInstance) -> Result<bool> {
    let (x1, _) = sides(phi)?;
    let marg = left_marginals(phi);
    let vals: Vec<BigRational> = x1.iter().map(|x| marg.get(x).cloned().unwrap_or_else(BigRational::zero)).collect();
    Ok(vals.first().is_none_or(|v| v.is_positive() && vals.iter().all(|w| w == v)))
}

/// Variables occurring first in some constraint; isolated ones are on neither side.
fn sources(phi: &CspInstance) -> Vec<u32> {
    let mut seen = vec![false; phi.variables().len()];
    for c in phi.constraints() {
        seen[c.scope[0] as usize] = true;
    }
    (0..seen.len() as u32).filter(|&v| seen[v as usize]).collect()
}

/// The common degree of the constraint sources, counting repeated constraints.
pub fn left_degree(phi: &CspInstance) -> Result<Option<usize>> {
    sides(phi)?;
    let x1 = sources(phi);
    let mut deg = vec![0usize; phi.variables().len()];
    for c in phi.constraints() {
        deg[c.scope[0] as usize] += 1;
    }
    let d0 = x1.first().map(|&x| deg[x as usize]);
    Ok(d0.filter(|&d| x1.iter().all(|&x| deg[x as usize] == d)))
}

/// Builds `W_{v',a} = Q_{source(v'),a}` and checks it at `k`.
fn pull_back(
    out: &CspInstance,
    q: &QuantumAssignment,
    source: &[&str],
    labels: Option<&[String]>,
    k: usize,
) -> Result<QuantumAssignment> {
    let mut w = QuantumAssignment::new(q.dim, k);
    for (name, &src) in out.variables().iter().zip(source) {
        let pvm = q.pvm(src).ok_or_else(|| Error::KeyMismatch(format!("no PVM for `{src}`")))?;
        w.ensure_variable(name);
        for (y, m) in pvm {
            if labels.is_none_or(|ls| ls.contains(y)) {
                w.insert(name, y, m.clone());
            }
        }
    }
    let (x, a) = to_structures(out);
    let rep = verify_assignment(&x, &a, &w, k)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(rep.summary()));
    }
    Ok(w)
}

/// Copies each left vertex `x` into `⌊h·|X₁|·π_x⌋` vertices `x^(i)`, reweighting
/// so that every copy carries marginal `1/|X₁'|`. Variables are listed as all
/// copies (in left order) followed by `X₂`.
pub fn equalize_marginals(
    phi: &CspInstance,
    h: u64,
    q: Option<&QuantumAssignment>,
) -> Result<(CspInstance, Option<QuantumAssignment>)> {
    let (x1, x2) = sides(phi)?;
    let marg = left_marginals(phi);
    let scale = rat(h as i64) * rat(x1.len() as i64);
    let mut copies = BTreeMap::new();
    for &x in &x1 {
        let pi = marg.get(&x).cloned().unwrap_or_else(BigRational::zero);
        let a = (&scale * &pi).floor().to_integer().to_usize().unwrap_or(0);
        if a == 0 {
            return Err(Error::ZeroCopyCount(phi.variables()[x as usize].clone()));
        }
        copies.insert(x, a);
    }
    let total: usize = copies.values().sum();
    let mut names = Vec::with_capacity(total + x2.len());
    let mut source = Vec::with_capacity(total + x2.len());
    let mut first = BTreeMap::new();
    for &x in &x1 {
        first.insert(x, names.len() as u32);
        for i in 1..=copies[&x] {
            names.push(format!("{}^({i})", phi.variables()[x as usize]));
            source.push(phi.variables()[x as usize].as_str());
        }
    }
    let mut right = BTreeMap::new();
    for &y in &x2 {
        right.insert(y, names.len() as u32);
        names.push(phi.variables()[y as usize].clone());
        source.push(phi.variables()[y as usize].as_str());
    }
    let total_r = rat(total as i64);
    let mut raw = Vec::new();
    for &x in &x1 {
        for c in phi.constraints().iter().filter(|c| c.scope[0] == x) {
            let w = &c.weight / (&total_r * &marg[&x]);
            for i in 0..copies[&x] as u32 {
                raw.push(RawConstraint {
                    scope: vec![first[&x] + i, right[&c.scope[1]]],
                    predicate: c.predicate.clone(),
                    weight: Some(w.clone()),
                });
            }
        }
    }
    let out = CspInstance::new(names, phi.alphabet().to_vec(), raw)?;
    let w = q.map(|q| pull_back(&out, q, &source, None, q.k)).transpose()?;
    Ok((out, w))
}

/// Each left vertex gets `α = m·|X₂|` edge slots, filled by `⌊α·π(e)⌋` copies
/// of every incident edge `e` except the least one, which takes the rest. The
/// new left vertices are `(x; i₁,…,i_ℓ)` for slot tuples in `[α]^ℓ`, joined to
/// the right endpoints of their slots.
pub fn left_regularize(
    phi: &CspInstance,
    ell: u64,
    m: u64,
    q: Option<&QuantumAssignment>,
    max_vertices: Option<usize>,
) -> Result<(CspInstance, Option<QuantumAssignment>)> {
    let prof = classify_label_cover(phi)?;
    if prof.d_to_1.is_none() {
        return Err(Error::NotDto1);
    }
    if !has_uniform_marginals(phi)? {
        return Err(Error::Invalid("left marginals are not uniform".into()));
    }
    if ell == 0 || m == 0 {
        return Err(Error::Invalid("ℓ and m must be positive".into()));
    }
    let (x1, x2) = prof.bipartite.expect("d-to-1 implies bipartite");
    let alpha = (m as usize)
        .checked_mul(x2.len())
        .ok_or_else(|| Error::SizeBudgetExceeded("α overflows".into()))?;
    let per_left = u32::try_from(ell)
        .ok()
        .and_then(|e| alpha.checked_pow(e))
        .ok_or_else(|| Error::SizeBudgetExceeded(format!("α^ℓ = {alpha}^{ell} overflows")))?;
    let nleft = per_left
        .checked_mul(x1.len())
        .ok_or_else(|| Error::SizeBudgetExceeded("left side overflows".into()))?;
    if max_vertices.is_some_and(|cap| nleft + x2.len() > cap) {
        return Err(Error::SizeBudgetExceeded(format!("{} vertices", nleft + x2.len())));
    }
    let alpha_r = rat(alpha as i64);

    // slot lists: constraint index per slot
    let mut slots: Vec<Vec<usize>> = Vec::with_capacity(x1.len());
    for &x in &x1 {
        let mut inc: Vec<usize> = (0..phi.constraints().len()).filter(|&i| phi.constraints()[i].scope[0] == x).collect();
        inc.sort_by_key(|&i| (phi.constraints()[i].scope[1], i));
        let reserved = inc[0];
        let mut counts: Vec<(usize, usize)> = Vec::new();
        let mut used = 0usize;
        for &i in &inc[1..] {
            let c = (&alpha_r * &phi.constraints()[i].weight).floor().to_integer().to_usize().unwrap_or(0);
            used += c;
            counts.push((i, c));
        }
        let rest = alpha.checked_sub(used).ok_or_else(|| Error::Invalid("slot counts exceed α".into()))?;
        counts.push((reserved, rest));
        counts.sort_by_key(|&(i, _)| i);
        slots.push(counts.into_iter().flat_map(|(i, c)| std::iter::repeat_n(i, c)).collect());
    }

    let mut names = Vec::with_capacity(nleft + x2.len());
    let mut source = Vec::with_capacity(nleft + x2.len());
    let mut raw = Vec::with_capacity(nleft * ell as usize);
    let right_base = nleft as u32;
    let right: BTreeMap<u32, u32> = x2.iter().enumerate().map(|(j, &y)| (y, right_base + j as u32)).collect();
    let mut idx = vec![0usize; ell as usize];
    for (xi, &x) in x1.iter().enumerate() {
        let xname = &phi.variables()[x as usize];
        idx.iter_mut().for_each(|i| *i = 0);
        for _ in 0..per_left {
            let v = names.len() as u32;
            let tag: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            names.push(format!("({xname};{})", tag.join(",")));
            source.push(xname.as_str());
            for &i in &idx {
                let c = &phi.constraints()[slots[xi][i]];
                raw.push(RawConstraint { scope: vec![v, right[&c.scope[1]]], predicate: c.predicate.clone(), weight: None });
            }
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < alpha {
                    break;
                }
                idx[p] = 0;
            }
        }
    }
    for &y in &x2 {
        names.push(phi.variables()[y as usize].clone());
        source.push(phi.variables()[y as usize].as_str());
    }
    let out = CspInstance::new(names, phi.alphabet().to_vec(), raw)?;
    let w = q.map(|q| pull_back(&out, q, &source, None, q.k)).transpose()?;
    Ok((out, w))
}

/// For every ordered pair of distinct edge occurrences `(x,y)`, `(x',y)` adds
/// the constraint `(x,x')` allowing `(a,a')` whenever some `b` is admitted
/// with both. The result lives on `X₁` with alphabet `A₁`; a supplied
/// assignment at `2k` comes back at `k`.
pub fn collapse_to_d2d(
    phi: &CspInstance,
    q: Option<&QuantumAssignment>,
    max_constraints: Option<usize>,
) -> Result<(CspInstance, Option<QuantumAssignment>)> {
    let prof = classify_label_cover(phi)?;
    let d = prof.d_to_1.ok_or(Error::NotDto1)?;
    if left_degree(phi)?.is_none() {
        return Err(Error::NotLeftRegular);
    }
    let w0 = phi.constraints().first().map(|c| &c.weight);
    if phi.constraints().iter().any(|c| Some(&c.weight) != w0) {
        return Err(Error::Invalid("instance is weighted".into()));
    }
    let x1 = sources(phi);
    let (a1, _) = prof.projective.expect("d-to-1 implies projective");
    let mut at_right: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in phi.constraints().iter().enumerate() {
        at_right.entry(c.scope[1]).or_default().push(i);
    }
    let count: usize = at_right.values().map(|v| v.len() * (v.len() - 1)).sum();
    if count == 0 {
        return Err(Error::Invalid("no two edges share a right vertex".into()));
    }
    if max_constraints.is_some_and(|cap| count > cap) {
        return Err(Error::SizeBudgetExceeded(format!("{count} constraints")));
    }
    let left_pos: BTreeMap<u32, u32> = x1.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
    let na = phi.alphabet().len();
    // b ↦ admitted a ∈ A₁ (as positions in a1), per constraint
    let fibres: Vec<Vec<Vec<u32>>> = phi
        .constraints()
        .iter()
        .map(|c| {
            let mut f = vec![Vec::new(); na];
            for (ai, &a) in a1.iter().enumerate() {
                for b in 0..na as u32 {
                    if c.predicate.contains(&[a, b]) {
                        f[b as usize].push(ai as u32);
                    }
                }
            }
            f
        })
        .collect();
    let mut cache: BTreeMap<(usize, usize), Predicate> = BTreeMap::new();
    let mut raw = Vec::with_capacity(count);
    for occ in at_right.values() {
        for &i in occ {
            for &j in occ {
                if i == j {
                    continue;
                }
                let pred = cache
                    .entry((i, j))
                    .or_insert_with(|| {
                        let mut p = Predicate::empty(2, a1.len());
                        for b in 0..na {
                            for &a in &fibres[i][b] {
                                for &a2 in &fibres[j][b] {
                                    p.insert(&[a, a2]);
                                }
                            }
                        }
                        p
                    })
                    .clone();
                let (ci, cj) = (&phi.constraints()[i], &phi.constraints()[j]);
                raw.push(RawConstraint {
                    scope: vec![left_pos[&ci.scope[0]], left_pos[&cj.scope[0]]],
                    predicate: pred,
                    weight: None,
                });
            }
        }
    }
    let names: Vec<String> = x1.iter().map(|&x| phi.variables()[x as usize].clone()).collect();
    let alphabet: Vec<String> = a1.iter().map(|&a| phi.alphabet()[a as usize].clone()).collect();
    let out = CspInstance::new(names.clone(), alphabet.clone(), raw)?;
    match classify_label_cover(&out)?.d_to_d {
        Some(dd) if dd.d == d => {}
        _ => return Err(Error::NotDtoD("collapsed constraints lost block form".into())),
    }
    let w = match q {
        None => None,
        Some(q) => {
            let (x, a) = to_structures(phi);
            let rep = verify_assignment(&x, &a, q, q.k)?;
            if !rep.passed() {
                return Err(Error::VerificationFailure(format!("input: {}", rep.summary())));
            }
            let clean = cleanup_bipartite(phi, q)?;
            let source: Vec<&str> = names.iter().map(String::as_str).collect();
            Some(pull_back(&out, &clean, &source, Some(&alphabet), q.k / 2)?)
        }
    };
    Ok((out, w))
}

#[derive(Debug, Clone)]
pub struct DmrStage {
    pub name: &'static str,
    pub variables: usize,
    pub constraints: usize,
    /// Uniform marginals, left-regularity or d-to-d, as the stage promises.
    pub certificate: bool,
    /// Compatibility of the transferred assignment, when one is tracked.
    pub k: Option<usize>,
    pub verified: Option<bool>,
    /// The stage's classical soundness guarantee, not checked here.
    pub soundness: &'static str,
}

#[derive(Debug, Clone)]
pub struct DmrReport {
    pub parameters: DmrParameters,
    /// `(h, ℓ, m)` actually used.
    pub used: (u64, u64, u64),
    pub overridden: bool,
    pub stages: Vec<DmrStage>,
}

impl DmrReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "parameters": self.parameters.to_json(),
            "chain_holds": self.parameters.chain_holds(),
            "used": { "h": self.used.0, "ell": self.used.1, "m": self.used.2 },
            "overridden": self.overridden,
            "stages": self.stages.iter().map(|s| json!({
                "name": s.name,
                "variables": s.variables,
                "constraints": s.constraints,
                "certificate": s.certificate,
                "k": s.k,
                "verified": s.verified,
                "soundness": s.soundness,
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct DmrOptions {
    /// Replaces `(h, ℓ, m)` by smaller values; the report flags it.
    pub stage_parameters: Option<(u64, u64, u64)>,
    pub max_vertices: Option<usize>,
    pub max_constraints: Option<usize>,
}

const SOUND_1: &str = "if f' gives a δ-fraction of X₁' local value ≥ ε/|X₁'| then sat(Φ) ≥ (1−1/h)δε";
const SOUND_2: &str =
    "for ε < 1/(dℓ²): sat(Φ'') > δ + 1/ℓ + (1−δ)dℓ²ε gives f with a δ-fraction of X₁ at local value > (ε−1/m)/|X₁|";
const SOUND_3: &str = "isat_t(Φ''') ≥ ε implies sat(Φ'') ≥ ε/t²";

/// Runs the three stages on a `d`-to-1 instance. A supplied assignment must be
/// `2k`-compatible; it is checked at `2k` on entry and comes out at `k`.
pub fn dmr_pipeline(
    phi: &CspInstance,
    eps: &BigRational,
    k: usize,
    t: u64,
    q: Option<&QuantumAssignment>,
    opts: &DmrOptions,
) -> Result<(CspInstance, Option<QuantumAssignment>, DmrReport)> {
    let d = classify_label_cover(phi)?.d_to_1.ok_or(Error::NotDto1)?;
    let parameters = DmrParameters::new(eps, d as u64, t)?;
    let used = opts.stage_parameters.unwrap_or((parameters.h, parameters.ell, parameters.m));
    let q0 = match q {
        None => None,
        Some(q) => {
            if q.k < 2 * k {
                return Err(Error::CompatibilityTooLow { have: q.k, need: 2 * k });
            }
            let q = q.clone().with_k(2 * k);
            let (x, a) = to_structures(phi);
            let rep = verify_assignment(&x, &a, &q, q.k)?;
            if !rep.passed() {
                return Err(Error::VerificationFailure(format!("input: {}", rep.summary())));
            }
            Some(q)
        }
    };
    let stage = |name, soundness, inst: &CspInstance, certificate, w: &Option<QuantumAssignment>| DmrStage {
        name,
        variables: inst.variables().len(),
        constraints: inst.constraints().len(),
        certificate,
        k: w.as_ref().map(|w| w.k),
        verified: w.as_ref().map(|_| true),
        soundness,
    };
    let mut stages = Vec::new();
    let (p1, w1) = equalize_marginals(phi, used.0, q0.as_ref())?;
    stages.push(stage("equalize_marginals", SOUND_1, &p1, has_uniform_marginals(&p1)?, &w1));
    let (p2, w2) = left_regularize(&p1, used.1, used.2, w1.as_ref(), opts.max_vertices)?;
    stages.push(stage("left_regularize", SOUND_2, &p2, left_degree(&p2)? == Some(used.1 as usize), &w2));
    let (p3, w3) = collapse_to_d2d(&p2, w2.as_ref(), opts.max_constraints)?;
    let certified = classify_label_cover(&p3)?.d_to_d.is_some_and(|dd| dd.d == d);
    stages.push(stage("collapse_to_d2d", SOUND_3, &p3, certified, &w3));
    let report = DmrReport { parameters, used, overridden: opts.stage_parameters.is_some(), stages };
    Ok((p3, w3, report))
}
