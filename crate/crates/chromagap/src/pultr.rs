//! Pultr templates with their left and central functors, and the transfer of
//! quantum assignments along the adjunction.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qop::{compose_sandwich_unchecked, verify_assignment, PMatrix, QuantumAssignment};
use crate::relstruct::{
    check_homomorphism, diameter_and_connectivity, enumerate_homomorphisms, find_homomorphism, Homomorphism,
    Relation, RelStructure, Signature, StructureJson, Symbol,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PultrTemplate {
    tau: Signature,
    a: RelStructure,
    /// Aligned with `tau.symbols()`.
    b: Vec<RelStructure>,
    /// `eps[T][i]` maps `A` into `B_T`.
    eps: Vec<Vec<Homomorphism>>,
}

impl PultrTemplate {
    pub fn new(tau: Signature, a: RelStructure, b: Vec<RelStructure>, eps: Vec<Vec<Homomorphism>>) -> Result<Self> {
        if b.len() != tau.len() || eps.len() != tau.len() {
            return Err(Error::Invalid("one B and one ε family per τ-symbol".into()));
        }
        for (t, sym) in tau.symbols().iter().enumerate() {
            if b[t].signature() != a.signature() {
                return Err(Error::SignatureMismatch(format!("B_{} is not over the signature of A", sym.name)));
            }
            if eps[t].len() != sym.arity {
                return Err(Error::Invalid(format!("need {} maps for {}", sym.arity, sym.name)));
            }
            for (i, e) in eps[t].iter().enumerate() {
                if e.map.len() != a.len() || !check_homomorphism(e, &a, &b[t])? {
                    return Err(Error::Invalid(format!("ε_{},{} is not a homomorphism", i + 1, sym.name)));
                }
            }
        }
        Ok(PultrTemplate { tau, a, b, eps })
    }

    pub fn rho(&self) -> &Signature {
        self.a.signature()
    }

    pub fn tau(&self) -> &Signature {
        &self.tau
    }

    pub fn a(&self) -> &RelStructure {
        &self.a
    }

    pub fn b(&self, t: usize) -> &RelStructure {
        &self.b[t]
    }

    pub fn eps(&self, t: usize, i: usize) -> &Homomorphism {
        &self.eps[t][i]
    }

    pub fn to_json(&self) -> TemplateJson {
        let mut b = BTreeMap::new();
        let mut eps = BTreeMap::new();
        for (t, sym) in self.tau.symbols().iter().enumerate() {
            b.insert(sym.name.clone(), self.b[t].to_json());
            eps.insert(sym.name.clone(), self.eps[t].iter().map(|e| e.to_names(&self.a, &self.b[t])).collect());
        }
        TemplateJson { tau: self.tau.symbols().to_vec(), a: self.a.to_json(), b, eps }
    }

    pub fn from_json(j: &TemplateJson) -> Result<Self> {
        let tau = Signature::new(j.tau.clone())?;
        let a = RelStructure::from_json(&j.a)?;
        let mut bs = Vec::new();
        let mut eps = Vec::new();
        for sym in tau.symbols() {
            let bj = j.b.get(&sym.name).ok_or_else(|| Error::Invalid(format!("no B for {}", sym.name)))?;
            let b = RelStructure::from_json(bj)?;
            let maps = j.eps.get(&sym.name).ok_or_else(|| Error::Invalid(format!("no ε for {}", sym.name)))?;
            eps.push(maps.iter().map(|m| Homomorphism::from_names(&a, &b, m)).collect::<Result<Vec<_>>>()?);
            bs.push(b);
        }
        PultrTemplate::new(tau, a, bs, eps)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateJson {
    pub tau: Vec<Symbol>,
    pub a: StructureJson,
    pub b: BTreeMap<String, StructureJson>,
    pub eps: BTreeMap<String, Vec<BTreeMap<String, String>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemplateFlags {
    pub connected: bool,
    pub faithful: bool,
    /// Defined only for connected templates.
    pub diameter: Option<usize>,
}

pub fn template_predicates(t: &PultrTemplate) -> TemplateFlags {
    let (connected, diameter) = connectivity(t);
    TemplateFlags { connected, faithful: is_faithful(t), diameter }
}

/// Connectedness of the template and, when connected, its diameter.
pub fn connectivity(t: &PultrTemplate) -> (bool, Option<usize>) {
    let (a_conn, a_diam) = diameter_and_connectivity(&t.a);
    let mut connected = a_conn;
    let mut diameter = a_diam.unwrap_or(0);
    for (ti, b) in t.b.iter().enumerate() {
        let (c, d) = diameter_and_connectivity(b);
        connected &= c;
        diameter = diameter.max(d.unwrap_or(0));
        for (r, rb) in b.relations().iter().enumerate() {
            let ra = t.a.relation(r);
            let covered = rb.iter().all(|tb| {
                t.eps[ti].iter().any(|e| {
                    ra.iter().any(|ta| ta.iter().zip(tb).all(|(&x, &y)| e.map[x as usize] == y))
                })
            });
            connected &= covered;
        }
    }
    (connected, connected.then_some(diameter))
}

pub fn is_faithful(t: &PultrTemplate) -> bool {
    t.b.iter().enumerate().all(|(ti, b)| {
        let mut owner = vec![None; b.len()];
        for (i, e) in t.eps[ti].iter().enumerate() {
            for &v in &e.map {
                if owner[v as usize].is_some() {
                    return false;
                }
                owner[v as usize] = Some(i);
            }
        }
        if owner.iter().any(Option::is_none) {
            return false;
        }
        // each image induces a copy of A
        t.eps[ti].iter().enumerate().all(|(i, e)| {
            let mut inv = vec![u32::MAX; b.len()];
            for (a, &v) in e.map.iter().enumerate() {
                inv[v as usize] = a as u32;
            }
            b.relations().iter().zip(t.a.relations()).all(|(rb, ra)| {
                rb.iter().filter(|tb| tb.iter().all(|&v| owner[v as usize] == Some(i))).all(|tb| {
                    let pre: Vec<u32> = tb.iter().map(|&v| inv[v as usize]).collect();
                    ra.contains(&pre)
                })
            })
        })
    })
}

/// Name of a map `A → Y`: the JSON array of image names in `A`'s order.
pub fn hom_name(h: &Homomorphism, y: &RelStructure) -> String {
    let names: Vec<&str> = h.map.iter().map(|&v| y.name(v)).collect();
    serde_json::to_string(&names).expect("strings serialise")
}

pub fn parse_hom_name(name: &str, a: &RelStructure, y: &RelStructure) -> Result<Homomorphism> {
    let names: Vec<String> =
        serde_json::from_str(name).map_err(|e| Error::KeyMismatch(format!("label `{name}` is not a map: {e}")))?;
    if names.len() != a.len() {
        return Err(Error::KeyMismatch(format!("label `{name}` has the wrong length")));
    }
    let map = names.iter().map(|n| y.vertex(n)).collect::<Result<Vec<_>>>()?;
    Ok(Homomorphism { map })
}

/// `ΓX` together with the hom-set it is built on.
#[derive(Debug, Clone)]
pub struct CentralImage {
    pub structure: RelStructure,
    /// Vertex `i` of `structure` is `homs[i]`.
    pub homs: Vec<Homomorphism>,
    /// For each τ-symbol and tuple of `structure`, one `ℓ: B_T → X` producing it.
    pub witnesses: Vec<Vec<Homomorphism>>,
}

pub fn central_apply(t: &PultrTemplate, x: &RelStructure, budget: Option<u64>) -> Result<CentralImage> {
    if x.signature() != t.rho() {
        return Err(Error::SignatureMismatch("ΓX needs a ρ-structure".into()));
    }
    let homs = enumerate_homomorphisms(&t.a, x, budget)?;
    let index: HashMap<&[u32], u32> = homs.iter().enumerate().map(|(i, h)| (h.map.as_slice(), i as u32)).collect();
    let names: Vec<String> = homs.iter().map(|h| hom_name(h, x)).collect();
    let mut rels = Vec::new();
    let mut witnesses = Vec::new();
    for (ti, sym) in t.tau.symbols().iter().enumerate() {
        let ells = enumerate_homomorphisms(&t.b[ti], x, budget)?;
        let mut by_tuple: BTreeMap<Vec<u32>, Homomorphism> = BTreeMap::new();
        for l in ells {
            let tuple: Vec<u32> = t.eps[ti]
                .iter()
                .map(|e| {
                    let comp: Vec<u32> = e.map.iter().map(|&b| l.map[b as usize]).collect();
                    index[comp.as_slice()]
                })
                .collect();
            by_tuple.entry(tuple).or_insert(l);
        }
        rels.push(Relation::from_tuples(sym.arity, by_tuple.keys()));
        witnesses.push(by_tuple.into_values().collect());
    }
    let structure = RelStructure::new(t.tau.clone(), names, rels)?;
    Ok(CentralImage { structure, homs, witnesses })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CopyTag {
    A { x: u32, a: u32 },
    B { symbol: u32, tuple: u32, b: u32 },
}

/// `ΛX` with the bookkeeping of which copy landed in which class.
#[derive(Debug, Clone)]
pub struct LeftImage {
    pub structure: RelStructure,
    a_len: usize,
    a_class: Vec<u32>,
    b_offset: Vec<usize>,
    b_len: Vec<usize>,
    b_class: Vec<u32>,
    /// Copies per class, least tag first.
    pub members: Vec<Vec<CopyTag>>,
}

impl LeftImage {
    pub fn a_class(&self, x: u32, a: u32) -> u32 {
        self.a_class[x as usize * self.a_len + a as usize]
    }

    pub fn b_class(&self, symbol: usize, tuple: usize, b: u32) -> u32 {
        self.b_class[self.b_offset[symbol] + tuple * self.b_len[symbol] + b as usize]
    }

    pub fn class_of(&self, tag: CopyTag) -> u32 {
        match tag {
            CopyTag::A { x, a } => self.a_class(x, a),
            CopyTag::B { symbol, tuple, b } => self.b_class(symbol as usize, tuple as usize, b),
        }
    }
}

fn find(parent: &mut [u32], mut v: u32) -> u32 {
    while parent[v as usize] != v {
        let p = parent[v as usize];
        parent[v as usize] = parent[p as usize];
        v = p;
    }
    v
}

pub fn left_apply(t: &PultrTemplate, x: &RelStructure) -> Result<LeftImage> {
    if x.signature() != &t.tau {
        return Err(Error::SignatureMismatch("ΛX needs a τ-structure".into()));
    }
    let na = t.a.len();
    let a_total = x.len() * na;
    let mut b_offset = Vec::new();
    let mut b_len = Vec::new();
    let mut total = a_total;
    for (ti, b) in t.b.iter().enumerate() {
        b_offset.push(total - a_total);
        b_len.push(b.len());
        total += x.relation(ti).len() * b.len();
    }
    // copy indices follow tag order, so the least index is the least tag
    let mut parent: Vec<u32> = (0..total as u32).collect();
    for ti in 0..t.b.len() {
        for (j, tuple) in x.relation(ti).iter().enumerate() {
            for (pos, &xv) in tuple.iter().enumerate() {
                for a in 0..na {
                    let u = (xv as usize * na + a) as u32;
                    let bv = t.eps[ti][pos].map[a] as usize;
                    let v = (a_total + b_offset[ti] + j * b_len[ti] + bv) as u32;
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    if ru != rv {
                        let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                        parent[hi as usize] = lo;
                    }
                }
            }
        }
    }
    let mut class_id = vec![u32::MAX; total];
    let mut reps = Vec::new();
    for v in 0..total as u32 {
        let r = find(&mut parent, v);
        if r == v {
            class_id[v as usize] = reps.len() as u32;
            reps.push(v);
        }
    }
    let mut members = vec![Vec::new(); reps.len()];
    let tag_of = |v: usize| -> CopyTag {
        if v < a_total {
            CopyTag::A { x: (v / na) as u32, a: (v % na) as u32 }
        } else {
            let off = v - a_total;
            let ti = b_offset.partition_point(|&o| o <= off) - 1;
            let rel = off - b_offset[ti];
            CopyTag::B { symbol: ti as u32, tuple: (rel / b_len[ti]) as u32, b: (rel % b_len[ti]) as u32 }
        }
    };
    let mut cls = vec![0u32; total];
    for v in 0..total {
        let r = find(&mut parent, v as u32) as usize;
        cls[v] = class_id[r];
        members[class_id[r] as usize].push(tag_of(v));
    }
    let names: Vec<String> = reps
        .iter()
        .map(|&r| match tag_of(r as usize) {
            CopyTag::A { x: xv, a } => format!("{}^({})", t.a.name(a), x.name(xv)),
            CopyTag::B { symbol, tuple, b } => {
                let tup: Vec<&str> = x.relation(symbol as usize).tuple(tuple as usize).iter().map(|&v| x.name(v)).collect();
                format!(
                    "{}^{}({})",
                    t.b[symbol as usize].name(b),
                    t.tau.symbols()[symbol as usize].name,
                    tup.join(",")
                )
            }
        })
        .collect();
    let mut rels = Vec::new();
    for (r, ra) in t.a.relations().iter().enumerate() {
        let mut flat: Vec<u32> = Vec::new();
        for xv in 0..x.len() {
            for ta in ra.iter() {
                flat.extend(ta.iter().map(|&a| cls[xv * na + a as usize]));
            }
        }
        for (ti, b) in t.b.iter().enumerate() {
            for j in 0..x.relation(ti).len() {
                let base = a_total + b_offset[ti] + j * b_len[ti];
                for tb in b.relation(r).iter() {
                    flat.extend(tb.iter().map(|&v| cls[base + v as usize]));
                }
            }
        }
        rels.push(Relation::from_flat(ra.arity(), flat));
    }
    let structure = RelStructure::new(t.rho().clone(), names, rels)?;
    Ok(LeftImage {
        structure,
        a_len: na,
        a_class: cls[..a_total].to_vec(),
        b_offset,
        b_len,
        b_class: cls[a_total..].to_vec(),
        members,
    })
}

/// Whether `ΛX → Y` and whether `X → ΓY`.
pub fn adjunction_oracle(t: &PultrTemplate, x: &RelStructure, y: &RelStructure, budget: Option<u64>) -> Result<(bool, bool)> {
    let lx = left_apply(t, x)?;
    let lambda_side = find_homomorphism(&lx.structure, y, budget)?.is_some();
    let gy = central_apply(t, y, budget)?;
    let gamma_side = find_homomorphism(x, &gy.structure, budget)?.is_some();
    Ok((lambda_side, gamma_side))
}

fn effective_compatibility(q: &QuantumAssignment, vars: usize) -> usize {
    if q.k >= vars {
        usize::MAX
    } else {
        q.k
    }
}

/// `Π_{a ∈ A} Q_{a^(x), h(a)}` in the canonical order of `A`.
pub fn gamma_projector(
    t: &PultrTemplate,
    lam: &LeftImage,
    q: &QuantumAssignment,
    x: u32,
    h: &Homomorphism,
    y: &RelStructure,
) -> PMatrix {
    let mut acc = PMatrix::identity(q.dim);
    for a in 0..t.a.len() as u32 {
        let class = lam.a_class(x, a);
        match q.get(lam.structure.name(class), y.name(h.map[a as usize])) {
            Some(m) => acc = acc.mul(m),
            None => return PMatrix::zero(q.dim),
        }
        if acc.is_zero() {
            return acc;
        }
    }
    acc
}

/// From `ΛX ⇝^{k'} Y` with `k' = (k+1)·diam` to `X ⇝^k ΓY`.
pub fn transfer_gamma(
    t: &PultrTemplate,
    x: &RelStructure,
    lam: &LeftImage,
    q: &QuantumAssignment,
    y: &RelStructure,
    k: usize,
    budget: Option<u64>,
) -> Result<(CentralImage, QuantumAssignment)> {
    let diam = connectivity(t).1.ok_or(Error::NotConnected)?;
    let need = (k + 1) * diam;
    if effective_compatibility(q, lam.structure.len()) < need {
        return Err(Error::CompatibilityTooLow { have: q.k, need });
    }
    let rep = verify_assignment(&lam.structure, y, q, need)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(rep.summary()));
    }
    let gy = central_apply(t, y, budget)?;
    if gy.homs.is_empty() && !x.is_empty() {
        return Err(Error::VerificationFailure("ΓY is empty, so no PVM can exist".into()));
    }
    let mut w = QuantumAssignment::new(q.dim, k);
    for xv in 0..x.len() as u32 {
        w.ensure_variable(x.name(xv));
        for (hi, h) in gy.homs.iter().enumerate() {
            let m = gamma_projector(t, lam, q, xv, h, y);
            w.insert(x.name(xv), gy.structure.name(hi as u32), m);
        }
    }
    Ok((gy, w))
}

/// From `X ⇝^k ΓY` to `ΛX ⇝^k Y`; labels of `q` are hom names of maps `A → Y`.
pub fn transfer_lambda(
    t: &PultrTemplate,
    x: &RelStructure,
    q: &QuantumAssignment,
    y: &RelStructure,
) -> Result<(LeftImage, QuantumAssignment)> {
    if !is_faithful(t) {
        return Err(Error::NotFaithful);
    }
    let lam = left_apply(t, x)?;

    // nonzero labels per variable, with maps interned
    let mut maps: Vec<Homomorphism> = Vec::new();
    let mut map_ids: HashMap<String, u32> = HashMap::new();
    let mut labels: Vec<Vec<(u32, &PMatrix)>> = Vec::with_capacity(x.len());
    for xv in 0..x.len() as u32 {
        let pvm = q.pvm(x.name(xv)).ok_or_else(|| Error::KeyMismatch(format!("no PVM for `{}`", x.name(xv))))?;
        let mut row = Vec::new();
        for (name, m) in pvm {
            let id = match map_ids.get(name) {
                Some(&id) => id,
                None => {
                    let h = parse_hom_name(name, &t.a, y)?;
                    maps.push(h);
                    map_ids.insert(name.clone(), maps.len() as u32 - 1);
                    maps.len() as u32 - 1
                }
            };
            row.push((id, m));
        }
        labels.push(row);
    }

    // b ∈ B_T comes from exactly one (i, a)
    let owner: Vec<Vec<(usize, u32)>> = t
        .b
        .iter()
        .enumerate()
        .map(|(ti, b)| {
            let mut o = vec![(0usize, 0u32); b.len()];
            for (i, e) in t.eps[ti].iter().enumerate() {
                for (a, &v) in e.map.iter().enumerate() {
                    o[v as usize] = (i, a as u32);
                }
            }
            o
        })
        .collect();

    let mut hom_memo: HashMap<(usize, Vec<u32>), bool> = HashMap::new();
    let mut assembled_is_hom = |ti: usize, ids: &[u32]| -> bool {
        *hom_memo.entry((ti, ids.to_vec())).or_insert_with(|| {
            let img = |v: u32| {
                let (i, a) = owner[ti][v as usize];
                maps[ids[i] as usize].map[a as usize]
            };
            t.b[ti].relations().iter().zip(y.relations()).all(|(rb, ry)| {
                rb.iter().all(|tb| {
                    let im: Vec<u32> = tb.iter().map(|&v| img(v)).collect();
                    ry.contains(&im)
                })
            })
        })
    };

    // per tuple of X: surviving label combinations and their products
    let mut combos: Vec<Vec<Vec<(Vec<u32>, PMatrix)>>> = Vec::new();
    for ti in 0..t.b.len() {
        let mut per_tuple = Vec::new();
        for tuple in x.relation(ti).iter() {
            let lists: Vec<&Vec<(u32, &PMatrix)>> = tuple.iter().map(|&v| &labels[v as usize]).collect();
            let mut out = Vec::new();
            if lists.iter().all(|l| !l.is_empty()) {
                let mut idx = vec![0usize; lists.len()];
                'outer: loop {
                    let ids: Vec<u32> = idx.iter().zip(&lists).map(|(&i, l)| l[i].0).collect();
                    if assembled_is_hom(ti, &ids) {
                        let p = PMatrix::product(q.dim, idx.iter().zip(&lists).map(|(&i, l)| l[i].1));
                        if !p.is_zero() {
                            out.push((ids, p));
                        }
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
            per_tuple.push(out);
        }
        combos.push(per_tuple);
    }

    let family = |tag: CopyTag| -> BTreeMap<u32, PMatrix> {
        let mut f: BTreeMap<u32, PMatrix> = BTreeMap::new();
        match tag {
            CopyTag::A { x: xv, a } => {
                for &(id, m) in &labels[xv as usize] {
                    let yv = maps[id as usize].map[a as usize];
                    let e = f.entry(yv).or_insert_with(|| PMatrix::zero(q.dim));
                    *e = e.add(m);
                }
            }
            CopyTag::B { symbol, tuple, b } => {
                let (i, a) = owner[symbol as usize][b as usize];
                for (ids, p) in &combos[symbol as usize][tuple as usize] {
                    let yv = maps[ids[i] as usize].map[a as usize];
                    let e = f.entry(yv).or_insert_with(|| PMatrix::zero(q.dim));
                    *e = e.add(p);
                }
            }
        }
        f.retain(|_, m| !m.is_zero());
        f
    };

    let mut w = QuantumAssignment::new(q.dim, q.k);
    for (c, members) in lam.members.iter().enumerate() {
        let rep = family(members[0]);
        for &m in &members[1..] {
            if family(m) != rep {
                return Err(Error::WellDefinednessViolation(lam.structure.name(c as u32).to_string()));
            }
        }
        let cname = lam.structure.name(c as u32);
        w.ensure_variable(cname);
        for (yv, m) in rep {
            w.insert(cname, y.name(yv), m);
        }
    }
    Ok((lam, w))
}

/// The counit `ΛΓX → X`.
pub fn counit(gx: &CentralImage, lgx: &LeftImage) -> Homomorphism {
    let map = lgx
        .members
        .iter()
        .map(|ms| match ms[0] {
            CopyTag::A { x, a } => gx.homs[x as usize].map[a as usize],
            CopyTag::B { symbol, tuple, b } => gx.witnesses[symbol as usize][tuple as usize].map[b as usize],
        })
        .collect();
    Homomorphism { map }
}

/// The unit `Y → ΓΛY`, `y ↦ (a ↦ [a^(y)])`, as hom names over `ΛY`.
pub fn unit_labels(t: &PultrTemplate, y: &RelStructure, ly: &LeftImage) -> Vec<String> {
    (0..y.len() as u32)
        .map(|yv| {
            let h = Homomorphism { map: (0..t.a.len() as u32).map(|a| ly.a_class(yv, a)).collect() };
            hom_name(&h, &ly.structure)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GammaFunctorOutput {
    pub gx: CentralImage,
    pub gy: CentralImage,
    pub assignment: QuantumAssignment,
}

/// `X ⇝^{k'} Y` with `k' = (k+1)·diam` gives `ΓX ⇝^k ΓY`.
pub fn gamma_functor(
    t: &PultrTemplate,
    x: &RelStructure,
    q: &QuantumAssignment,
    y: &RelStructure,
    k: usize,
    budget: Option<u64>,
) -> Result<GammaFunctorOutput> {
    let diam = connectivity(t).1.ok_or(Error::NotConnected)?;
    let need = (k + 1) * diam;
    if effective_compatibility(q, x.len()) < need {
        return Err(Error::CompatibilityTooLow { have: q.k, need });
    }
    let gx = central_apply(t, x, budget)?;
    let lgx = left_apply(t, &gx.structure)?;
    let eps = counit(&gx, &lgx);
    if !check_homomorphism(&eps, &lgx.structure, x)? {
        return Err(Error::VerificationFailure("counit is not a homomorphism".into()));
    }
    let id = Homomorphism::identity(y.len());
    let lifted = compose_sandwich_unchecked(&lgx.structure, &eps, x, q, y, &id, y)?;
    let k_lift = match effective_compatibility(q, x.len()) {
        usize::MAX => lgx.structure.len().max(need),
        _ => q.k,
    };
    let lifted = lifted.with_k(k_lift);
    let (gy, w) = transfer_gamma(t, &gx.structure, &lgx, &lifted, y, k, budget)?;
    Ok(GammaFunctorOutput { gx, gy, assignment: w })
}

#[derive(Debug, Clone)]
pub struct LambdaFunctorOutput {
    pub lx: LeftImage,
    pub ly: LeftImage,
    pub assignment: QuantumAssignment,
}

/// `X ⇝^k Y` gives `ΛX ⇝^k ΛY` for faithful templates.
pub fn lambda_functor(t: &PultrTemplate, x: &RelStructure, q: &QuantumAssignment, y: &RelStructure) -> Result<LambdaFunctorOutput> {
    if !is_faithful(t) {
        return Err(Error::NotFaithful);
    }
    let ly = left_apply(t, y)?;
    let unit = unit_labels(t, y, &ly);
    let mut lifted = QuantumAssignment::new(q.dim, q.k);
    for xv in 0..x.len() as u32 {
        let xn = x.name(xv);
        let pvm = q.pvm(xn).ok_or_else(|| Error::KeyMismatch(format!("no PVM for `{xn}`")))?;
        let mut acc: BTreeMap<&str, PMatrix> = BTreeMap::new();
        for (label, m) in pvm {
            let yv = y.vertex(label).map_err(|_| Error::KeyMismatch(format!("`{label}` is not a label")))?;
            let e = acc.entry(unit[yv as usize].as_str()).or_insert_with(|| PMatrix::zero(q.dim));
            *e = e.add(m);
        }
        for (l, m) in acc {
            lifted.insert(xn, l, m);
        }
    }
    let (lx, w) = transfer_lambda(t, x, &lifted, &ly.structure)?;
    Ok(LambdaFunctorOutput { lx, ly, assignment: w })
}

/// `A` a single edge, `B` a directed 2-path, `ε` its two edges; `Γ` is the line digraph.
pub fn line_digraph_template() -> PultrTemplate {
    let a = RelStructure::digraph(vec!["t".into(), "h".into()], &[(0, 1)]);
    let b = RelStructure::digraph(vec!["0".into(), "1".into(), "2".into()], &[(0, 1), (1, 2)]);
    let eps = vec![Homomorphism { map: vec![0, 1] }, Homomorphism { map: vec![1, 2] }];
    PultrTemplate::new(Signature::binary("E"), a, vec![b], vec![eps]).expect("valid template")
}

/// `A` the vertices of `G` without edges, `B = G × K₂`, `ε` the two layers.
pub fn exponential_template(g: &RelStructure) -> Result<PultrTemplate> {
    let e = g.edges()?;
    let n = g.len();
    let a = RelStructure::digraph(g.domain().to_vec(), &[]);
    let names: Vec<String> = (0..2).flat_map(|s| g.domain().iter().map(move |v| format!("{v}.{s}"))).collect();
    let mut edges = Vec::new();
    for t in e.iter() {
        edges.push((t[0], n as u32 + t[1]));
        edges.push((n as u32 + t[0], t[1]));
    }
    let b = RelStructure::digraph(names, &edges);
    let eps = vec![
        Homomorphism { map: (0..n as u32).collect() },
        Homomorphism { map: (n as u32..2 * n as u32).collect() },
    ];
    PultrTemplate::new(Signature::binary("E"), a, vec![b], vec![eps])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateShape {
    Any,
    /// Copies of a connected `A` glued together.
    Connected,
    /// Disjoint copies of `A` plus edges between copies.
    Faithful,
}

/// Small random template over one binary symbol `E`: `|A| ≤ 3`, `|B_T| ≤ 4`, `|τ| ≤ 2`.
pub fn random_template<R: rand::Rng + ?Sized>(rng: &mut R, shape: TemplateShape) -> PultrTemplate {
    loop {
        if let Some(t) = try_random_template(rng, shape) {
            return t;
        }
    }
}

fn try_random_template<R: rand::Rng + ?Sized>(rng: &mut R, shape: TemplateShape) -> Option<PultrTemplate> {
    let ntau = rng.gen_range(1..=2);
    let arities: Vec<usize> = (0..ntau).map(|_| rng.gen_range(1..=2)).collect();
    let tau = Signature::new(
        arities.iter().zip(["S", "T"]).map(|(&arity, name)| Symbol { name: name.into(), arity }).collect(),
    )
    .ok()?;
    let max_a = match shape {
        TemplateShape::Faithful => 4 / arities.iter().max().copied().unwrap_or(1),
        _ => 3,
    };
    let na = rng.gen_range(1..=max_a.min(3));
    let mut a_edges: Vec<(u32, u32)> = Vec::new();
    for u in 0..na as u32 {
        for v in 0..na as u32 {
            if rng.gen_bool(0.35) {
                a_edges.push((u, v));
            }
        }
    }
    if shape == TemplateShape::Connected {
        for u in 1..na as u32 {
            a_edges.push(if rng.gen_bool(0.5) { (u - 1, u) } else { (u, u - 1) });
        }
    }
    let a = RelStructure::digraph((0..na).map(|i| format!("a{i}")).collect(), &a_edges);

    let mut bs = Vec::new();
    let mut eps = Vec::new();
    for &r in &arities {
        let (nb, maps, mut edges) = match shape {
            TemplateShape::Any => {
                let nb = rng.gen_range(1..=4);
                let maps: Vec<Vec<u32>> = (0..r).map(|_| (0..na).map(|_| rng.gen_range(0..nb as u32)).collect()).collect();
                (nb, maps, Vec::new())
            }
            TemplateShape::Faithful => {
                let maps: Vec<Vec<u32>> = (0..r).map(|i| (0..na as u32).map(|a| (i * na) as u32 + a).collect()).collect();
                let mut cross = Vec::new();
                for u in 0..r * na {
                    for v in 0..r * na {
                        if u / na != v / na && rng.gen_bool(0.3) {
                            cross.push((u as u32, v as u32));
                        }
                    }
                }
                (r * na, maps, cross)
            }
            TemplateShape::Connected => {
                // copy 0 is the identity; later copies glue at least one vertex onto earlier ones
                let mut maps: Vec<Vec<u32>> = vec![(0..na as u32).collect()];
                let mut nb = na;
                for _ in 1..r {
                    let anchor = rng.gen_range(0..na);
                    let mut m = Vec::with_capacity(na);
                    for a in 0..na {
                        if a == anchor || (nb >= 4 && nb + na - m.len() > 4) || rng.gen_bool(0.3) {
                            m.push(rng.gen_range(0..nb as u32));
                        } else {
                            m.push(nb as u32);
                            nb += 1;
                        }
                    }
                    if nb > 4 {
                        return None;
                    }
                    maps.push(m);
                }
                (nb, maps, Vec::new())
            }
        };
        for m in &maps {
            edges.extend(a_edges.iter().map(|&(u, v)| (m[u as usize], m[v as usize])));
        }
        if shape == TemplateShape::Any {
            for u in 0..nb as u32 {
                for v in 0..nb as u32 {
                    if rng.gen_bool(0.15) {
                        edges.push((u, v));
                    }
                }
            }
        }
        bs.push(RelStructure::digraph((0..nb).map(|i| format!("b{i}")).collect(), &edges));
        eps.push(maps.into_iter().map(|map| Homomorphism { map }).collect());
    }
    let t = PultrTemplate::new(tau, a, bs, eps).ok()?;
    let flags = template_predicates(&t);
    match shape {
        TemplateShape::Connected if !flags.connected => None,
        TemplateShape::Faithful if !flags.faithful => None,
        _ => Some(t),
    }
}
