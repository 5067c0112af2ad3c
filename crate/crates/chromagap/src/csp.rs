//! Weighted CSP instances, their classical values, label-cover classification
//! and the compatibility augmentation.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relstruct::{bfs, gaifman_adjacency, Relation, RelStructure, Symbol};

/// Allowed tuples as a dense bitset keyed by the mixed-radix tuple index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    arity: usize,
    n: usize,
    bits: Vec<u64>,
}

impl Predicate {
    pub fn empty(arity: usize, n: usize) -> Self {
        let size = n.pow(arity as u32);
        Predicate { arity, n, bits: vec![0; size.div_ceil(64).max(1)] }
    }

    pub fn full(arity: usize, n: usize) -> Self {
        let mut p = Predicate::empty(arity, n);
        for i in 0..n.pow(arity as u32) {
            p.bits[i / 64] |= 1 << (i % 64);
        }
        p
    }

    pub fn from_tuples<I, T>(arity: usize, n: usize, tuples: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u32]>,
    {
        let mut p = Predicate::empty(arity, n);
        for t in tuples {
            p.insert(t.as_ref());
        }
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    fn index(&self, t: &[u32]) -> usize {
        debug_assert_eq!(t.len(), self.arity);
        t.iter().fold(0usize, |acc, &a| acc * self.n + a as usize)
    }

    pub fn insert(&mut self, t: &[u32]) {
        let i = self.index(t);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        let i = self.index(t);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.n.pow(self.arity as u32)
    }

    /// Allowed tuples in lexicographic order.
    pub fn tuples(&self) -> Vec<Vec<u32>> {
        let total = self.n.pow(self.arity as u32);
        let mut out = Vec::new();
        for i in 0..total {
            if self.bits[i / 64] >> (i % 64) & 1 == 1 {
                let mut t = vec![0u32; self.arity];
                let mut r = i;
                for slot in t.iter_mut().rev() {
                    *slot = (r % self.n) as u32;
                    r /= self.n;
                }
                out.push(t);
            }
        }
        out
    }

    /// For a binary predicate: the set of allowed second labels per first label.
    pub fn row_masks(&self) -> Vec<u64> {
        assert_eq!(self.arity, 2);
        assert!(self.n <= 64, "row masks need at most 64 labels");
        let mut rows = vec![0u64; self.n];
        for t in self.tuples() {
            rows[t[0] as usize] |= 1 << t[1];
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: Vec<u32>,
    pub predicate: Predicate,
    pub weight: BigRational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    variables: Vec<String>,
    alphabet: Vec<String>,
    constraints: Vec<Constraint>,
}

/// A constraint before weight normalisation.
#[derive(Debug, Clone)]
pub struct RawConstraint {
    pub scope: Vec<u32>,
    pub predicate: Predicate,
    pub weight: Option<BigRational>,
}

impl CspInstance {
    /// Weights are normalised to sum to one; all absent means uniform.
    pub fn new(variables: Vec<String>, alphabet: Vec<String>, raw: Vec<RawConstraint>) -> Result<Self> {
        let n = alphabet.len();
        for c in &raw {
            if c.scope.len() != c.predicate.arity() || c.predicate.alphabet_size() != n {
                return Err(Error::Invalid("predicate shape does not match scope or alphabet".into()));
            }
            if c.scope.iter().any(|&v| v as usize >= variables.len()) {
                return Err(Error::Invalid("scope leaves the variable set".into()));
            }
        }
        let given = raw.iter().filter(|c| c.weight.is_some()).count();
        let weights: Vec<BigRational> = if given == 0 {
            let m = raw.len().max(1);
            vec![BigRational::new(BigInt::one(), BigInt::from(m)); raw.len()]
        } else if given == raw.len() {
            let ws: Vec<BigRational> = raw.iter().map(|c| c.weight.clone().unwrap()).collect();
            if ws.iter().any(|w| !w.is_positive()) {
                return Err(Error::Invalid("weights must be strictly positive".into()));
            }
            let total: BigRational = ws.iter().cloned().sum();
            ws.into_iter().map(|w| w / &total).collect()
        } else {
            return Err(Error::Invalid("either every constraint or none carries a weight".into()));
        };
        let constraints = raw
            .into_iter()
            .zip(weights)
            .map(|(c, weight)| Constraint { scope: c.scope, predicate: c.predicate, weight })
            .collect();
        let mut seen = std::collections::HashSet::new();
        for v in &variables {
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("duplicate variable `{v}`")));
            }
        }
        Ok(CspInstance { variables, alphabet, constraints })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn variable_index(&self, name: &str) -> Option<u32> {
        self.variables.iter().position(|v| v == name).map(|i| i as u32)
    }

    /// `sat_f` for a classical assignment given by label indices.
    pub fn value_of(&self, f: &[u32]) -> BigRational {
        let mut total = BigRational::zero();
        let mut buf = Vec::new();
        for c in &self.constraints {
            buf.clear();
            buf.extend(c.scope.iter().map(|&v| f[v as usize]));
            if c.predicate.contains(&buf) {
                total += &c.weight;
            }
        }
        total
    }

    pub fn is_binary(&self) -> Result<()> {
        match self.constraints.iter().position(|c| c.scope.len() != 2) {
            Some(i) => Err(Error::NotBinary(i)),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> CspJson {
        let constraints = self
            .constraints
            .iter()
            .map(|c| ConstraintJson {
                scope: c.scope.iter().map(|&v| self.variables[v as usize].clone()).collect(),
                allowed: c
                    .predicate
                    .tuples()
                    .into_iter()
                    .map(|t| t.into_iter().map(|a| self.alphabet[a as usize].clone()).collect())
                    .collect(),
                weight: Some(c.weight.to_string()),
            })
            .collect();
        CspJson { variables: self.variables.clone(), alphabet: self.alphabet.clone(), constraints }
    }

    pub fn from_json(j: &CspJson) -> Result<Self> {
        let vidx: HashMap<&str, u32> = j.variables.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();
        let aidx: HashMap<&str, u32> = j.alphabet.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();
        let n = j.alphabet.len();
        let mut raw = Vec::new();
        for c in &j.constraints {
            let scope: Vec<u32> = c
                .scope
                .iter()
                .map(|v| vidx.get(v.as_str()).copied().ok_or_else(|| Error::UnknownVertex(v.clone())))
                .collect::<Result<_>>()?;
            let mut pred = Predicate::empty(scope.len(), n);
            for t in &c.allowed {
                if t.len() != scope.len() {
                    return Err(Error::Invalid("allowed tuple of wrong length".into()));
                }
                let t: Vec<u32> = t
                    .iter()
                    .map(|a| aidx.get(a.as_str()).copied().ok_or_else(|| Error::Invalid(format!("unknown label `{a}`"))))
                    .collect::<Result<_>>()?;
                pred.insert(&t);
            }
            let weight = match &c.weight {
                Some(w) => Some(parse_rational(w)?),
                None => None,
            };
            raw.push(RawConstraint { scope, predicate: pred, weight });
        }
        CspInstance::new(j.variables.clone(), j.alphabet.clone(), raw)
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub scope: Vec<String>,
    pub allowed: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CspJson {
    pub variables: Vec<String>,
    pub alphabet: Vec<String>,
    pub constraints: Vec<ConstraintJson>,
}

/// Weights over a common denominator as machine integers.
fn integer_weights(phi: &CspInstance) -> Result<(Vec<u128>, BigInt)> {
    let mut den = BigInt::one();
    for c in phi.constraints() {
        den = num_integer::Integer::lcm(&den, c.weight.denom());
    }
    let mut out = Vec::new();
    for c in phi.constraints() {
        let v = (&c.weight * BigRational::from_integer(den.clone())).to_integer();
        out.push(v.to_u128().ok_or_else(|| Error::Invalid("weights too fine for exact search".into()))?);
    }
    Ok((out, den))
}

/// Exact maximum weighted fraction of satisfied constraints (branch and bound).
pub fn sat_value(phi: &CspInstance, budget: Option<u64>) -> Result<BigRational> {
    Ok(sat_optimum(phi, budget)?.0)
}

/// Optimal value and the lexicographically least optimal assignment.
pub fn sat_optimum(phi: &CspInstance, budget: Option<u64>) -> Result<(BigRational, Vec<u32>)> {
    let nv = phi.variables.len();
    if phi.constraints.is_empty() {
        return Ok((BigRational::one(), vec![0; nv]));
    }
    let (w, den) = integer_weights(phi)?;
    // constraints become decidable once their last scope variable is fixed
    let mut closing: Vec<Vec<usize>> = vec![Vec::new(); nv + 1];
    for (i, c) in phi.constraints.iter().enumerate() {
        let last = c.scope.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
        closing[last].push(i);
    }
    let mut remaining = vec![0u128; nv + 2];
    for d in (0..=nv).rev() {
        remaining[d] = remaining[d + 1] + closing[d].iter().map(|&i| w[i]).sum::<u128>();
    }
    let base: u128 = closing[0]
        .iter()
        .filter(|&&i| phi.constraints[i].predicate.contains(&[]))
        .map(|&i| w[i])
        .sum();
    struct St<'a> {
        phi: &'a CspInstance,
        w: &'a [u128],
        closing: &'a [Vec<usize>],
        remaining: &'a [u128],
        f: Vec<u32>,
        best: u128,
        best_f: Vec<u32>,
        nodes: u64,
        budget: Option<u64>,
        buf: Vec<u32>,
    }
    fn go(st: &mut St, depth: usize, acc: u128) -> Result<()> {
        if acc + st.remaining[depth + 1] <= st.best && !st.best_f.is_empty() {
            return Ok(());
        }
        if depth == st.f.len() {
            if acc > st.best || st.best_f.is_empty() {
                st.best = acc;
                st.best_f = st.f.clone();
            }
            return Ok(());
        }
        for a in 0..st.phi.alphabet.len() as u32 {
            st.nodes += 1;
            if st.budget.is_some_and(|b| st.nodes > b) {
                return Err(Error::SearchBudgetExceeded(st.budget.unwrap()));
            }
            st.f[depth] = a;
            let mut gain = 0;
            for &ci in &st.closing[depth + 1] {
                let c = &st.phi.constraints[ci];
                st.buf.clear();
                st.buf.extend(c.scope.iter().map(|&v| st.f[v as usize]));
                if c.predicate.contains(&st.buf) {
                    gain += st.w[ci];
                }
            }
            go(st, depth + 1, acc + gain)?;
        }
        Ok(())
    }
    let mut st = St {
        phi,
        w: &w,
        closing: &closing,
        remaining: &remaining,
        f: vec![0; nv],
        best: 0,
        best_f: Vec::new(),
        nodes: 0,
        budget,
        buf: Vec::new(),
    };
    let _ = st.w;
    go(&mut st, 0, base)?;
    let value = BigRational::new(BigInt::from(st.best), den);
    Ok((value, st.best_f))
}

fn subsets_of_size(n: usize, t: usize) -> Vec<u64> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(cur);
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            rec(i + 1, n, left - 1, cur | 1 << i, out);
        }
    }
    rec(0, n, t, 0, &mut out);
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best relative size of a set `S` whose induced constraints (both endpoints in
/// `S`) are satisfied by some assignment of label sets of size at most `t`.
pub fn isat_value(phi: &CspInstance, t: usize, budget: Option<u64>) -> Result<BigRational> {
    phi.is_binary()?;
    let nv = phi.variables.len();
    if nv == 0 {
        return Ok(BigRational::one());
    }
    let na = phi.alphabet.len();
    // larger label sets only help, so use sets of size exactly min(t, |A|)
    let cands = subsets_of_size(na, t.min(na));
    let rows: Vec<Vec<u64>> = phi.constraints.iter().map(|c| c.predicate.row_masks()).collect();
    let ok = |ci: usize, p: u64, q: u64| -> bool {
        let mut m = p;
        while m != 0 {
            let a = m.trailing_zeros() as usize;
            if rows[ci][a] & q != 0 {
                return true;
            }
            m &= m - 1;
        }
        false
    };
    let mut nodes = 0u64;
    for s in (1..=nv).rev() {
        for set in combinations(nv, s) {
            let mut in_s = vec![false; nv];
            for &v in &set {
                in_s[v] = true;
            }
            let induced: Vec<usize> = (0..phi.constraints.len())
                .filter(|&i| phi.constraints[i].scope.iter().all(|&v| in_s[v as usize]))
                .collect();
            let mut incid: Vec<Vec<usize>> = vec![Vec::new(); nv];
            for &ci in &induced {
                let sc = &phi.constraints[ci].scope;
                incid[sc[0] as usize].push(ci);
                if sc[1] != sc[0] {
                    incid[sc[1] as usize].push(ci);
                }
            }
            let mut doms: Vec<Vec<usize>> = vec![(0..cands.len()).collect(); nv];
            let mut assign: Vec<Option<usize>> = vec![None; nv];
            fn go(
                i: usize,
                set: &[usize],
                doms: &mut Vec<Vec<usize>>,
                assign: &mut Vec<Option<usize>>,
                incid: &[Vec<usize>],
                phi: &CspInstance,
                cands: &[u64],
                ok: &dyn Fn(usize, u64, u64) -> bool,
                nodes: &mut u64,
                budget: Option<u64>,
            ) -> Result<bool> {
                if i == set.len() {
                    return Ok(true);
                }
                let v = set[i];
                let options = doms[v].clone();
                for ci in options {
                    *nodes += 1;
                    if budget.is_some_and(|b| *nodes > b) {
                        return Err(Error::SearchBudgetExceeded(budget.unwrap()));
                    }
                    assign[v] = Some(ci);
                    let saved: Vec<(usize, Vec<usize>)> = incid[v]
                        .iter()
                        .flat_map(|&c| phi.constraints[c].scope.iter().map(|&u| u as usize))
                        .filter(|&u| assign[u].is_none())
                        .map(|u| (u, doms[u].clone()))
                        .collect();
                    let mut alive = true;
                    for &c in &incid[v] {
                        let sc = &phi.constraints[c].scope;
                        let (a, b) = (sc[0] as usize, sc[1] as usize);
                        match (assign[a], assign[b]) {
                            (Some(p), Some(q)) => {
                                if !ok(c, cands[p], cands[q]) {
                                    alive = false;
                                }
                            }
                            (Some(p), None) => {
                                doms[b].retain(|&q| ok(c, cands[p], cands[q]));
                                alive &= !doms[b].is_empty();
                            }
                            (None, Some(q)) => {
                                doms[a].retain(|&p| ok(c, cands[p], cands[q]));
                                alive &= !doms[a].is_empty();
                            }
                            (None, None) => {}
                        }
                        if !alive {
                            break;
                        }
                    }
                    if alive && go(i + 1, set, doms, assign, incid, phi, cands, ok, nodes, budget)? {
                        return Ok(true);
                    }
                    for (u, d) in saved.into_iter().rev() {
                        doms[u] = d;
                    }
                    assign[v] = None;
                }
                Ok(false)
            }
            if go(0, &set, &mut doms, &mut assign, &incid, phi, &cands, &ok, &mut nodes, budget)? {
                return Ok(BigRational::new(BigInt::from(s), BigInt::from(nv)));
            }
        }
    }
    Ok(BigRational::zero())
}

/// Block form `P_μ (I_m ⊗ J_d) P_ν` of one binary predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockForm {
    pub m: usize,
    pub d: usize,
    /// `mu[j]` is the label at position `j`.
    pub mu: Vec<u32>,
    pub nu: Vec<u32>,
}

impl BlockForm {
    /// Re-expands the block matrix into a predicate.
    pub fn expand(&self) -> Predicate {
        let n = self.mu.len();
        let mut p = Predicate::empty(2, n);
        for i in 0..n {
            for j in 0..n {
                if i / self.d == j / self.d {
                    p.insert(&[self.mu[i], self.nu[j]]);
                }
            }
        }
        p
    }

    /// Labels of block `i` (0-based) on each side.
    pub fn block(&self, i: usize) -> (&[u32], &[u32]) {
        (&self.mu[i * self.d..(i + 1) * self.d], &self.nu[i * self.d..(i + 1) * self.d])
    }
}

/// The least-lexicographic `(μ, ν)` realising the predicate, if it is d-to-d.
pub fn block_form(p: &Predicate) -> Option<BlockForm> {
    if p.arity() != 2 {
        return None;
    }
    let n = p.alphabet_size();
    if n == 0 {
        return None;
    }
    let rows = p.row_masks();
    let d = rows[0].count_ones() as usize;
    if d == 0 || n % d != 0 || rows.iter().any(|r| r.count_ones() as usize != d) {
        return None;
    }
    let mut groups: Vec<(u64, Vec<u32>)> = Vec::new();
    for (a, &r) in rows.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(a as u32),
            None => {
                if groups.iter().any(|g| g.0 & r != 0) {
                    return None;
                }
                groups.push((r, vec![a as u32]));
            }
        }
    }
    if groups.iter().any(|g| g.1.len() != d) {
        return None;
    }
    let mut mu = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    for (mask, labels) in &groups {
        mu.extend(labels);
        nu.extend((0..n as u32).filter(|&b| mask >> b & 1 == 1));
    }
    Some(BlockForm { m: n / d, d, mu, nu })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtoD {
    pub m: usize,
    pub d: usize,
    pub forms: Vec<BlockForm>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelCoverProfile {
    /// `(X₁, X₂)`: every constraint runs from `X₁` to `X₂`.
    pub bipartite: Option<(Vec<u32>, Vec<u32>)>,
    /// `(A₁, A₂)`.
    pub projective: Option<(Vec<u32>, Vec<u32>)>,
    pub d_to_1: Option<usize>,
    pub d_to_d: Option<DtoD>,
}

pub fn classify_label_cover(phi: &CspInstance) -> Result<LabelCoverProfile> {
    phi.is_binary()?;
    let nv = phi.variables.len();
    let na = phi.alphabet.len();
    let mut prof = LabelCoverProfile::default();

    let mut is_src = vec![false; nv];
    let mut is_dst = vec![false; nv];
    for c in &phi.constraints {
        is_src[c.scope[0] as usize] = true;
        is_dst[c.scope[1] as usize] = true;
    }
    if (0..nv).all(|v| !(is_src[v] && is_dst[v])) {
        let x1 = (0..nv as u32).filter(|&v| !is_dst[v as usize]).collect();
        let x2 = (0..nv as u32).filter(|&v| is_dst[v as usize]).collect();
        prof.bipartite = Some((x1, x2));
    }

    if prof.bipartite.is_some() {
        let mut first = vec![false; na];
        for c in &phi.constraints {
            for t in c.predicate.tuples() {
                first[t[0] as usize] = true;
            }
        }
        let a1: Vec<u32> = (0..na as u32).filter(|&a| first[a as usize]).collect();
        let a2: Vec<u32> = (0..na as u32).filter(|&a| !first[a as usize]).collect();
        let projective = phi.constraints.iter().all(|c| {
            let rows = c.predicate.row_masks();
            a1.iter().all(|&a| {
                let r = rows[a as usize];
                r.count_ones() == 1 && !first[r.trailing_zeros() as usize]
            }) && a2.iter().all(|&a| rows[a as usize] == 0)
        });
        if projective {
            let d_of = |c: &Constraint, b: u32| c.predicate.tuples().iter().filter(|t| t[1] == b).count();
            let d = phi.constraints.first().and_then(|c| a2.first().map(|&b| d_of(c, b)));
            if let Some(d) = d {
                if phi.constraints.iter().all(|c| a2.iter().all(|&b| d_of(c, b) == d)) {
                    prof.d_to_1 = Some(d);
                }
            }
            prof.projective = Some((a1, a2));
        }
    }

    let forms: Option<Vec<BlockForm>> = phi.constraints.iter().map(|c| block_form(&c.predicate)).collect();
    if let Some(forms) = forms {
        if let Some(first) = forms.first() {
            let d = first.d;
            if forms.iter().all(|f| f.d == d) {
                prof.d_to_d = Some(DtoD { m: na / d, d, forms });
            }
        }
    }
    Ok(prof)
}

/// Adds a full binary constraint on every pair at Gaifman distance at most `k`;
/// originals keep half their weight, the `α` new ones share the other half.
pub fn augment_k(phi: &CspInstance, k: usize) -> CspInstance {
    let (x, _) = to_structures(phi);
    let adj = gaifman_adjacency(&x);
    let na = phi.alphabet.len();
    let mut pairs = Vec::new();
    for u in 0..x.len() as u32 {
        let dist = bfs(&adj, u, Some(k));
        for v in u + 1..x.len() as u32 {
            if dist[v as usize].is_some_and(|d| d <= k) {
                pairs.push((u, v));
            }
        }
    }
    if pairs.is_empty() {
        return phi.clone();
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let alpha = BigRational::from_integer(BigInt::from(pairs.len()));
    let mut constraints: Vec<Constraint> = phi
        .constraints
        .iter()
        .map(|c| Constraint { scope: c.scope.clone(), predicate: c.predicate.clone(), weight: &c.weight * &half })
        .collect();
    let w_new = &half / &alpha;
    for (u, v) in pairs {
        constraints.push(Constraint { scope: vec![u, v], predicate: Predicate::full(2, na), weight: w_new.clone() });
    }
    CspInstance { variables: phi.variables.clone(), alphabet: phi.alphabet.clone(), constraints }
}

/// `(X, A)` with one symbol per distinct predicate table, plus the symbol index
/// chosen for each constraint.
pub fn to_structures(phi: &CspInstance) -> (RelStructure, RelStructure) {
    let (x, a, _) = to_structures_indexed(phi);
    (x, a)
}

pub fn to_structures_indexed(phi: &CspInstance) -> (RelStructure, RelStructure, Vec<String>) {
    let mut tables: Vec<&Predicate> = Vec::new();
    let mut which = Vec::new();
    for c in &phi.constraints {
        let i = match tables.iter().position(|p| *p == &c.predicate) {
            Some(i) => i,
            None => {
                tables.push(&c.predicate);
                tables.len() - 1
            }
        };
        which.push(i);
    }
    let names: Vec<String> = (0..tables.len()).map(|i| format!("P{i}")).collect();
    let symbols: Vec<Symbol> =
        tables.iter().zip(&names).map(|(p, n)| Symbol { name: n.clone(), arity: p.arity() }).collect();
    let sig = crate::relstruct::Signature::new(symbols).expect("fresh names");
    let mut xrels = Vec::new();
    let mut arels = Vec::new();
    for sym in sig.symbols() {
        let ti = names.iter().position(|n| n == &sym.name).unwrap();
        let scopes = phi.constraints.iter().zip(&which).filter(|(_, &w)| w == ti).map(|(c, _)| c.scope.clone());
        xrels.push(Relation::from_tuples(sym.arity, scopes));
        arels.push(Relation::from_tuples(sym.arity, tables[ti].tuples()));
    }
    let x = RelStructure::new(sig.clone(), phi.variables.clone(), xrels).expect("scopes in range");
    let a = RelStructure::new(sig, phi.alphabet.clone(), arels).expect("labels in range");
    let per_constraint = which.into_iter().map(|i| names[i].clone()).collect();
    (x, a, per_constraint)
}

/// Constraints enumerated by symbol then tuple order; `weights` aligned with it.
pub fn from_structures(x: &RelStructure, a: &RelStructure, weights: Option<Vec<BigRational>>) -> Result<CspInstance> {
    if x.signature() != a.signature() {
        return Err(Error::SignatureMismatch("structures disagree on signature".into()));
    }
    let n = a.len();
    let mut raw = Vec::new();
    for (rx, ra) in x.relations().iter().zip(a.relations()) {
        let pred = Predicate::from_tuples(rx.arity(), n, ra.iter());
        for t in rx.iter() {
            raw.push(RawConstraint { scope: t.to_vec(), predicate: pred.clone(), weight: None });
        }
    }
    if let Some(ws) = weights {
        if ws.len() != raw.len() {
            return Err(Error::Invalid("one weight per tuple expected".into()));
        }
        for (r, w) in raw.iter_mut().zip(ws) {
            r.weight = Some(w);
        }
    }
    CspInstance::new(x.domain().to_vec(), a.domain().to_vec(), raw)
}

/// Labels `0..n` named by their decimal index.
pub fn numeric_alphabet(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Marginal weight of each variable on the first scope position.
pub fn left_marginals(phi: &CspInstance) -> BTreeMap<u32, BigRational> {
    let mut m = BTreeMap::new();
    for c in &phi.constraints {
        *m.entry(c.scope[0]).or_insert_with(BigRational::zero) += &c.weight;
    }
    m
}
