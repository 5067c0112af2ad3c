//! Finite relational structures, homomorphism search and graph utilities.
//!
//! Vertices are strings; the order of `domain` is the canonical order used by
//! every search, so witnesses are reproducible.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// Relation symbols, kept sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new(mut symbols: Vec<Symbol>) -> Result<Self> {
        symbols.sort();
        for w in symbols.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::Invalid(format!("duplicate symbol `{}`", w[0].name)));
            }
        }
        if let Some(s) = symbols.iter().find(|s| s.arity == 0) {
            return Err(Error::Invalid(format!("symbol `{}` has arity 0", s.name)));
        }
        Ok(Signature { symbols })
    }

    pub fn binary(name: &str) -> Self {
        Signature { symbols: vec![Symbol { name: name.to_string(), arity: 2 }] }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn is_graph(&self) -> bool {
        self.symbols.len() == 1 && self.symbols[0].arity == 2
    }
}

/// A duplicate-free set of tuples stored flat and sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    flat: Vec<u32>,
}

impl Relation {
    pub fn empty(arity: usize) -> Self {
        Relation { arity, flat: Vec::new() }
    }

    pub fn from_tuples<I, T>(arity: usize, tuples: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u32]>,
    {
        let mut flat = Vec::new();
        for t in tuples {
            let t = t.as_ref();
            assert_eq!(t.len(), arity, "tuple length does not match arity");
            flat.extend_from_slice(t);
        }
        Relation::from_flat(arity, flat)
    }

    /// Tuples laid end to end; sorted and deduplicated here.
    pub fn from_flat(arity: usize, flat: Vec<u32>) -> Self {
        assert!(arity > 0 && flat.len() % arity == 0, "flat length does not match arity");
        let n = flat.len() / arity;
        let row = |i: u32| &flat[i as usize * arity..(i as usize + 1) * arity];
        if (1..n as u32).all(|i| row(i - 1) < row(i)) {
            return Relation { arity, flat };
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
        order.dedup_by(|a, b| row(*a) == row(*b));
        let mut out = Vec::with_capacity(order.len() * arity);
        for i in order {
            out.extend_from_slice(row(i));
        }
        Relation { arity, flat: out }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.flat.len() / self.arity
        }
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn tuple(&self, i: usize) -> &[u32] {
        &self.flat[i * self.arity..(i + 1) * self.arity]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.flat.chunks_exact(self.arity.max(1))
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.tuple(mid).cmp(t) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelStructure {
    signature: Signature,
    domain: Vec<String>,
    index: HashMap<String, u32>,
    relations: Vec<Relation>,
}

impl RelStructure {
    /// `relations` is aligned with `signature.symbols()`.
    pub fn new(signature: Signature, domain: Vec<String>, relations: Vec<Relation>) -> Result<Self> {
        if relations.len() != signature.len() {
            return Err(Error::SignatureMismatch("one relation per symbol expected".into()));
        }
        let mut index = HashMap::with_capacity(domain.len());
        for (i, v) in domain.iter().enumerate() {
            if index.insert(v.clone(), i as u32).is_some() {
                return Err(Error::Invalid(format!("duplicate vertex `{v}`")));
            }
        }
        for (sym, rel) in signature.symbols().iter().zip(&relations) {
            if rel.arity() != sym.arity {
                return Err(Error::Invalid(format!("relation `{}` has wrong arity", sym.name)));
            }
            if rel.flat.iter().any(|&v| v as usize >= domain.len()) {
                return Err(Error::Invalid(format!("relation `{}` leaves the domain", sym.name)));
            }
        }
        Ok(RelStructure { signature, domain, index, relations })
    }

    /// Builds from vertex names; relations given by symbol name.
    pub fn from_named(
        symbols: Vec<Symbol>,
        domain: Vec<String>,
        tuples: &BTreeMap<String, Vec<Vec<String>>>,
    ) -> Result<Self> {
        let signature = Signature::new(symbols)?;
        let index: HashMap<&str, u32> =
            domain.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();
        for name in tuples.keys() {
            if signature.index_of(name).is_none() {
                return Err(Error::SignatureMismatch(format!("unknown symbol `{name}`")));
            }
        }
        let mut relations = Vec::new();
        for sym in signature.symbols() {
            let mut rows = Vec::new();
            for t in tuples.get(&sym.name).map(|v| v.as_slice()).unwrap_or(&[]) {
                if t.len() != sym.arity {
                    return Err(Error::Invalid(format!("tuple of wrong length in `{}`", sym.name)));
                }
                let row: Vec<u32> = t
                    .iter()
                    .map(|v| index.get(v.as_str()).copied().ok_or_else(|| Error::UnknownVertex(v.clone())))
                    .collect::<Result<_>>()?;
                rows.push(row);
            }
            relations.push(Relation::from_tuples(sym.arity, rows));
        }
        RelStructure::new(signature, domain, relations)
    }

    /// Single binary symbol `E` over the given names.
    pub fn digraph(domain: Vec<String>, edges: &[(u32, u32)]) -> Self {
        let rel = Relation::from_tuples(2, edges.iter().map(|&(a, b)| [a, b]));
        RelStructure::new(Signature::binary("E"), domain, vec![rel]).expect("valid digraph")
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn name(&self, v: u32) -> &str {
        &self.domain[v as usize]
    }

    pub fn vertex(&self, name: &str) -> Result<u32> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn relation(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&Relation> {
        self.signature.index_of(name).map(|i| &self.relations[i])
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// The only relation of a digraph.
    pub fn edges(&self) -> Result<&Relation> {
        if !self.signature.is_graph() {
            return Err(Error::NotAGraphSignature);
        }
        Ok(&self.relations[0])
    }

    pub fn to_json(&self) -> StructureJson {
        let mut relations = BTreeMap::new();
        for (sym, rel) in self.signature.symbols().iter().zip(&self.relations) {
            let rows = rel.iter().map(|t| t.iter().map(|&v| self.name(v).to_string()).collect()).collect();
            relations.insert(sym.name.clone(), rows);
        }
        StructureJson {
            signature: self.signature.symbols().to_vec(),
            domain: self.domain.clone(),
            relations,
        }
    }

    pub fn from_json(j: &StructureJson) -> Result<Self> {
        RelStructure::from_named(j.signature.clone(), j.domain.clone(), &j.relations)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureJson {
    pub signature: Vec<Symbol>,
    pub domain: Vec<String>,
    pub relations: BTreeMap<String, Vec<Vec<String>>>,
}

/// A total map between domains, by vertex index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Homomorphism {
    pub map: Vec<u32>,
}

impl Homomorphism {
    pub fn identity(n: usize) -> Self {
        Homomorphism { map: (0..n as u32).collect() }
    }

    pub fn from_names(x: &RelStructure, y: &RelStructure, f: &BTreeMap<String, String>) -> Result<Self> {
        let mut map = Vec::with_capacity(x.len());
        for v in x.domain() {
            let img = f.get(v).ok_or_else(|| Error::PartialMap(v.clone()))?;
            map.push(y.vertex(img)?);
        }
        Ok(Homomorphism { map })
    }

    pub fn to_names(&self, x: &RelStructure, y: &RelStructure) -> BTreeMap<String, String> {
        x.domain().iter().zip(&self.map).map(|(a, &b)| (a.clone(), y.name(b).to_string())).collect()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Homomorphism) -> Homomorphism {
        Homomorphism { map: self.map.iter().map(|&v| other.map[v as usize]).collect() }
    }
}

fn same_signature(x: &RelStructure, y: &RelStructure) -> Result<()> {
    if x.signature != y.signature {
        return Err(Error::SignatureMismatch(format!(
            "{:?} vs {:?}",
            x.signature.symbols(),
            y.signature.symbols()
        )));
    }
    Ok(())
}

pub fn check_homomorphism(f: &Homomorphism, x: &RelStructure, y: &RelStructure) -> Result<bool> {
    same_signature(x, y)?;
    if f.map.len() != x.len() {
        let missing = x.domain().get(f.map.len()).cloned().unwrap_or_default();
        return Err(Error::PartialMap(missing));
    }
    if let Some(&bad) = f.map.iter().find(|&&v| v as usize >= y.len()) {
        return Err(Error::UnknownVertex(format!("#{bad}")));
    }
    let mut buf = Vec::new();
    for (rx, ry) in x.relations.iter().zip(&y.relations) {
        for t in rx.iter() {
            buf.clear();
            buf.extend(t.iter().map(|&v| f.map[v as usize]));
            if !ry.contains(&buf) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn full(n: usize) -> Self {
        let mut words = vec![!0u64; n.div_ceil(64)];
        if n % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (n % 64)) - 1;
            }
        }
        BitSet { words }
    }
    fn contains(&self, i: u32) -> bool {
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
    fn remove(&mut self, i: u32) {
        self.words[(i / 64) as usize] &= !(1u64 << (i % 64));
    }
    fn insert(&mut self, i: u32) {
        self.words[(i / 64) as usize] |= 1u64 << (i % 64);
    }
    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
    fn to_vec(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros();
                out.push(wi as u32 * 64 + b);
                w &= w - 1;
            }
        }
        out
    }
}

/// Backtracking with forward checking over the relation constraints of `x`.
struct Search<'a> {
    x: &'a RelStructure,
    y: &'a RelStructure,
    order: Vec<u32>,
    incid: Vec<Vec<(usize, usize)>>,
    domains: Vec<BitSet>,
    assign: Vec<Option<u32>>,
    trail: Vec<(u32, u32)>,
    nodes: u64,
    budget: Option<u64>,
    limit: usize,
    found: Vec<Homomorphism>,
    buf: Vec<u32>,
}

impl<'a> Search<'a> {
    fn new(x: &'a RelStructure, y: &'a RelStructure, order: Vec<u32>, budget: Option<u64>, limit: usize) -> Self {
        let mut incid = vec![Vec::new(); x.len()];
        for (r, rel) in x.relations.iter().enumerate() {
            for (ti, t) in rel.iter().enumerate() {
                let mut seen: Vec<u32> = t.to_vec();
                seen.sort_unstable();
                seen.dedup();
                for v in seen {
                    incid[v as usize].push((r, ti));
                }
            }
        }
        Search {
            x,
            y,
            order,
            incid,
            domains: vec![BitSet::full(y.len()); x.len()],
            assign: vec![None; x.len()],
            trail: Vec::new(),
            nodes: 0,
            budget,
            limit,
            found: Vec::new(),
            buf: Vec::new(),
        }
    }

    /// Tuples whose only variable is `v` prune its domain up front.
    fn node_consistency(&mut self) -> bool {
        for v in 0..self.x.len() as u32 {
            for k in 0..self.incid[v as usize].len() {
                let (r, ti) = self.incid[v as usize][k];
                let t = self.x.relations[r].tuple(ti);
                if t.iter().all(|&u| u == v) {
                    for b in self.domains[v as usize].to_vec() {
                        self.buf.clear();
                        self.buf.extend(std::iter::repeat(b).take(t.len()));
                        if !self.y.relations[r].contains(&self.buf) {
                            self.domains[v as usize].remove(b);
                        }
                    }
                }
            }
            if self.domains[v as usize].is_empty() {
                return false;
            }
        }
        true
    }

    fn propagate(&mut self, v: u32) -> bool {
        for k in 0..self.incid[v as usize].len() {
            let (r, ti) = self.incid[v as usize][k];
            let t = self.x.relations[r].tuple(ti);
            let mut free: Option<u32> = None;
            let mut many = false;
            for &u in t {
                if self.assign[u as usize].is_none() {
                    match free {
                        None => free = Some(u),
                        Some(f) if f != u => many = true,
                        _ => {}
                    }
                }
            }
            if many {
                continue;
            }
            match free {
                None => {
                    self.buf.clear();
                    for &u in t {
                        self.buf.push(self.assign[u as usize].unwrap());
                    }
                    if !self.y.relations[r].contains(&self.buf) {
                        return false;
                    }
                }
                Some(u) => {
                    for b in self.domains[u as usize].to_vec() {
                        self.buf.clear();
                        for &w in t {
                            self.buf.push(if w == u { b } else { self.assign[w as usize].unwrap() });
                        }
                        if !self.y.relations[r].contains(&self.buf) {
                            self.domains[u as usize].remove(b);
                            self.trail.push((u, b));
                        }
                    }
                    if self.domains[u as usize].is_empty() {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn dfs(&mut self, depth: usize) -> Result<bool> {
        if depth == self.order.len() {
            let map = self.assign.iter().map(|a| a.unwrap()).collect();
            self.found.push(Homomorphism { map });
            return Ok(self.found.len() >= self.limit);
        }
        let v = self.order[depth];
        for b in self.domains[v as usize].to_vec() {
            if !self.domains[v as usize].contains(b) {
                continue;
            }
            self.nodes += 1;
            if let Some(cap) = self.budget {
                if self.nodes > cap {
                    return Err(Error::SearchBudgetExceeded(cap));
                }
            }
            let mark = self.trail.len();
            self.assign[v as usize] = Some(b);
            if self.propagate(v) && self.dfs(depth + 1)? {
                return Ok(true);
            }
            while self.trail.len() > mark {
                let (u, c) = self.trail.pop().unwrap();
                self.domains[u as usize].insert(c);
            }
            self.assign[v as usize] = None;
        }
        Ok(false)
    }

    fn run(mut self) -> Result<Vec<Homomorphism>> {
        if self.limit == 0 || !self.node_consistency() {
            return Ok(Vec::new());
        }
        self.dfs(0)?;
        Ok(self.found)
    }
}

/// The lexicographically least homomorphism in canonical vertex order, if any.
pub fn find_homomorphism(x: &RelStructure, y: &RelStructure, budget: Option<u64>) -> Result<Option<Homomorphism>> {
    same_signature(x, y)?;
    let order = (0..x.len() as u32).collect();
    Ok(Search::new(x, y, order, budget, 1).run()?.pop())
}

/// Existence check with a caller-chosen variable order.
pub fn find_homomorphism_ordered(
    x: &RelStructure,
    y: &RelStructure,
    order: Vec<u32>,
    budget: Option<u64>,
) -> Result<Option<Homomorphism>> {
    same_signature(x, y)?;
    assert_eq!(order.len(), x.len());
    Ok(Search::new(x, y, order, budget, 1).run()?.pop())
}

/// All homomorphisms in lexicographic order; `budget` caps both nodes and results.
pub fn enumerate_homomorphisms(x: &RelStructure, y: &RelStructure, budget: Option<u64>) -> Result<Vec<Homomorphism>> {
    same_signature(x, y)?;
    let order = (0..x.len() as u32).collect();
    let limit = budget.map(|b| b as usize + 1).unwrap_or(usize::MAX);
    let found = Search::new(x, y, order, budget, limit).run().map_err(|e| match e {
        Error::SearchBudgetExceeded(b) => Error::EnumerationBudgetExceeded(b),
        e => e,
    })?;
    if let Some(b) = budget {
        if found.len() as u64 > b {
            return Err(Error::EnumerationBudgetExceeded(b));
        }
    }
    Ok(found)
}

/// Sorted neighbour lists of the Gaifman graph (no self-loops).
pub fn gaifman_adjacency(x: &RelStructure) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); x.len()];
    for rel in x.relations() {
        for t in rel.iter() {
            for &a in t {
                for &b in t {
                    if a != b {
                        adj[a as usize].push(b);
                    }
                }
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// BFS distances from `src`, `None` where unreachable; stops after depth `max`.
pub fn bfs(adj: &[Vec<u32>], src: u32, max: Option<usize>) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[src as usize] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        let d = dist[u as usize].unwrap();
        if max.is_some_and(|m| d >= m) {
            continue;
        }
        for &w in &adj[u as usize] {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(d + 1);
                q.push_back(w);
            }
        }
    }
    dist
}

/// `None` stands for infinity.
pub fn gaifman_distance(x: &RelStructure, u: &str, v: &str) -> Result<Option<usize>> {
    let (u, v) = (x.vertex(u)?, x.vertex(v)?);
    Ok(bfs(&gaifman_adjacency(x), u, None)[v as usize])
}

/// `(connected, diameter)`; the diameter is `None` when disconnected.
pub fn diameter_and_connectivity(x: &RelStructure) -> (bool, Option<usize>) {
    let adj = gaifman_adjacency(x);
    let mut diam = 0;
    for s in 0..x.len() as u32 {
        for d in bfs(&adj, s, None) {
            match d {
                Some(d) => diam = diam.max(d),
                None => return (false, None),
            }
        }
    }
    (true, Some(diam))
}

pub fn clique(n: usize) -> RelStructure {
    let domain = (0..n).map(|i| i.to_string()).collect();
    let mut edges = Vec::new();
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b {
                edges.push((a, b));
            }
        }
    }
    RelStructure::digraph(domain, &edges)
}

pub fn symmetrize(d: &RelStructure) -> Result<RelStructure> {
    let e = d.edges()?;
    let tuples = e.iter().flat_map(|t| [[t[0], t[1]], [t[1], t[0]]]);
    let rel = Relation::from_tuples(2, tuples);
    RelStructure::new(d.signature.clone(), d.domain.clone(), vec![rel])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chromatic {
    Exactly(usize),
    AboveCap,
}

fn colour_order(adj: &[Vec<u32>]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..adj.len() as u32).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v as usize].len()));
    order
}

/// Proper `n`-colouring search in degree order, breaking colour symmetry.
pub fn colourable(g: &RelStructure, n: usize, budget: Option<u64>) -> Result<Option<Vec<u32>>> {
    let e = g.edges()?;
    if e.iter().any(|t| t[0] == t[1]) {
        return Ok(None);
    }
    let adj = gaifman_adjacency(g);
    let order = colour_order(&adj);
    let mut colour = vec![u32::MAX; g.len()];
    let mut nodes = 0u64;
    fn go(
        i: usize,
        used: u32,
        n: u32,
        order: &[u32],
        adj: &[Vec<u32>],
        colour: &mut [u32],
        nodes: &mut u64,
        budget: Option<u64>,
    ) -> Result<bool> {
        if i == order.len() {
            return Ok(true);
        }
        let v = order[i] as usize;
        for c in 0..n.min(used + 1) {
            if adj[v].iter().any(|&w| colour[w as usize] == c) {
                continue;
            }
            *nodes += 1;
            if budget.is_some_and(|b| *nodes > b) {
                return Err(Error::SearchBudgetExceeded(budget.unwrap()));
            }
            colour[v] = c;
            if go(i + 1, used.max(c + 1), n, order, adj, colour, nodes, budget)? {
                return Ok(true);
            }
            colour[v] = u32::MAX;
        }
        Ok(false)
    }
    if go(0, 0, n as u32, &order, &adj, &mut colour, &mut nodes, budget)? {
        Ok(Some(colour))
    } else {
        Ok(None)
    }
}

/// Least `n ≤ cap` with `G → K_n`; `n` starts at 1.
pub fn chromatic_number(g: &RelStructure, cap: usize) -> Result<Chromatic> {
    chromatic_number_with_budget(g, cap, None)
}

pub fn chromatic_number_with_budget(g: &RelStructure, cap: usize, budget: Option<u64>) -> Result<Chromatic> {
    g.edges()?;
    for n in 1..=cap {
        if colourable(g, n, budget)?.is_some() {
            return Ok(Chromatic::Exactly(n));
        }
    }
    Ok(Chromatic::AboveCap)
}

/// Maximum size of a vertex set spanning no tuple; looped vertices never qualify.
pub fn independence_number(g: &RelStructure, budget: Option<u64>) -> Result<usize> {
    let e = g.edges()?;
    let n = g.len();
    let adj = gaifman_adjacency(g);
    let mut cand = BitSet::full(n);
    for t in e.iter() {
        if t[0] == t[1] {
            cand.remove(t[0]);
        }
    }
    let mut best = 0usize;
    let mut nodes = 0u64;
    fn go(
        cand: BitSet,
        size: usize,
        adj: &[Vec<u32>],
        best: &mut usize,
        nodes: &mut u64,
        budget: Option<u64>,
    ) -> Result<()> {
        let list = cand.to_vec();
        if size + list.len() <= *best {
            return Ok(());
        }
        if list.is_empty() {
            *best = size;
            return Ok(());
        }
        *nodes += 1;
        if budget.is_some_and(|b| *nodes > b) {
            return Err(Error::SearchBudgetExceeded(budget.unwrap()));
        }
        let v = list[0];
        let mut with = cand.clone();
        with.remove(v);
        for &w in &adj[v as usize] {
            with.remove(w);
        }
        go(with, size + 1, adj, best, nodes, budget)?;
        let mut without = cand;
        without.remove(v);
        go(without, size, adj, best, nodes, budget)
    }
    go(cand, 0, &adj, &mut best, &mut nodes, budget)?;
    Ok(best)
}

/// Directed cycle `0 → 1 → … → n-1 → 0`.
pub fn directed_cycle(n: usize) -> RelStructure {
    let domain = (0..n).map(|i| i.to_string()).collect();
    let edges: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
    RelStructure::digraph(domain, &edges)
}

/// Undirected cycle, both orientations of each edge.
pub fn cycle(n: usize) -> RelStructure {
    symmetrize(&directed_cycle(n)).expect("digraph")
}

/// Each possible tuple is kept independently with probability `p`; vertices are `"0"`, `"1"`, ….
pub fn random_structure<R: rand::Rng + ?Sized>(rng: &mut R, signature: &Signature, n: usize, p: f64) -> RelStructure {
    let domain: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let rels = signature
        .symbols()
        .iter()
        .map(|s| {
            let total = n.pow(s.arity as u32);
            let tuples: Vec<Vec<u32>> = (0..total)
                .filter(|_| rng.gen_bool(p))
                .map(|mut c| {
                    let mut t = vec![0u32; s.arity];
                    for slot in t.iter_mut().rev() {
                        *slot = (c % n) as u32;
                        c /= n;
                    }
                    t
                })
                .collect();
            Relation::from_tuples(s.arity, tuples)
        })
        .collect();
    RelStructure::new(signature.clone(), domain, rels).expect("generated in range")
}
