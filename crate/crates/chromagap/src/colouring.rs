//! Line digraphs, the Markov transition matrix on `[2d]^d`, the η reduction
//! from d-to-d games to colouring, and the quantum transfers through both.

use nalgebra::{DMatrix, SymmetricEigen};
use num_integer::binomial;

use crate::csp::{block_form, BlockForm, CspInstance};
use crate::error::{Error, Result};
use crate::pultr::{gamma_functor, hom_name, lambda_functor, line_digraph_template, CopyTag, GammaFunctorOutput, LeftImage, PultrTemplate};
use crate::qop::{compose_sandwich_unchecked, verify_assignment, verify_assignment_with, QuantumAssignment, VerificationReport, VerifyOptions};
use crate::relstruct::{clique, Homomorphism, Relation, RelStructure, Signature, Symbol};

/// Vertices are the edges of `x`, named like `["u","v"]`; `(e, f)` is an edge when `e` ends where `f` starts.
pub fn line_digraph(x: &RelStructure) -> Result<RelStructure> {
    let e = x.edges()?;
    let names: Vec<String> = e.iter().map(|t| edge_name(x, t[0], t[1])).collect();
    // edges are sorted, so those leaving `v` form a contiguous run
    let mut start = vec![0usize; x.len() + 1];
    for t in e.iter() {
        start[t[0] as usize + 1] += 1;
    }
    for v in 0..x.len() {
        start[v + 1] += start[v];
    }
    let mut flat = Vec::new();
    for (i, t) in e.iter().enumerate() {
        let v = t[1] as usize;
        for j in start[v]..start[v + 1] {
            flat.extend([i as u32, j as u32]);
        }
    }
    let rel = if flat.is_empty() { Relation::empty(2) } else { Relation::from_flat(2, flat) };
    RelStructure::new(Signature::binary("E"), names, vec![rel])
}

/// `(2^n, C(n, ⌊n/2⌋))`.
pub fn alpha_beta(n: u32) -> (u128, u128) {
    assert!((1..=127).contains(&n), "n out of range");
    (1u128 << n, binomial(n as u128, (n / 2) as u128))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Eigenvalues within `1e-9` of 1.
    pub unit_multiplicity: usize,
    /// Largest modulus among the remaining eigenvalues.
    pub second_modulus: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

/// A symmetric stochastic matrix on `[2d]^d` supported on pairs with disjoint entry sets.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    d: usize,
    states: Vec<Vec<u8>>,
    t: Vec<f64>,
    row_residual: f64,
    spectrum: SpectralReport,
}

impl TransitionMatrix {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Lexicographic order.
    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, s: &[u8]) -> usize {
        s.iter().fold(0, |acc, &c| acc * 2 * self.d + c as usize)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.states.len() + j]
    }

    pub fn nonzero(&self, i: usize, j: usize) -> bool {
        self.entry(i, j) != 0.0
    }

    pub fn row_residual(&self) -> f64 {
        self.row_residual
    }

    pub fn spectrum(&self) -> &SpectralReport {
        &self.spectrum
    }
}

/// Certification thresholds for [`build_transition_matrix_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest allowed `|Σ_j T_ij − 1|`.
    pub row: f64,
    /// Required `1 − |λ₂|`.
    pub spectral_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { row: 1e-12, spectral_gap: 1e-8 }
    }
}

fn disjoint(a: &[u8], b: &[u8]) -> bool {
    a.iter().all(|x| !b.contains(x))
}

pub fn build_transition_matrix(d: usize) -> Result<TransitionMatrix> {
    build_transition_matrix_with(d, &Tolerances::default())
}

pub fn build_transition_matrix_with(d: usize, tol: &Tolerances) -> Result<TransitionMatrix> {
    if d < 2 {
        return Err(Error::Invalid("d must be at least 2".into()));
    }
    if d > 3 {
        return Err(Error::SizeBudgetExceeded(format!("[{}]^{d} is too large to certify", 2 * d)));
    }
    let q = 2 * d;
    let n = q.pow(d as u32);
    let states: Vec<Vec<u8>> = (0..n)
        .map(|mut i| {
            let mut s = vec![0u8; d];
            for c in s.iter_mut().rev() {
                *c = (i % q) as u8;
                i /= q;
            }
            s
        })
        .collect();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| disjoint(&states[i], &states[j])).collect()).collect();

    // symmetric Sinkhorn: x ← x / sqrt(x ∘ Ax)
    let mut x: Vec<f64> = adj.iter().map(|r| 1.0 / (r.len() as f64).sqrt()).collect();
    let row = |x: &[f64], i: usize| x[i] * adj[i].iter().map(|&j| x[j]).sum::<f64>();
    let mut residual = f64::INFINITY;
    for _ in 0..200_000 {
        let r: Vec<f64> = (0..n).map(|i| row(&x, i)).collect();
        residual = r.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        if residual < tol.row / 10.0 {
            break;
        }
        for i in 0..n {
            x[i] /= r[i].sqrt();
        }
    }
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for &j in &adj[i] {
            t[i * n + j] = x[i] * x[j];
        }
    }
    let row_residual = (0..n).map(|i| (t[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    if row_residual >= tol.row {
        return Err(Error::SinkhornDivergence(row_residual.max(residual)));
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &t));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let unit_multiplicity = eigenvalues.iter().filter(|l| (*l - 1.0).abs() < 1e-9).count();
    let second_modulus =
        eigenvalues.iter().filter(|l| (*l - 1.0).abs() >= 1e-9).map(|l| l.abs()).fold(0.0, f64::max);
    let spectrum = SpectralReport { unit_multiplicity, second_modulus, eigenvalues };
    if unit_multiplicity != 1 || second_modulus >= 1.0 - tol.spectral_gap {
        return Err(Error::SpectralCertificationFailure(format!(
            "eigenvalue 1 with multiplicity {unit_multiplicity}, next modulus {second_modulus}"
        )));
    }
    Ok(TransitionMatrix { d, states, t, row_residual, spectrum })
}

/// Everything η needs about a d-to-d instance.
#[derive(Debug, Clone)]
pub struct EtaSetup {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    /// Distinct block forms, sorted; one τ-symbol each.
    pub forms: Vec<BlockForm>,
    /// Index into `forms` for every constraint.
    pub constraint_form: Vec<usize>,
    /// `X_Φ`, a τ-structure on the variables.
    pub x_phi: RelStructure,
}

pub fn form_symbol(f: &BlockForm) -> String {
    let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    format!("T[{}|{}]", join(&f.mu), join(&f.nu))
}

pub fn eta_setup(phi: &CspInstance, d: usize) -> Result<EtaSetup> {
    phi.is_binary()?;
    let n = phi.alphabet().len();
    if d == 0 || n % d != 0 {
        return Err(Error::NotDtoD(format!("alphabet of size {n} does not split into blocks of {d}")));
    }
    let mut per = Vec::with_capacity(phi.constraints().len());
    for (i, c) in phi.constraints().iter().enumerate() {
        match block_form(&c.predicate) {
            Some(f) if f.d == d => per.push(f),
            _ => return Err(Error::NotDtoD(format!("constraint {i}"))),
        }
    }
    let mut forms = per.clone();
    forms.sort();
    forms.dedup();
    let constraint_form: Vec<usize> = per.iter().map(|f| forms.binary_search(f).expect("present")).collect();
    let tau = Signature::new(forms.iter().map(|f| Symbol { name: form_symbol(f), arity: 2 }).collect())?;
    // the signature sorts by name; align relations with it
    let mut rels: Vec<Vec<[u32; 2]>> = vec![Vec::new(); forms.len()];
    for (c, &fi) in phi.constraints().iter().zip(&constraint_form) {
        let s = tau.index_of(&form_symbol(&forms[fi])).expect("symbol exists");
        rels[s].push([c.scope[0], c.scope[1]]);
    }
    let rels = rels.into_iter().map(|r| Relation::from_tuples(2, r)).collect();
    let x_phi = RelStructure::new(tau, phi.variables().to_vec(), rels)?;
    Ok(EtaSetup { n, d, m: n / d, forms, constraint_form, x_phi })
}

fn z_count(n: usize, d: usize) -> Result<usize> {
    (2 * d).checked_pow(n as u32).ok_or_else(|| Error::SizeBudgetExceeded("(2d)^n overflows".into()))
}

fn z_digits(mut z: usize, n: usize, q: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for c in out.iter_mut().rev() {
        *c = (z % q) as u8;
        z /= q;
    }
    out
}

fn z_name(z: &[u8], q: usize) -> String {
    let parts: Vec<String> = z.iter().map(|c| c.to_string()).collect();
    if q <= 10 {
        parts.concat()
    } else {
        parts.join(".")
    }
}

/// Pairs `(z, z')` with a nonzero `T`-entry at every block.
pub fn block_edges(f: &BlockForm, t: &TransitionMatrix) -> Vec<(u32, u32)> {
    let (n, d, q) = (f.mu.len(), f.d, 2 * f.d);
    let count = q.pow(n as u32);
    let idx = |z: &[u8], perm: &[u32]| -> Vec<usize> {
        (0..f.m).map(|i| perm[i * d..(i + 1) * d].iter().fold(0, |acc, &p| acc * q + z[p as usize] as usize)).collect()
    };
    let digits: Vec<Vec<u8>> = (0..count).map(|z| z_digits(z, n, q)).collect();
    let alpha: Vec<Vec<usize>> = digits.iter().map(|z| idx(z, &f.mu)).collect();
    let beta: Vec<Vec<usize>> = digits.iter().map(|z| idx(z, &f.nu)).collect();
    let mut out = Vec::new();
    for (z, a) in alpha.iter().enumerate() {
        for (zp, b) in beta.iter().enumerate() {
            if a.iter().zip(b).all(|(&i, &j)| t.nonzero(i, j)) {
                out.push((z as u32, zp as u32));
            }
        }
    }
    out
}

/// `ηΦ`: vertex `(x, z)` is named `z^(x)`, ordered by `x` then `z`.
pub fn eta_apply(phi: &CspInstance, t: &TransitionMatrix, max_vertices: Option<usize>) -> Result<RelStructure> {
    let setup = eta_setup(phi, t.d())?;
    let q = 2 * setup.d;
    let nz = z_count(setup.n, setup.d)?;
    let total = nz
        .checked_mul(phi.variables().len())
        .ok_or_else(|| Error::SizeBudgetExceeded("vertex count overflows".into()))?;
    if max_vertices.is_some_and(|cap| total > cap) {
        return Err(Error::SizeBudgetExceeded(format!("{total} vertices")));
    }
    let znames: Vec<String> = (0..nz).map(|z| z_name(&z_digits(z, setup.n, q), q)).collect();
    let names: Vec<String> =
        phi.variables().iter().flat_map(|x| znames.iter().map(move |z| format!("{z}^({x})"))).collect();
    let patterns: Vec<Vec<(u32, u32)>> = setup.forms.iter().map(|f| block_edges(f, t)).collect();
    let mut flat = Vec::new();
    for (c, &fi) in phi.constraints().iter().zip(&setup.constraint_form) {
        let (bx, bxp) = (c.scope[0] * nz as u32, c.scope[1] * nz as u32);
        for &(z, zp) in &patterns[fi] {
            flat.extend([bx + z, bxp + zp]);
        }
    }
    let rel = if flat.is_empty() { Relation::empty(2) } else { Relation::from_flat(2, flat) };
    RelStructure::new(Signature::binary("E"), names, vec![rel])
}

/// `A` is `[2d]^n` without edges; `B_T` has parts `1:z` and `2:z` joined by the block pattern of `T`.
pub fn eta_template(setup: &EtaSetup, t: &TransitionMatrix) -> Result<PultrTemplate> {
    let q = 2 * setup.d;
    let nz = z_count(setup.n, setup.d)?;
    let znames: Vec<String> = (0..nz).map(|z| z_name(&z_digits(z, setup.n, q), q)).collect();
    let a = RelStructure::digraph(znames.clone(), &[]);
    let bnames: Vec<String> = (1..=2).flat_map(|p| znames.iter().map(move |z| format!("{p}:{z}"))).collect();
    let tau = setup.x_phi.signature().clone();
    let mut bs = Vec::new();
    let mut eps = Vec::new();
    for sym in tau.symbols() {
        let f = setup.forms.iter().find(|f| form_symbol(f) == sym.name).expect("symbol from a form");
        let edges: Vec<(u32, u32)> = block_edges(f, t).into_iter().map(|(z, zp)| (z, nz as u32 + zp)).collect();
        bs.push(RelStructure::digraph(bnames.clone(), &edges));
        eps.push(vec![
            Homomorphism { map: (0..nz as u32).collect() },
            Homomorphism { map: (nz as u32..2 * nz as u32).collect() },
        ]);
    }
    PultrTemplate::new(tau, a, bs, eps)
}

/// `G^{d↔d}` over the alphabet: `T_{μ,ν} = {(a, b) : h_{μ⁻¹(a), ν⁻¹(b)} = 1}`.
pub fn canonical_target(setup: &EtaSetup, alphabet: &[String]) -> Result<RelStructure> {
    let tau = setup.x_phi.signature();
    let rels = tau
        .symbols()
        .iter()
        .map(|sym| {
            let f = setup.forms.iter().find(|f| form_symbol(f) == sym.name).expect("symbol from a form");
            Relation::from_tuples(2, f.expand().tuples())
        })
        .collect();
    RelStructure::new(tau.clone(), alphabet.to_vec(), rels)
}

/// `ξ: Λ G^{d↔d} → K_{2d}`, `a^(x) ↦ a(x)`, checked on every member of every class.
pub fn xi_colouring(setup: &EtaSetup, target: &RelStructure, lg: &LeftImage) -> Result<Homomorphism> {
    let q = 2 * setup.d;
    let nz = z_count(setup.n, setup.d)? as u32;
    let colour = |tag: CopyTag| -> u32 {
        match tag {
            CopyTag::A { x, a } => z_digits(a as usize, setup.n, q)[x as usize] as u32,
            CopyTag::B { symbol, tuple, b } => {
                let pair = target.relation(symbol as usize).tuple(tuple as usize);
                let (z, x) = if b < nz { (b, pair[0]) } else { (b - nz, pair[1]) };
                z_digits(z as usize, setup.n, q)[x as usize] as u32
            }
        }
    };
    let mut map = Vec::with_capacity(lg.members.len());
    for (c, members) in lg.members.iter().enumerate() {
        let v = colour(members[0]);
        if members[1..].iter().any(|&m| colour(m) != v) {
            return Err(Error::WellDefinednessViolation(lg.structure.name(c as u32).to_string()));
        }
        map.push(v);
    }
    Ok(Homomorphism { map })
}

#[derive(Debug, Clone)]
pub struct EtaTransfer {
    /// `ηΦ = Λ X_Φ`.
    pub graph: RelStructure,
    pub colours: RelStructure,
    pub assignment: QuantumAssignment,
    pub report: VerificationReport,
}

/// From a perfect `k`-compatible assignment for `Φ` to `ηΦ ⇝^k K_{2d}`.
pub fn eta_quantum_transfer(
    phi: &CspInstance,
    q: &QuantumAssignment,
    t: &TransitionMatrix,
    opts: &VerifyOptions,
) -> Result<EtaTransfer> {
    let setup = eta_setup(phi, t.d())?;
    let target = canonical_target(&setup, phi.alphabet())?;
    let rep = verify_assignment(&setup.x_phi, &target, q, q.k)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(format!("input: {}", rep.summary())));
    }
    let template = eta_template(&setup, t)?;
    let out = lambda_functor(&template, &setup.x_phi, q, &target)?;
    let xi = xi_colouring(&setup, &target, &out.ly)?;
    let colours = clique(2 * setup.d);
    let id = Homomorphism::identity(out.lx.structure.len());
    let w = compose_sandwich_unchecked(&out.lx.structure, &id, &out.lx.structure, &out.assignment, &out.ly.structure, &xi, &colours)?;
    let report = verify_assignment_with(&out.lx.structure, &colours, &w, q.k, opts)?;
    if !report.passed() {
        return Err(Error::VerificationFailure(report.summary()));
    }
    Ok(EtaTransfer { graph: out.lx.structure, colours, assignment: w, report })
}

/// The classical colouring `ηΦ → K_{2d}` induced by a satisfying assignment `f`, `z^(x) ↦ z(f(x))`.
pub fn eta_classical_colouring(phi: &CspInstance, d: usize, f: &[u32]) -> Result<Homomorphism> {
    let setup = eta_setup(phi, d)?;
    let q = 2 * setup.d;
    let nz = z_count(setup.n, setup.d)?;
    let mut map = Vec::with_capacity(nz * f.len());
    for &label in f {
        for z in 0..nz {
            map.push(z_digits(z, setup.n, q)[label as usize] as u32);
        }
    }
    Ok(Homomorphism { map })
}

/// `X ⇝^{2k+2} Y` gives `δX ⇝^k δY`.
pub fn linedigraph_quantum_transfer(
    x: &RelStructure,
    q: &QuantumAssignment,
    y: &RelStructure,
    k: usize,
    budget: Option<u64>,
) -> Result<GammaFunctorOutput> {
    let out = gamma_functor(&line_digraph_template(), x, q, y, k, budget)?;
    let rep = verify_assignment(&out.gx.structure, &out.gy.structure, &out.assignment, k)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(rep.summary()));
    }
    Ok(out)
}

/// Names of `δ` vertices as produced by `Γ` of the line-digraph template.
pub fn edge_name(x: &RelStructure, u: u32, v: u32) -> String {
    hom_name(&Homomorphism { map: vec![u, v] }, x)
}
