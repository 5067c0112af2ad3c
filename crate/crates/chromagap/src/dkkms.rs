//! 3XOR systems, the consistent-repetition game and the reduction to 2-to-2
//! label cover through Grassmann-style vertices `L ⊕ H_u`.

use std::collections::{BTreeMap, BTreeSet};

use crate::csp::{to_structures, CspInstance, Predicate, RawConstraint};
use crate::error::{Error, Result};
use crate::f2linalg::{enumerate_subspaces, extend_functional, F2Functional, F2Subspace, F2Vector};
use crate::qop::{verify_assignment, PMatrix, QuantumAssignment, VerificationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub name: String,
    pub vars: [u32; 3],
    pub rhs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorSystem {
    /// In order of first appearance.
    pub variables: Vec<String>,
    pub equations: Vec<Equation>,
}

impl XorSystem {
    /// Lines `x y z = b`, optionally prefixed by `name:`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut variables: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, u32> = BTreeMap::new();
        let mut equations = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| Error::Invalid(format!("line {}: {why}", lineno + 1));
            let (name, body) = match line.split_once(':') {
                Some((n, b)) => (n.trim().to_string(), b),
                None => (format!("e{}", equations.len() + 1), line),
            };
            let (lhs, rhs) = body.split_once('=').ok_or_else(|| bad("missing `=`"))?;
            let rhs = match rhs.trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("right-hand side must be 0 or 1")),
            };
            let names: Vec<&str> = lhs.split_whitespace().collect();
            if names.len() != 3 {
                return Err(bad("expected three variables"));
            }
            let mut vars = [0u32; 3];
            for (slot, n) in vars.iter_mut().zip(&names) {
                *slot = *index.entry(n.to_string()).or_insert_with(|| {
                    variables.push(n.to_string());
                    variables.len() as u32 - 1
                });
            }
            if vars[0] == vars[1] || vars[1] == vars[2] || vars[0] == vars[2] {
                return Err(bad("variables must be distinct"));
            }
            equations.push(Equation { name, vars, rhs });
        }
        let mut seen = BTreeSet::new();
        if let Some(e) = equations.iter().find(|e| !seen.insert(e.name.clone())) {
            return Err(Error::Invalid(format!("duplicate equation name `{}`", e.name)));
        }
        Ok(XorSystem { variables, equations })
    }

    pub fn to_text(&self) -> String {
        self.equations
            .iter()
            .map(|e| {
                let v: Vec<&str> = e.vars.iter().map(|&x| self.variables[x as usize].as_str()).collect();
                format!("{}: {} = {}\n", e.name, v.join(" "), e.rhs as u8)
            })
            .collect()
    }

    /// One ternary parity constraint per equation over labels `"0"`, `"1"`, uniformly weighted.
    pub fn to_csp(&self) -> Result<CspInstance> {
        let raw = self
            .equations
            .iter()
            .map(|e| {
                let tuples = (0u32..8)
                    .map(|c| vec![c >> 2 & 1, c >> 1 & 1, c & 1])
                    .filter(|t| (t[0] ^ t[1] ^ t[2] == 1) == e.rhs);
                RawConstraint { scope: e.vars.to_vec(), predicate: Predicate::from_tuples(3, 2, tuples), weight: None }
            })
            .collect();
        CspInstance::new(self.variables.clone(), vec!["0".into(), "1".into()], raw)
    }

    /// Number of equations satisfied by `f`.
    pub fn satisfied(&self, f: &[bool]) -> usize {
        self.equations.iter().filter(|e| e.vars.iter().fold(false, |a, &x| a ^ f[x as usize]) == e.rhs).count()
    }
}

/// The magic square: cells `a11..a33`, rows `r1..r3`, columns `c1..c3`, odd last column.
pub fn magic_square() -> XorSystem {
    XorSystem::parse(
        "r1: a11 a12 a13 = 0\n\
         r2: a21 a22 a23 = 0\n\
         r3: a31 a32 a33 = 0\n\
         c1: a11 a21 a31 = 0\n\
         c2: a12 a22 a32 = 0\n\
         c3: a13 a23 a33 = 1\n",
    )
    .expect("fixed system parses")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Regularity {
    pub regular: bool,
    pub max_occurrence: usize,
    /// A variable occurring more than `p` times.
    pub overloaded: Option<u32>,
    /// Two equations sharing two or more variables.
    pub overlapping: Option<(usize, usize)>,
}

pub fn is_regular(s: &XorSystem, p: usize) -> Regularity {
    let mut occ = vec![0usize; s.variables.len()];
    for e in &s.equations {
        for &x in &e.vars {
            occ[x as usize] += 1;
        }
    }
    let max_occurrence = occ.iter().copied().max().unwrap_or(0);
    let overloaded = occ.iter().position(|&c| c > p).map(|x| x as u32);
    let mut overlapping = None;
    'outer: for i in 0..s.equations.len() {
        for j in i + 1..s.equations.len() {
            let shared = s.equations[i].vars.iter().filter(|x| s.equations[j].vars.contains(x)).count();
            if shared > 1 {
                overlapping = Some((i, j));
                break 'outer;
            }
        }
    }
    Regularity { regular: overloaded.is_none() && overlapping.is_none(), max_occurrence, overloaded, overlapping }
}

/// Variables of a tuple in tuple order, duplicates dropped.
pub fn tuple_variables(s: &XorSystem, tuple: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    for &e in tuple {
        for &x in &s.equations[e as usize].vars {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out
}

pub fn tuple_name(s: &XorSystem, tuple: &[u32]) -> String {
    tuple.iter().map(|&e| s.equations[e as usize].name.as_str()).collect::<Vec<_>>().join(",")
}

fn all_tuples(m: usize, n: usize) -> impl Iterator<Item = Vec<u32>> {
    let total = if n == 0 { 1 } else { m.checked_pow(n as u32).unwrap_or(0) };
    (0..total).map(move |mut c| {
        let mut t = vec![0u32; n];
        for slot in t.iter_mut().rev() {
            *slot = (c % m) as u32;
            c /= m;
        }
        t
    })
}

/// Ordered `n`-tuples of distinct, variable-disjoint equations such that no
/// equation meets two of them; lexicographic.
pub fn legitimate_tuples(s: &XorSystem, n: usize) -> Vec<Vec<u32>> {
    let m = s.equations.len();
    if n == 0 || n > m {
        return Vec::new();
    }
    let meets = |e: &Equation, x: u32| e.vars.contains(&x);
    all_tuples(m, n)
        .filter(|t| {
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (&s.equations[t[i] as usize], &s.equations[t[j] as usize]);
                    if t[i] == t[j] || a.vars.iter().any(|&x| meets(b, x)) {
                        return false;
                    }
                    for &x in &a.vars {
                        for &y in &b.vars {
                            if s.equations.iter().any(|e| meets(e, x) && meets(e, y)) {
                                return false;
                            }
                        }
                    }
                }
            }
            true
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionSet {
    /// Every `n`-tuple of equations.
    All,
    Legitimate,
}

/// `G(S, n)`: a question per tuple, answers the satisfying assignments of its variables.
#[derive(Debug, Clone)]
pub struct GameInstance {
    pub n: usize,
    pub questions: Vec<Vec<u32>>,
    pub names: Vec<String>,
    /// Variables asked by each question, in tuple order.
    pub variables: Vec<Vec<u32>>,
    /// Satisfying assignments per question, as bits over `variables`.
    pub answers: Vec<Vec<Vec<bool>>>,
}

pub fn bits_label(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn game_instance(s: &XorSystem, n: usize, questions: QuestionSet, max_questions: Option<usize>) -> Result<GameInstance> {
    let qs: Vec<Vec<u32>> = match questions {
        QuestionSet::All => {
            let total = s.equations.len().checked_pow(n as u32).unwrap_or(usize::MAX);
            if max_questions.is_some_and(|cap| total > cap) {
                return Err(Error::SizeBudgetExceeded(format!("{total} questions")));
            }
            all_tuples(s.equations.len(), n).collect()
        }
        QuestionSet::Legitimate => legitimate_tuples(s, n),
    };
    if max_questions.is_some_and(|cap| qs.len() > cap) {
        return Err(Error::SizeBudgetExceeded(format!("{} questions", qs.len())));
    }
    let mut names = Vec::new();
    let mut variables = Vec::new();
    let mut answers = Vec::new();
    for q in &qs {
        let vars = tuple_variables(s, q);
        let pos = |x: u32| vars.iter().position(|&v| v == x).expect("own variable");
        let sols: Vec<Vec<bool>> = (0u64..1 << vars.len())
            .map(|c| (0..vars.len()).map(|i| c >> (vars.len() - 1 - i) & 1 == 1).collect::<Vec<bool>>())
            .filter(|bits| {
                q.iter().all(|&e| {
                    let eq = &s.equations[e as usize];
                    eq.vars.iter().fold(false, |a, &x| a ^ bits[pos(x)]) == eq.rhs
                })
            })
            .collect();
        names.push(tuple_name(s, q));
        variables.push(vars);
        answers.push(sols);
    }
    Ok(GameInstance { n, questions: qs, names, variables, answers })
}

/// Unary constraints keep each question on its own answers; binary ones
/// demand agreement on shared variables, one per pair of overlapping questions.
pub fn game_csp(g: &GameInstance) -> Result<CspInstance> {
    let mut lengths: Vec<usize> = g.variables.iter().map(|v| v.len()).collect();
    lengths.sort_unstable();
    lengths.dedup();
    let alphabet: Vec<String> = lengths
        .iter()
        .flat_map(|&len| (0u64..1 << len).map(move |c| bits_label(&(0..len).map(|i| c >> (len - 1 - i) & 1 == 1).collect::<Vec<_>>())))
        .collect();
    let index: BTreeMap<&str, u32> = alphabet.iter().enumerate().map(|(i, a)| (a.as_str(), i as u32)).collect();
    let na = alphabet.len();
    let label_ids: Vec<Vec<u32>> =
        g.answers.iter().map(|sols| sols.iter().map(|b| index[bits_label(b).as_str()]).collect()).collect();

    let mut raw = Vec::new();
    for (q, ids) in label_ids.iter().enumerate() {
        raw.push(RawConstraint {
            scope: vec![q as u32],
            predicate: Predicate::from_tuples(1, na, ids.iter().map(|&i| [i])),
            weight: None,
        });
    }
    for a in 0..g.questions.len() {
        for b in a + 1..g.questions.len() {
            let shared: Vec<(usize, usize)> = g.variables[a]
                .iter()
                .enumerate()
                .filter_map(|(i, x)| g.variables[b].iter().position(|y| y == x).map(|j| (i, j)))
                .collect();
            if shared.is_empty() {
                continue;
            }
            let mut p = Predicate::empty(2, na);
            for (sa, &la) in g.answers[a].iter().zip(&label_ids[a]) {
                for (sb, &lb) in g.answers[b].iter().zip(&label_ids[b]) {
                    if shared.iter().all(|&(i, j)| sa[i] == sb[j]) {
                        p.insert(&[la, lb]);
                    }
                }
            }
            raw.push(RawConstraint { scope: vec![a as u32, b as u32], predicate: p, weight: None });
        }
    }
    CspInstance::new(g.names.clone(), alphabet, raw)
}

/// Verifies a game strategy keyed by question name and answer bits, at compatibility `k ≤ 1`.
pub fn verify_game_assignment(g: &GameInstance, q: &QuantumAssignment, k: usize) -> Result<VerificationReport> {
    let phi = game_csp(g)?;
    let (x, a) = to_structures(&phi);
    verify_assignment(&x, &a, q, k.min(1))
}

/// A vertex `L ⊕ H_u` of the first reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoVertex {
    pub tuple: Vec<u32>,
    pub l: F2Subspace,
    /// `L ⊕ H_u`.
    pub space: F2Subspace,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    OneToOne,
    TwoToTwo,
}

#[derive(Debug, Clone)]
pub struct Rho1 {
    pub n: usize,
    pub ell: usize,
    pub tuples: Vec<Vec<u32>>,
    pub vertices: Vec<RhoVertex>,
    pub instance: CspInstance,
    /// Aligned with the constraints of `instance`.
    pub tags: Vec<EdgeTag>,
}

/// `[(v_{u_i}, b_i)]` for a tuple.
pub fn tuple_equations(s: &XorSystem, tuple: &[u32]) -> Vec<(F2Vector, bool)> {
    let n = s.variables.len();
    tuple
        .iter()
        .map(|&e| {
            let eq = &s.equations[e as usize];
            (F2Vector::from_support(n, &eq.vars.map(|x| x as usize)), eq.rhs)
        })
        .collect()
}

/// Label `j` of a vertex: the values `j`'s bits take on `L`'s canonical basis, extended to respect the tuple.
pub fn vertex_label_functional(s: &XorSystem, v: &RhoVertex, label: usize) -> Result<F2Functional> {
    let ell = v.l.dim();
    let mut pairs: Vec<(F2Vector, bool)> =
        v.l.basis().iter().enumerate().map(|(i, b)| (b.clone(), label >> (ell - 1 - i) & 1 == 1)).collect();
    pairs.extend(tuple_equations(s, &v.tuple));
    F2Functional::from_values(s.variables.len(), &pairs)
}

pub fn label_names(ell: usize) -> Vec<String> {
    (0..1usize << ell).map(|j| bits_label(&(0..ell).map(|i| j >> (ell - 1 - i) & 1 == 1).collect::<Vec<_>>())).collect()
}

pub fn build_rho1(s: &XorSystem, n: usize, ell: usize, max_vertices: Option<usize>) -> Result<Rho1> {
    if ell < 2 {
        return Err(Error::Invalid("ℓ must be at least 2".into()));
    }
    let reg = is_regular(s, usize::MAX);
    if reg.overlapping.is_some() {
        return Err(Error::NotRegular(reg.max_occurrence));
    }
    let nv = s.variables.len();
    let tuples = legitimate_tuples(s, n);
    let mut vertices = Vec::new();
    for t in &tuples {
        let eqs = tuple_equations(s, t);
        let h = F2Subspace::span(nv, &eqs.iter().map(|e| e.0.clone()).collect::<Vec<_>>())?;
        if h.dim() != n {
            return Err(Error::Invalid(format!("H for {} has dimension {} ≠ {n}", tuple_name(s, t), h.dim())));
        }
        let units: Vec<F2Vector> =
            tuple_variables(s, t).iter().map(|&x| F2Vector::unit(nv, x as usize)).collect();
        let restriction = F2Subspace::span(nv, &units)?;
        for l in enumerate_subspaces(&restriction, ell, &h)? {
            let space = l.sum(&h)?;
            let basis: Vec<String> = l.basis().iter().map(|b| b.to_bitstring()).collect();
            let name = format!("{}|{}", tuple_name(s, t), basis.join(","));
            vertices.push(RhoVertex { tuple: t.clone(), l, space, name });
            if max_vertices.is_some_and(|cap| vertices.len() > cap) {
                return Err(Error::SizeBudgetExceeded(format!("more than {} vertices", vertices.len() - 1)));
            }
        }
    }

    let na = 1usize << ell;
    let h_of: Vec<F2Subspace> = vertices
        .iter()
        .map(|v| F2Subspace::span(nv, &tuple_equations(s, &v.tuple).into_iter().map(|e| e.0).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let labels: Vec<Vec<F2Functional>> = vertices
        .iter()
        .map(|v| (0..na).map(|j| vertex_label_functional(s, v, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut raw = Vec::new();
    let mut tags = Vec::new();
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let (va, vb) = (&vertices[a], &vertices[b]);
            let s1 = va.space.sum(&h_of[b])?;
            let s2 = vb.space.sum(&h_of[a])?;
            let s12 = s1.sum(&vb.l)?;
            let tag = if s1.dim() != s2.dim() {
                continue;
            } else if s12.dim() == s1.dim() {
                EdgeTag::OneToOne
            } else if s12.dim() == s1.dim() + 1 {
                EdgeTag::TwoToTwo
            } else {
                continue;
            };
            let (eu, ew) = (tuple_equations(s, &va.tuple), tuple_equations(s, &vb.tuple));
            let shared = s1.intersect(&s2)?;
            let ext_a: Vec<F2Functional> =
                labels[a].iter().map(|psi| extend_functional(psi, &eu, &ew)).collect::<Result<_>>()?;
            let ext_b: Vec<F2Functional> =
                labels[b].iter().map(|psi| extend_functional(psi, &ew, &eu)).collect::<Result<_>>()?;
            let mut p = Predicate::empty(2, na);
            for (i, fa) in ext_a.iter().enumerate() {
                for (j, fb) in ext_b.iter().enumerate() {
                    let agree = shared.basis().iter().all(|v| fa.eval(v).unwrap() == fb.eval(v).unwrap());
                    if agree {
                        p.insert(&[i as u32, j as u32]);
                    }
                }
            }
            raw.push(RawConstraint { scope: vec![a as u32, b as u32], predicate: p, weight: None });
            tags.push(tag);
        }
    }
    let instance = CspInstance::new(vertices.iter().map(|v| v.name.clone()).collect(), label_names(ell), raw)?;
    Ok(Rho1 { n, ell, tuples, vertices, instance, tags })
}

/// Keeps the 2-to-2 constraints with uniform weights.
pub fn build_rho2(r: &Rho1) -> Result<CspInstance> {
    let raw: Vec<RawConstraint> = r
        .instance
        .constraints()
        .iter()
        .zip(&r.tags)
        .filter(|(_, &t)| t == EdgeTag::TwoToTwo)
        .map(|(c, _)| RawConstraint { scope: c.scope.clone(), predicate: c.predicate.clone(), weight: None })
        .collect();
    if raw.is_empty() {
        return Err(Error::AllConstraintsDiscarded);
    }
    CspInstance::new(r.instance.variables().to_vec(), r.instance.alphabet().to_vec(), raw)
}

/// The label of `θ̂` restricted to a vertex: its values on `L`'s basis.
pub fn restrict_answer(v: &RhoVertex, vars: &[u32], theta: &[bool]) -> usize {
    let value = |b: &F2Vector| b.support().iter().fold(false, |acc, &x| {
        let i = vars.iter().position(|&y| y as usize == x).expect("L lives on the tuple's variables");
        acc ^ theta[i]
    });
    let ell = v.l.dim();
    v.l.basis().iter().enumerate().fold(0usize, |acc, (i, b)| acc | (value(b) as usize) << (ell - 1 - i))
}

/// `W_{L⊕H_u, ψ} = Σ_{θ ∈ s(u), θ̂|_{L⊕H_u} = ψ} Q_{u,θ}`; compatibility `min(k, 1)`.
pub fn rho_quantum_transfer(s: &XorSystem, r: &Rho1, q: &QuantumAssignment) -> Result<QuantumAssignment> {
    let game = game_instance(s, r.n, QuestionSet::Legitimate, None)?;
    let k = q.k.min(1);
    let rep = verify_game_assignment(&game, q, k)?;
    if !rep.passed() {
        return Err(Error::VerificationFailure(format!("game strategy: {}", rep.summary())));
    }
    let names = label_names(r.ell);
    let mut w = QuantumAssignment::new(q.dim, k);
    for v in &r.vertices {
        let qi = game.questions.iter().position(|t| *t == v.tuple).expect("vertex tuples are legitimate");
        let vars = &game.variables[qi];
        let mut acc: Vec<PMatrix> = vec![PMatrix::zero(q.dim); names.len()];
        for theta in &game.answers[qi] {
            if let Some(m) = q.get(&game.names[qi], &bits_label(theta)) {
                let j = restrict_answer(v, vars, theta);
                acc[j] = acc[j].add(m);
            }
        }
        w.ensure_variable(&v.name);
        for (j, m) in acc.into_iter().enumerate() {
            w.insert(&v.name, &names[j], m);
        }
    }
    Ok(w)
}
