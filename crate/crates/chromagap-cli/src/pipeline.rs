use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Result};
use chromagap::colouring::{build_transition_matrix_with, eta_quantum_transfer, linedigraph_quantum_transfer};
use chromagap::csp::{block_form, classify_label_cover, sat_value, to_structures, CspInstance, Predicate, RawConstraint};
use chromagap::dkkms::{build_rho1, build_rho2, magic_square, rho_quantum_transfer, EdgeTag};
use chromagap::dmr::{dmr_pipeline, DmrOptions};
use chromagap::qop::{
    compose_sandwich, lift_classical, mermin_peres, verify_assignment, verify_assignment_with, QuantumAssignment,
    VerificationReport, VerifyOptions,
};
use chromagap::relstruct::{
    check_homomorphism, chromatic_number_with_budget, clique, colourable, gaifman_adjacency, symmetrize, Chromatic,
    Homomorphism, RelStructure,
};
use chromagap::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::report::{Artifacts, PipelineReport, StageRecord};

/// Largest iteration count the machinery run accepts.
pub const MAX_ITERATIONS: usize = 2;

fn verdict(r: &VerificationReport) -> String {
    if r.passed() {
        format!("perfect {}-compatible, dim {}", r.k, r.dim)
    } else {
        r.summary()
    }
}

fn record(name: &str, x: &RelStructure, k: Option<usize>, r: &VerificationReport, witnesses: Vec<String>) -> StageRecord {
    StageRecord {
        name: name.into(),
        vertices: x.len(),
        tuples: x.tuple_count(),
        k,
        passed: r.passed(),
        sampled: r.sampled,
        verdict: verdict(r),
        witnesses,
    }
}

fn verify_options(cfg: &Config) -> VerifyOptions {
    if cfg.full {
        VerifyOptions::full()
    } else {
        VerifyOptions::sampled(cfg.sample, cfg.seed)
    }
}

/// Instance, target and assignment files for one stage.
fn store(art: &Artifacts, stem: &str, x: &RelStructure, y: &RelStructure, q: &QuantumAssignment) -> Result<Vec<String>> {
    let mut w = art.write(&format!("{stem}.x.json"), &x.to_json())?;
    w.extend(art.write(&format!("{stem}.y.json"), &y.to_json())?);
    w.extend(art.write(&format!("{stem}.assignment.json"), &q.to_json())?);
    Ok(w)
}

/// A greedy clique, grown from each vertex in degree order.
fn greedy_clique(g: &RelStructure) -> usize {
    let adj = gaifman_adjacency(g);
    let mut best = 0;
    let mut order: Vec<usize> = (0..adj.len()).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(adj[v].len()));
    for &s in order.iter().take(64) {
        let mut c = vec![s as u32];
        for &v in &order {
            if v != s && c.iter().all(|&u| adj[v].contains(&u)) {
                c.push(v as u32);
            }
        }
        best = best.max(c.len());
    }
    best
}

/// Two-colours each component by breadth-first search.
fn is_bipartite(g: &RelStructure) -> bool {
    if g.relations().iter().any(|r| r.iter().any(|t| t.iter().all(|&v| v == t[0]))) {
        return false;
    }
    let adj = gaifman_adjacency(g);
    let mut side = vec![u8::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    for s in 0..adj.len() {
        if side[s] != u8::MAX {
            continue;
        }
        side[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                let w = w as usize;
                if side[w] == u8::MAX {
                    side[w] = 1 - side[v];
                    queue.push_back(w);
                } else if side[w] == side[v] {
                    return false;
                }
            }
        }
    }
    true
}

fn colouring_bound(g: &RelStructure, n: usize, budget: Option<u64>) -> Result<String> {
    Ok(match colourable(g, n, budget) {
        Ok(Some(_)) => format!("{n}-colouring found: χ ≤ {n}"),
        Ok(None) => format!("no {n}-colouring: χ ≥ {}", n + 1),
        Err(Error::SearchBudgetExceeded(b)) => format!("{n}-colouring search undecided within {b} nodes"),
        Err(e) => return Err(e.into()),
    })
}

/// Magic-square run: cell operators, the label-cover reduction, the colouring
/// reduction and the symmetrized graph, each verified against its target.
pub fn pipeline_thm15(cfg: &Config, out: Option<&Path>) -> Result<PipelineReport> {
    let art = Artifacts::new(out)?;
    let mut rep = PipelineReport::new("thm15", cfg.seed);
    let opts = verify_options(cfg);

    let t0 = Instant::now();
    let s = magic_square();
    let phi = s.to_csp()?;
    let mp = mermin_peres();
    let sat = sat_value(&phi, cfg.budget)?;
    let (x, a) = to_structures(&phi);
    let v = verify_assignment(&x, &a, &mp.cell_assignment, 1)?;
    let mut st = record("magic-square", &x, Some(1), &v, store(&art, "magic_square", &x, &a, &mp.cell_assignment)?);
    st.tuples = phi.constraints().len();
    st.verdict = format!("sat {sat}; {}", st.verdict);
    st.passed &= sat < BigRational::from_integer(BigInt::from(1));
    rep.push(st, t0.elapsed());

    let t0 = Instant::now();
    let r = build_rho1(&s, 1, 2, cfg.max_vertices)?;
    let ones = r.tags.iter().filter(|&&t| t == EdgeTag::OneToOne).count();
    let shaped = r
        .instance
        .constraints()
        .iter()
        .zip(&r.tags)
        .all(|(c, t)| block_form(&c.predicate).is_some_and(|f| f.d == if *t == EdgeTag::OneToOne { 1 } else { 2 }));
    rep.push(
        StageRecord {
            name: "rho1".into(),
            vertices: r.vertices.len(),
            tuples: r.tags.len(),
            k: None,
            passed: shaped,
            sampled: false,
            verdict: format!("{ones} 1-to-1 and {} 2-to-2 constraints, alphabet {}", r.tags.len() - ones, r.instance.alphabet().len()),
            witnesses: art.write("rho1.csp.json", &r.instance.to_json())?,
        },
        t0.elapsed(),
    );

    let t0 = Instant::now();
    let rho = build_rho2(&r)?;
    if let Err(e) = rho_quantum_transfer(&s, &r, &mp.equation_assignment) {
        rep.flags.push(format!("equation strategy refused at k=1: {e}"));
    }
    let w = rho_quantum_transfer(&s, &r, &mp.equation_assignment.clone().with_k(0))?;
    let (x2, a2) = to_structures(&rho);
    let v = verify_assignment(&x2, &a2, &w, 0)?;
    let one = verify_assignment(&x2, &a2, &w.clone().with_k(1), 1)?;
    if !one.passed() {
        rep.flags.push(format!("rho2 at k=1: {}", one.summary()));
    }
    let two_to_two = classify_label_cover(&rho)?.d_to_d.is_some_and(|dd| dd.d == 2);
    let mut st = record("rho2", &x2, Some(w.k), &v, store(&art, "rho2", &x2, &a2, &w)?);
    st.tuples = rho.constraints().len();
    st.passed &= two_to_two;
    rep.push(st, t0.elapsed());

    let t0 = Instant::now();
    let t = build_transition_matrix_with(2, &cfg.tolerances)?;
    let eta = eta_quantum_transfer(&rho, &w, &t, &opts)?;
    let wit = store(&art, "eta", &eta.graph, &eta.colours, &eta.assignment)?;
    rep.push(record("eta", &eta.graph, Some(eta.assignment.k), &eta.report, wit), t0.elapsed());

    let t0 = Instant::now();
    let sym = symmetrize(&eta.graph)?;
    let v = verify_assignment_with(&sym, &eta.colours, &eta.assignment, eta.assignment.k, &opts)?;
    let wit = art.write("eta_symmetric.x.json", &sym.to_json())?;
    rep.push(record("symmetrized", &sym, Some(eta.assignment.k), &v, wit), t0.elapsed());

    rep.chromatic_bounds.push(format!("greedy clique of size {}: χ ≥ {0}", greedy_clique(&sym)));
    if is_bipartite(&sym) {
        rep.flags.push("symmetrized graph is bipartite: quantum chromatic number 2".into());
    } else {
        rep.chromatic_bounds.push("odd cycle: χ ≥ 3".into());
    }
    for n in [3, 4] {
        rep.chromatic_bounds.push(colouring_bound(&sym, n, cfg.budget)?);
    }
    art.finish(&rep)?;
    Ok(rep)
}

/// The tiny planted 2-to-1 seed: three left variables over `{a0, a1}`, one
/// right variable over `{b0}`, with the left labels drawn from `seed`.
pub fn seed_instance(seed: u64) -> Result<(CspInstance, Homomorphism)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = vec!["x0".to_string(), "x1".into(), "x2".into(), "y0".into()];
    let alphabet = vec!["a0".to_string(), "a1".into(), "b0".into()];
    let raw = (0..3)
        .map(|x| RawConstraint { scope: vec![x, 3], predicate: Predicate::from_tuples(2, 3, [[0, 2], [1, 2]]), weight: None })
        .collect();
    let phi = CspInstance::new(names, alphabet, raw)?;
    let mut map: Vec<u32> = (0..3).map(|_| rng.gen_range(0..2)).collect();
    map.push(2);
    Ok((phi, Homomorphism { map }))
}

/// Machinery run with `i` line-digraph steps: a classical-lifted seed goes
/// through the label-cover stages, the colouring reduction and `i` transfers
/// to `δ^(i)K₄`, which is then coloured classically.
pub fn pipeline_thm14_machinery(cfg: &Config, i: usize, out: Option<&Path>) -> Result<PipelineReport> {
    if i > MAX_ITERATIONS {
        return Err(Error::SizeBudgetExceeded(format!("{i} line-digraph iterations (at most {MAX_ITERATIONS})")).into());
    }
    let art = Artifacts::new(out)?;
    let mut rep = PipelineReport::new("thm14", cfg.seed);
    let kp = 3 * (1usize << i) - 2;

    let t0 = Instant::now();
    let (phi, f) = seed_instance(cfg.seed)?;
    let (x, a) = to_structures(&phi);
    let lift = lift_classical(&f, &x, &a).with_k(2 * kp);
    let opts = DmrOptions { stage_parameters: Some((1, 1, 1)), max_vertices: cfg.max_vertices, max_constraints: cfg.max_vertices };
    let half = BigRational::new(1.into(), 2.into());
    let (p3, w3, drep) = dmr_pipeline(&phi, &half, kp, 2, Some(&lift), &opts)?;
    let w3 = w3.ok_or_else(|| anyhow!("label-cover stages dropped the assignment"))?;
    let mut wit = store(&art, "seed", &x, &a, &lift)?;
    wit.extend(art.write("dmr_report.json", &drep.to_json())?);
    let took = t0.elapsed() / 3;
    for (n, s) in drep.stages.iter().enumerate() {
        rep.push(
            StageRecord {
                name: s.name.into(),
                vertices: s.variables,
                tuples: s.constraints,
                k: s.k,
                passed: s.certificate && s.verified == Some(true),
                sampled: false,
                verdict: format!("certificate {}, assignment verified at k={}", s.certificate, s.k.unwrap_or(0)),
                witnesses: if n == 0 { wit.clone() } else { Vec::new() },
            },
            took,
        );
    }
    let (x3, a3) = to_structures(&p3);
    if let Some(last) = rep.stages.last_mut() {
        last.witnesses = store(&art, "collapse", &x3, &a3, &w3)?;
    }

    let t0 = Instant::now();
    let t = build_transition_matrix_with(2, &cfg.tolerances)?;
    let eta = eta_quantum_transfer(&p3, &w3, &t, &VerifyOptions::full())?;
    let wit = store(&art, "eta", &eta.graph, &eta.colours, &eta.assignment)?;
    rep.push(record("eta", &eta.graph, Some(eta.assignment.k), &eta.report, wit), t0.elapsed());

    let (mut g, mut y, mut q) = (eta.graph, eta.colours, eta.assignment);
    for j in 1..=i {
        let t0 = Instant::now();
        let k = (q.k - 2) / 2;
        let out = linedigraph_quantum_transfer(&g, &q, &y, k, cfg.budget)?;
        (g, y, q) = (out.gx.structure, out.gy.structure, out.assignment);
        let v = verify_assignment(&g, &y, &q, k)?;
        let stem = format!("delta{j}");
        let wit = store(&art, &stem, &g, &y, &q)?;
        rep.push(record(&format!("delta^{j}"), &g, Some(k), &v, wit), t0.elapsed());
    }

    let t0 = Instant::now();
    let c = match chromatic_number_with_budget(&y, 4, cfg.budget)? {
        Chromatic::Exactly(c) => c,
        Chromatic::AboveCap => return Err(anyhow!("δ^{i}K4 is not 4-colourable")),
    };
    let colours = colourable(&y, c, cfg.budget)?.ok_or_else(|| anyhow!("colouring vanished"))?;
    let col = Homomorphism { map: colours };
    let kc = clique(c);
    let ok = check_homomorphism(&col, &y, &kc)?;
    rep.chromatic_bounds.push(format!("χ(δ^{i}K4) = {c}"));
    rep.push(
        StageRecord {
            name: "target-colouring".into(),
            vertices: y.len(),
            tuples: y.tuple_count(),
            k: None,
            passed: ok,
            sampled: false,
            verdict: format!("δ^{i}K4 → K{c} by exact search"),
            witnesses: art.write("target_colouring.json", &col.to_names(&y, &kc))?,
        },
        t0.elapsed(),
    );

    let t0 = Instant::now();
    let id = Homomorphism::identity(g.len());
    let fin = compose_sandwich(&g, &id, &g, &q, &y, &col, &kc)?;
    let v = verify_assignment(&g, &kc, &fin, fin.k)?;
    let v0 = verify_assignment(&g, &kc, &fin, 0)?;
    let wit = store(&art, "final", &g, &kc, &fin)?;
    let mut st = record(&format!("K{c}"), &g, Some(fin.k), &v, wit);
    st.passed &= v0.passed();
    rep.push(st, t0.elapsed());
    if is_bipartite(&g) {
        rep.flags.push("final graph is bipartite: quantum chromatic number 2".into());
        rep.passed = false;
    }
    art.finish(&rep)?;
    Ok(rep)
}
