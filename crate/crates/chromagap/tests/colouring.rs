use std::collections::BTreeSet;

use chromagap::colouring::*;
use chromagap::csp::{BlockForm, CspInstance, RawConstraint};
use chromagap::pultr::{central_apply, is_faithful, left_apply, line_digraph_template};
use chromagap::qop::{eigenprojector, lift_classical, pauli_word, verify_assignment, QuantumAssignment, VerifyOptions};
use chromagap::relstruct::*;
use chromagap::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn digraph(n: usize, edges: &[(u32, u32)]) -> RelStructure {
    RelStructure::digraph((0..n).map(|i| i.to_string()).collect(), edges)
}

fn named_edges(x: &RelStructure) -> BTreeSet<(String, String)> {
    x.edges().unwrap().iter().map(|t| (x.name(t[0]).to_string(), x.name(t[1]).to_string())).collect()
}

/// A d-to-d instance with `m·d` labels; each constraint gets random `(μ, ν)`.
fn random_dtod(rng: &mut ChaCha8Rng, vars: usize, m: usize, d: usize, scopes: &[(u32, u32)]) -> CspInstance {
    let n = m * d;
    let raw = scopes
        .iter()
        .map(|&(a, b)| {
            let mut mu: Vec<u32> = (0..n as u32).collect();
            let mut nu = mu.clone();
            mu.shuffle(rng);
            nu.shuffle(rng);
            RawConstraint { scope: vec![a, b], predicate: BlockForm { m, d, mu, nu }.expand(), weight: None }
        })
        .collect();
    CspInstance::new((0..vars).map(|i| format!("x{i}")).collect(), (0..n).map(|i| i.to_string()).collect(), raw).unwrap()
}

#[test]
fn line_digraph_examples() {
    let p = line_digraph(&digraph(3, &[(0, 1), (1, 2)])).unwrap();
    assert_eq!(p.len(), 2);
    assert_eq!(named_edges(&p), BTreeSet::from([(r#"["0","1"]"#.to_string(), r#"["1","2"]"#.to_string())]));

    let e = line_digraph(&digraph(2, &[(0, 1)])).unwrap();
    assert_eq!((e.len(), e.edges().unwrap().len()), (1, 0));

    let k2 = line_digraph(&digraph(2, &[(0, 1), (1, 0)])).unwrap();
    assert_eq!(k2.len(), 2);
    assert_eq!(
        named_edges(&k2),
        BTreeSet::from([
            (r#"["0","1"]"#.to_string(), r#"["1","0"]"#.to_string()),
            (r#"["1","0"]"#.to_string(), r#"["0","1"]"#.to_string()),
        ])
    );

    let two = RelStructure::new(
        Signature::new(vec![Symbol { name: "E".into(), arity: 2 }, Symbol { name: "F".into(), arity: 2 }]).unwrap(),
        vec!["a".into()],
        vec![Relation::empty(2), Relation::empty(2)],
    )
    .unwrap();
    assert!(matches!(line_digraph(&two), Err(Error::NotAGraphSignature)));
}

#[test]
fn alpha_beta_values() {
    assert_eq!(alpha_beta(2), (4, 2));
    assert_eq!(alpha_beta(4), (16, 6));
    for n in 1..=20 {
        let (a, b) = alpha_beta(n);
        assert!(a >= b);
    }
}

#[test]
fn transition_matrix_d2() {
    let t = build_transition_matrix(2).unwrap();
    assert_eq!(t.len(), 16);
    for i in 0..16 {
        let mut sum = 0.0;
        for j in 0..16 {
            let (a, b) = (&t.states()[i], &t.states()[j]);
            if a.iter().any(|x| b.contains(x)) {
                assert_eq!(t.entry(i, j), 0.0);
            } else {
                assert!(t.entry(i, j) > 0.0);
            }
            assert_eq!(t.entry(i, j).to_bits(), t.entry(j, i).to_bits());
            sum += t.entry(i, j);
        }
        assert!((sum - 1.0).abs() < 1e-12);
    }
    assert_eq!(t.spectrum().unit_multiplicity, 1);
    assert!(t.spectrum().second_modulus < 1.0 - 1e-8);
    assert_eq!(t.state_index(&[3, 1]), 13);
}

#[test]
fn transition_matrix_d3_certifies() {
    let t = build_transition_matrix(3).unwrap();
    assert_eq!(t.len(), 216);
    assert!(t.row_residual() < 1e-12);
    assert_eq!(t.spectrum().unit_multiplicity, 1);
    assert!(matches!(build_transition_matrix(1), Err(Error::Invalid(_))));
}

#[test]
fn eta_without_constraints_is_isolated() {
    let t = build_transition_matrix(2).unwrap();
    let phi = CspInstance::new(vec!["x".into(), "y".into()], (0..4).map(|i| i.to_string()).collect(), vec![]).unwrap();
    let g = eta_apply(&phi, &t, None).unwrap();
    assert_eq!(g.len(), 2 * 256);
    assert!(g.edges().unwrap().is_empty());
    assert_eq!(g.name(0), "0000^(x)");

    // the single-colour classical lift passes
    let f = eta_classical_colouring(&phi, 2, &[0, 0]).unwrap();
    let setup = eta_setup(&phi, 2).unwrap();
    let target = canonical_target(&setup, phi.alphabet()).unwrap();
    let q = lift_classical(&Homomorphism { map: vec![0, 0] }, &setup.x_phi, &target);
    let out = eta_quantum_transfer(&phi, &q, &t, &VerifyOptions::full()).unwrap();
    assert_eq!(out.graph, g);
    assert!(check_homomorphism(&f, &g, &clique(4)).unwrap());
}

#[test]
fn eta_single_constraint_matches_brute_force() {
    let t = build_transition_matrix(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..4 {
        // m = 1: z ∈ [4]^2, one block holding both labels
        let phi = random_dtod(&mut rng, 2, 1, 2, &[(0, 1)]);
        let g = eta_apply(&phi, &t, None).unwrap();
        assert_eq!(g.len(), 32);
        let f = eta_setup(&phi, 2).unwrap().forms[0].clone();
        let mut count = 0;
        for z in 0..16usize {
            for zp in 0..16usize {
                let zd = [z / 4, z % 4];
                let zpd = [zp / 4, zp % 4];
                let a: Vec<usize> = f.mu.iter().map(|&p| zd[p as usize]).collect();
                let b: Vec<usize> = f.nu.iter().map(|&p| zpd[p as usize]).collect();
                if a.iter().all(|x| !b.contains(x)) {
                    count += 1;
                }
            }
        }
        assert_eq!(g.edges().unwrap().len(), count);
        // 4·9 + 12·4 disjoint pairs
        assert_eq!(count, 84);
    }
}

#[test]
fn eta_is_left_functor_of_template() {
    let t = build_transition_matrix(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (m, scopes) in [(1, vec![(0, 1)]), (2, vec![(0, 1)]), (1, vec![(0, 1), (1, 2), (2, 0), (0, 1)])] {
        let vars = scopes.iter().map(|&(a, b)| a.max(b) as usize + 1).max().unwrap();
        let phi = random_dtod(&mut rng, vars, m, 2, &scopes);
        let setup = eta_setup(&phi, 2).unwrap();
        let tpl = eta_template(&setup, &t).unwrap();
        assert!(is_faithful(&tpl));
        let lam = left_apply(&tpl, &setup.x_phi).unwrap();
        assert_eq!(lam.structure, eta_apply(&phi, &t, None).unwrap());
    }
}

#[test]
fn size_budget_is_enforced() {
    let t = build_transition_matrix(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let phi = random_dtod(&mut rng, 2, 2, 2, &[(0, 1)]);
    assert!(matches!(eta_apply(&phi, &t, Some(100)), Err(Error::SizeBudgetExceeded(_))));
    let bad = CspInstance::new(
        vec!["x".into(), "y".into()],
        (0..4).map(|i| i.to_string()).collect(),
        vec![RawConstraint {
            scope: vec![0, 1],
            predicate: chromagap::csp::Predicate::from_tuples(2, 4, [[0u32, 0], [1, 1]]),
            weight: None,
        }],
    )
    .unwrap();
    assert!(matches!(eta_apply(&bad, &t, None), Err(Error::NotDtoD(_))));
}

#[test]
fn xi_colours_lambda_of_target() {
    let t = build_transition_matrix(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_dtod(&mut rng, 2, 1, 2, &[(0, 1), (1, 0)]);
    let setup = eta_setup(&phi, 2).unwrap();
    let target = canonical_target(&setup, phi.alphabet()).unwrap();
    let tpl = eta_template(&setup, &t).unwrap();
    let lg = left_apply(&tpl, &target).unwrap();
    let xi = xi_colouring(&setup, &target, &lg).unwrap();
    assert!(check_homomorphism(&xi, &lg.structure, &clique(4)).unwrap());
    let used: BTreeSet<u32> = xi.map.iter().copied().collect();
    assert_eq!(used.len(), 4);
}

#[test]
fn satisfiable_instances_map_to_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        // plant a solution: relabel each constraint so that the planted pair sits in one block
        let n = 4;
        let plant: Vec<u32> = (0..3).map(|_| rng.gen_range(0..n)).collect();
        let mut raw = Vec::new();
        for (a, b) in [(0u32, 1u32), (1, 2), (0, 2)] {
            let mut mu: Vec<u32> = (0..n).collect();
            let mut nu = mu.clone();
            mu.shuffle(&mut rng);
            nu.shuffle(&mut rng);
            let pa = mu.iter().position(|&l| l == plant[a as usize]).unwrap();
            let pb = nu.iter().position(|&l| l == plant[b as usize]).unwrap();
            nu.swap(pb, pa);
            raw.push(RawConstraint { scope: vec![a, b], predicate: BlockForm { m: 2, d: 2, mu, nu }.expand(), weight: None });
        }
        let phi = CspInstance::new(vec!["a".into(), "b".into(), "c".into()], (0..4).map(|i| i.to_string()).collect(), raw).unwrap();
        let setup = eta_setup(&phi, 2).unwrap();
        let target = canonical_target(&setup, phi.alphabet()).unwrap();
        let f = find_homomorphism(&setup.x_phi, &target, None).unwrap().expect("planted solution");
        assert_eq!(phi.value_of(&f.map), num_rational::BigRational::from_integer(1.into()));
    }
}

#[test]
fn eta_transfer_of_lift_is_classical_colouring() {
    let t = build_transition_matrix(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut done = 0;
    while done < 3 {
        let phi = random_dtod(&mut rng, 3, 2, 2, &[(0, 1), (1, 2)]);
        let setup = eta_setup(&phi, 2).unwrap();
        let target = canonical_target(&setup, phi.alphabet()).unwrap();
        let Some(f) = find_homomorphism(&setup.x_phi, &target, None).unwrap() else { continue };
        let q = lift_classical(&f, &setup.x_phi, &target);
        let out = eta_quantum_transfer(&phi, &q, &t, &VerifyOptions::full()).unwrap();
        let c = eta_classical_colouring(&phi, 2, &f.map).unwrap();
        assert!(check_homomorphism(&c, &out.graph, &out.colours).unwrap());
        let expect = lift_classical(&c, &out.graph, &out.colours);
        for v in out.graph.domain() {
            assert_eq!(out.assignment.pvm(v), expect.pvm(v));
        }
        done += 1;
    }
}

#[test]
fn line_digraph_transfer_of_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut done = 0;
    while done < 10 {
        let x = random_structure(&mut rng, &Signature::binary("E"), 4, 0.3);
        let y = random_structure(&mut rng, &Signature::binary("E"), 3, 0.6);
        let Some(f) = find_homomorphism(&x, &y, None).unwrap() else { continue };
        let q = lift_classical(&f, &x, &y);
        let out = linedigraph_quantum_transfer(&x, &q, &y, 1, None).unwrap();
        let dx = line_digraph(&x).unwrap();
        let dy = line_digraph(&y).unwrap();
        assert_eq!(out.gx.structure, dx);
        assert_eq!(out.gy.structure, dy);
        // δf sends (u, v) to (f u, f v)
        let df = Homomorphism {
            map: dx
                .domain()
                .iter()
                .map(|e| {
                    let uv: Vec<String> = serde_json::from_str(e).unwrap();
                    let (u, v) = (x.vertex(&uv[0]).unwrap(), x.vertex(&uv[1]).unwrap());
                    dy.vertex(&edge_name(&y, f.map[u as usize], f.map[v as usize])).unwrap()
                })
                .collect(),
        };
        let expect = lift_classical(&df, &dx, &dy);
        for v in dx.domain() {
            assert_eq!(out.assignment.pvm(v), expect.pvm(v));
        }
        done += 1;
    }
}

#[test]
fn line_digraph_transfer_from_four_compatible() {
    // four commuting Pauli observables on a directed 4-path into the loopy 2-vertex digraph
    let x = digraph(4, &[(0, 1), (1, 2), (2, 3)]);
    let y = digraph(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    let mut q = QuantumAssignment::new(4, 4);
    for (i, w) in ["XI", "IX", "XX", "XI"].iter().enumerate() {
        q.insert(&i.to_string(), "0", eigenprojector(&pauli_word(w), false));
        q.insert(&i.to_string(), "1", eigenprojector(&pauli_word(w), true));
    }
    assert!(verify_assignment(&x, &y, &q, 4).unwrap().passed());
    let out = linedigraph_quantum_transfer(&x, &q, &y, 1, None).unwrap();
    assert_eq!(out.gx.structure.len(), 3);
    assert!(verify_assignment(&out.gx.structure, &out.gy.structure, &out.assignment, 1).unwrap().passed());
    assert!(matches!(
        linedigraph_quantum_transfer(&x, &q.clone().with_k(3), &y, 1, None),
        Err(Error::CompatibilityTooLow { have: 3, need: 4 })
    ));
}

#[test]
fn second_line_digraph_of_k4_is_three_chromatic() {
    let k4 = clique(4);
    let d2 = line_digraph(&line_digraph(&k4).unwrap()).unwrap();
    assert_eq!(d2.len(), 36);
    assert_eq!(chromatic_number(&d2, 4).unwrap(), Chromatic::Exactly(3));
}

fn arb_digraph() -> impl Strategy<Value = RelStructure> {
    (1usize..=5).prop_flat_map(|n| {
        proptest::collection::vec((0..n as u32, 0..n as u32), 0..=5).prop_map(move |e| digraph(n, &e))
    })
}

fn chi(x: &RelStructure) -> Option<usize> {
    match chromatic_number(x, 8).unwrap() {
        Chromatic::Exactly(c) => Some(c),
        Chromatic::AboveCap => None,
    }
}

proptest! {
    #[test]
    fn line_digraph_is_central_functor(x in arb_digraph()) {
        let g = central_apply(&line_digraph_template(), &x, None).unwrap();
        prop_assert_eq!(g.structure, line_digraph(&x).unwrap());
    }

    #[test]
    fn line_digraph_chromatic_bounds(x in arb_digraph(), n in 1u32..=3) {
        let (a, b) = alpha_beta(n);
        let cx = chi(&x);
        let cd = chi(&line_digraph(&x).unwrap());
        if cd.is_some_and(|c| c <= n as usize) {
            prop_assert!(cx.is_some_and(|c| c as u128 <= a));
        }
        if cx.is_some_and(|c| c as u128 <= b) {
            prop_assert!(cd.is_some_and(|c| c <= n as usize));
        }
    }
}
