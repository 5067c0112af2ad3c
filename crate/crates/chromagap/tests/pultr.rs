use std::collections::BTreeSet;

use chromagap::pultr::*;
use chromagap::qop::{eigenprojector, lift_classical, pauli_word, verify_assignment, QuantumAssignment};
use chromagap::relstruct::*;
use chromagap::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sized(rng: &mut ChaCha8Rng, sig: &Signature, n: std::ops::RangeInclusive<usize>, p: f64) -> RelStructure {
    let n = rng.gen_range(n);
    random_structure(rng, sig, n, p)
}

fn same_pvms(a: &QuantumAssignment, b: &QuantumAssignment) -> bool {
    a.dim == b.dim
        && a.variables().collect::<Vec<_>>() == b.variables().collect::<Vec<_>>()
        && a.variables().all(|v| a.pvm(v) == b.pvm(v))
}

fn names(x: &RelStructure, e: &[u32]) -> Vec<String> {
    e.iter().map(|&v| x.name(v).to_string()).collect()
}

fn named_edges(x: &RelStructure) -> BTreeSet<Vec<String>> {
    x.edges().unwrap().iter().map(|t| names(x, t)).collect()
}

fn pair_name(u: &str, v: &str) -> String {
    serde_json::to_string(&[u, v]).unwrap()
}

/// Line digraph straight from the definition.
fn line_digraph_brute(y: &RelStructure) -> (BTreeSet<String>, BTreeSet<Vec<String>>) {
    let e: Vec<Vec<u32>> = y.edges().unwrap().iter().map(|t| t.to_vec()).collect();
    let verts = e.iter().map(|t| pair_name(y.name(t[0]), y.name(t[1]))).collect();
    let mut edges = BTreeSet::new();
    for s in &e {
        for t in &e {
            if s[1] == t[0] {
                edges.insert(vec![pair_name(y.name(s[0]), y.name(s[1])), pair_name(y.name(t[0]), y.name(t[1]))]);
            }
        }
    }
    (verts, edges)
}

#[test]
fn line_digraph_template_flags() {
    let t = line_digraph_template();
    let f = template_predicates(&t);
    assert!(f.connected);
    assert!(!f.faithful);
    assert_eq!(f.diameter, Some(2));
}

#[test]
fn central_functor_of_line_template_is_line_digraph() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = line_digraph_template();
    for _ in 0..30 {
        let n = rng.gen_range(1..=5);
        let y = random_structure(&mut rng, &Signature::binary("E"), n, 0.4);
        let g = central_apply(&t, &y, None).unwrap();
        let (verts, edges) = line_digraph_brute(&y);
        assert_eq!(g.structure.domain().iter().cloned().collect::<BTreeSet<_>>(), verts);
        assert_eq!(named_edges(&g.structure), edges);
    }
}

#[test]
fn left_functor_of_point_is_a() {
    let t = line_digraph_template();
    let x = RelStructure::digraph(vec!["p".into()], &[]);
    let l = left_apply(&t, &x).unwrap();
    assert_eq!(l.structure.domain(), &["t^(p)".to_string(), "h^(p)".to_string()]);
    assert_eq!(named_edges(&l.structure), BTreeSet::from([vec!["t^(p)".to_string(), "h^(p)".to_string()]]));
}

#[test]
fn left_functor_glues_along_edges() {
    let t = line_digraph_template();
    let x = RelStructure::digraph(vec!["u".into(), "v".into()], &[(0, 1)]);
    let l = left_apply(&t, &x).unwrap();
    // h^(u) ~ 1^E(u,v) ~ t^(v): three classes on a 2-path
    assert_eq!(l.structure.len(), 3);
    assert_eq!(l.structure.edges().unwrap().len(), 2);
    assert_eq!(l.a_class(0, 1), l.a_class(1, 0));
    assert_eq!(l.members[l.a_class(0, 1) as usize].len(), 3);
}

#[test]
fn exponential_template_matches_function_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let g = symmetrize(&sized(&mut rng, &Signature::binary("E"), 1..=3, 0.5)).unwrap();
        let y = symmetrize(&sized(&mut rng, &Signature::binary("E"), 1..=3, 0.5)).unwrap();
        let t = exponential_template(&g).unwrap();
        assert!(template_predicates(&t).faithful);
        let gy = central_apply(&t, &y, None).unwrap();

        // all maps V(G) → V(Y); f → h iff every edge (u,v) of G lands on (f u, h v)
        let (n, m) = (g.len(), y.len());
        let maps: Vec<Vec<u32>> = (0..m.pow(n as u32))
            .map(|mut c| {
                (0..n)
                    .map(|_| {
                        let d = (c % m) as u32;
                        c /= m;
                        d
                    })
                    .collect()
            })
            .collect();
        let ey = y.edges().unwrap();
        let mut expected = BTreeSet::new();
        for f in &maps {
            for h in &maps {
                if g.edges().unwrap().iter().all(|e| ey.contains(&[f[e[0] as usize], h[e[1] as usize]])) {
                    expected.insert(vec![
                        hom_name(&Homomorphism { map: f.clone() }, &y),
                        hom_name(&Homomorphism { map: h.clone() }, &y),
                    ]);
                }
            }
        }
        assert_eq!(gy.structure.len(), maps.len());
        assert_eq!(named_edges(&gy.structure), expected);
    }
}

#[test]
fn template_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for shape in [TemplateShape::Any, TemplateShape::Connected, TemplateShape::Faithful] {
        let t = random_template(&mut rng, shape);
        let back = PultrTemplate::from_json(&serde_json::from_str(&serde_json::to_string(&t.to_json()).unwrap()).unwrap());
        assert_eq!(back.unwrap(), t);
    }
}

#[test]
fn random_shapes_have_their_flags() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let c = random_template(&mut rng, TemplateShape::Connected);
        assert!(template_predicates(&c).connected);
        assert!(c.a().len() <= 3 && (0..c.tau().len()).all(|i| c.b(i).len() <= 4));
        let f = random_template(&mut rng, TemplateShape::Faithful);
        assert!(template_predicates(&f).faithful);
        assert!((0..f.tau().len()).all(|i| f.b(i).len() <= 4));
    }
}

#[test]
fn faithless_templates_are_refused() {
    let t = line_digraph_template();
    let x = RelStructure::digraph(vec!["p".into()], &[]);
    let q = QuantumAssignment::new(1, 1);
    assert!(matches!(transfer_lambda(&t, &x, &q, &x), Err(Error::NotFaithful)));
}

fn mermin_line_case() -> (RelStructure, QuantumAssignment, RelStructure) {
    let x = RelStructure::digraph((0..15).map(|i| format!("v{i}")).collect(), &(0..14).map(|i| (i, i + 1)).collect::<Vec<_>>());
    let y = RelStructure::digraph(vec!["0".into(), "1".into()], &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    let mut q = QuantumAssignment::new(4, 4);
    for i in 0..15 {
        let o = pauli_word(["XI", "XX", "YY"][i / 5]);
        q.insert(&format!("v{i}"), "0", eigenprojector(&o, false));
        q.insert(&format!("v{i}"), "1", eigenprojector(&o, true));
    }
    (x, q, y)
}

#[test]
fn mermin_path_transfers_to_line_digraphs() {
    let (x, q, y) = mermin_line_case();
    assert!(verify_assignment(&x, &y, &q, 4).unwrap().passed());
    // XI and YY anticommute, six steps apart
    assert!(!verify_assignment(&x, &y, &q, 10).unwrap().passed());
    let t = line_digraph_template();
    let out = gamma_functor(&t, &x, &q, &y, 1, None).unwrap();
    assert_eq!(out.gx.structure.len(), 14);
    assert_eq!(out.gy.structure.len(), 4);
    let rep = verify_assignment(&out.gx.structure, &out.gy.structure, &out.assignment, 1).unwrap();
    assert!(rep.passed(), "{}", rep.summary());
    assert!(matches!(
        gamma_functor(&t, &x, &q, &y, 2, None),
        Err(Error::CompatibilityTooLow { have: 4, need: 6 })
    ));
}

#[test]
fn gamma_projector_vanishes_off_homomorphisms() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut checked = 0;
    while checked < 30 {
        let t = random_template(&mut rng, TemplateShape::Connected);
        let x = sized(&mut rng, t.tau(), 1..=3, 0.4);
        let y = sized(&mut rng, t.rho(), 1..=3, 0.6);
        let lam = left_apply(&t, &x).unwrap();
        let Some(f) = find_homomorphism(&lam.structure, &y, None).unwrap() else { continue };
        let q = lift_classical(&f, &lam.structure, &y);
        let na = t.a().len();
        for xv in 0..x.len() as u32 {
            for c in 0..y.len().pow(na as u32) {
                let map: Vec<u32> = (0..na).map(|i| (c / y.len().pow(i as u32) % y.len()) as u32).collect();
                let h = Homomorphism { map };
                if !check_homomorphism(&h, t.a(), &y).unwrap() {
                    assert!(gamma_projector(&t, &lam, &q, xv, &h, &y).is_zero());
                }
            }
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adjunction_holds_on_random_templates(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_template(&mut rng, TemplateShape::Any);
        let x = sized(&mut rng, t.tau(), 1..=4, 0.3);
        let y = sized(&mut rng, t.rho(), 1..=4, 0.5);
        let (l, g) = adjunction_oracle(&t, &x, &y, None).unwrap();
        prop_assert_eq!(l, g);
    }

    #[test]
    fn gamma_transfer_of_lift_is_lift_of_adjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_template(&mut rng, TemplateShape::Connected);
        let x = sized(&mut rng, t.tau(), 1..=4, 0.3);
        let y = sized(&mut rng, t.rho(), 1..=4, 0.6);
        let lam = left_apply(&t, &x).unwrap();
        if let Some(f) = find_homomorphism(&lam.structure, &y, None).unwrap() {
            let q = lift_classical(&f, &lam.structure, &y);
            let (gy, w) = transfer_gamma(&t, &x, &lam, &q, &y, 1, None).unwrap();
            // x ↦ (a ↦ f[a^(x)])
            let adj: Vec<u32> = (0..x.len() as u32)
                .map(|xv| {
                    let img: Vec<u32> = (0..t.a().len() as u32).map(|a| f.map[lam.a_class(xv, a) as usize]).collect();
                    gy.homs.iter().position(|h| h.map == img).unwrap() as u32
                })
                .collect();
            let g = Homomorphism { map: adj };
            prop_assert!(check_homomorphism(&g, &x, &gy.structure).unwrap());
            prop_assert!(same_pvms(&w, &lift_classical(&g, &x, &gy.structure)));
            prop_assert!(verify_assignment(&x, &gy.structure, &w, 1).unwrap().passed());
        }
    }

    #[test]
    fn lambda_transfer_of_lift_is_lift_of_adjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_template(&mut rng, TemplateShape::Faithful);
        let x = sized(&mut rng, t.tau(), 1..=4, 0.3);
        let y = sized(&mut rng, t.rho(), 1..=4, 0.6);
        let gy = central_apply(&t, &y, None).unwrap();
        if let Some(g) = find_homomorphism(&x, &gy.structure, None).unwrap() {
            let q = lift_classical(&g, &x, &gy.structure);
            let (lam, w) = transfer_lambda(&t, &x, &q, &y).unwrap();
            // [a^(x)] ↦ g(x)(a); [b^T(x̄)] ↦ g(x_i)(a) where b = ε_i(a)
            let f: Vec<u32> = lam
                .members
                .iter()
                .map(|ms| match ms[0] {
                    CopyTag::A { x: xv, a } => gy.homs[g.map[xv as usize] as usize].map[a as usize],
                    CopyTag::B { symbol, tuple, b } => {
                        let s = symbol as usize;
                        let (i, a) = (0..t.tau().symbols()[s].arity)
                            .find_map(|i| t.eps(s, i).map.iter().position(|&v| v == b).map(|a| (i, a)))
                            .unwrap();
                        let xv = x.relation(s).tuple(tuple as usize)[i];
                        gy.homs[g.map[xv as usize] as usize].map[a]
                    }
                })
                .collect();
            let f = Homomorphism { map: f };
            prop_assert!(check_homomorphism(&f, &lam.structure, &y).unwrap());
            prop_assert!(same_pvms(&w, &lift_classical(&f, &lam.structure, &y)));
            prop_assert!(verify_assignment(&lam.structure, &y, &w, 1).unwrap().passed());
        }
    }

    #[test]
    fn lambda_functor_of_lift_is_lift(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_template(&mut rng, TemplateShape::Faithful);
        let x = sized(&mut rng, t.tau(), 1..=3, 0.3);
        let y = sized(&mut rng, t.tau(), 1..=3, 0.6);
        if let Some(h) = find_homomorphism(&x, &y, None).unwrap() {
            let q = lift_classical(&h, &x, &y);
            let out = lambda_functor(&t, &x, &q, &y).unwrap();
            prop_assert!(verify_assignment(&out.lx.structure, &out.ly.structure, &out.assignment, 2).unwrap().passed());
            // [a^(x)] goes to [a^(h x)]
            for xv in 0..x.len() as u32 {
                for a in 0..t.a().len() as u32 {
                    let src = out.lx.structure.name(out.lx.a_class(xv, a));
                    let dst = out.ly.structure.name(out.ly.a_class(h.map[xv as usize], a));
                    prop_assert!(out.assignment.get(src, dst).is_some());
                }
            }
        }
    }
}
