use chromagap::csp::*;
use chromagap::relstruct::{clique, cycle};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

fn colouring_csp(g: &chromagap::relstruct::RelStructure, k: usize) -> CspInstance {
    from_structures(g, &clique(k), None).unwrap()
}

fn brute_sat(phi: &CspInstance) -> BigRational {
    let nv = phi.variables().len();
    let na = phi.alphabet().len() as u32;
    let mut best = BigRational::zero();
    let mut f = vec![0u32; nv];
    loop {
        let v = phi.value_of(&f);
        if v > best {
            best = v;
        }
        let mut i = 0;
        loop {
            if i == nv {
                return best;
            }
            f[i] += 1;
            if f[i] < na {
                break;
            }
            f[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn odd_cycle_two_colouring_value() {
    let phi = colouring_csp(&cycle(5), 2);
    // 10 directed edges; best 2-colouring breaks one undirected edge
    assert_eq!(sat_value(&phi, None).unwrap(), q(8, 10));
    assert_eq!(sat_value(&colouring_csp(&cycle(5), 3), None).unwrap(), BigRational::one());
}

#[test]
fn isat_of_unsatisfiable_pair_is_half() {
    let p = Predicate::empty(2, 2);
    let phi = CspInstance::new(
        names(2),
        numeric_alphabet(2),
        vec![RawConstraint { scope: vec![0, 1], predicate: p, weight: None }],
    )
    .unwrap();
    assert_eq!(isat_value(&phi, 2, None).unwrap(), q(1, 2));
}

#[test]
fn isat_clique_with_one_and_two_labels() {
    // K4 colouring of a 5-clique: one label per vertex leaves a 4-clique
    let phi = colouring_csp(&clique(5), 4);
    assert_eq!(isat_value(&phi, 1, None).unwrap(), q(4, 5));
    assert_eq!(isat_value(&phi, 2, None).unwrap(), BigRational::one());
}

#[test]
fn weights_normalise() {
    let p = Predicate::full(2, 2);
    let raw = vec![
        RawConstraint { scope: vec![0, 1], predicate: p.clone(), weight: Some(q(3, 1)) },
        RawConstraint { scope: vec![1, 0], predicate: p.clone(), weight: Some(q(1, 1)) },
    ];
    let phi = CspInstance::new(names(2), numeric_alphabet(2), raw).unwrap();
    assert_eq!(phi.constraints()[0].weight, q(3, 4));
    let mixed = vec![
        RawConstraint { scope: vec![0, 1], predicate: p.clone(), weight: Some(q(3, 1)) },
        RawConstraint { scope: vec![1, 0], predicate: p, weight: None },
    ];
    assert!(CspInstance::new(names(2), numeric_alphabet(2), mixed).is_err());
}

#[test]
fn block_form_of_disequality_and_two_to_two() {
    let neq = Predicate::from_tuples(2, 2, [[0u32, 1], [1, 0]]);
    let f = block_form(&neq).unwrap();
    assert_eq!((f.m, f.d), (2, 1));
    assert_eq!(f.mu, vec![0, 1]);
    assert_eq!(f.nu, vec![1, 0]);
    assert_eq!(f.expand(), neq);

    let two = Predicate::from_tuples(2, 4, [[0u32, 1], [0, 3], [2, 1], [2, 3], [1, 0], [1, 2], [3, 0], [3, 2]]);
    let f = block_form(&two).unwrap();
    assert_eq!((f.m, f.d), (2, 2));
    assert_eq!(f.mu, vec![0, 2, 1, 3]);
    assert_eq!(f.nu, vec![1, 3, 0, 2]);
    assert_eq!(f.expand(), two);

    let bad = Predicate::from_tuples(2, 3, [[0u32, 0], [0, 1], [1, 1], [1, 2], [2, 0], [2, 2]]);
    assert!(block_form(&bad).is_none());
}

#[test]
fn projective_instance_profile() {
    // X1 = {x}, X2 = {y}; labels 0,1 on the left map onto 2 on the right
    let p = Predicate::from_tuples(2, 3, [[0u32, 2], [1, 2]]);
    let phi = CspInstance::new(
        names(2),
        numeric_alphabet(3),
        vec![RawConstraint { scope: vec![0, 1], predicate: p, weight: None }],
    )
    .unwrap();
    let prof = classify_label_cover(&phi).unwrap();
    assert_eq!(prof.bipartite, Some((vec![0], vec![1])));
    assert_eq!(prof.projective, Some((vec![0, 1], vec![2])));
    assert_eq!(prof.d_to_1, Some(2));
    assert!(prof.d_to_d.is_none());
}

#[test]
fn augment_adds_distance_pairs() {
    let phi = colouring_csp(&cycle(5), 3);
    let a1 = augment_k(&phi, 1);
    assert_eq!(a1.constraints().len(), 10 + 5);
    let a2 = augment_k(&phi, 2);
    assert_eq!(a2.constraints().len(), 10 + 10);
    let total: BigRational = a2.constraints().iter().map(|c| c.weight.clone()).sum();
    assert_eq!(total, BigRational::one());
    assert_eq!(a2.constraints()[0].weight, q(1, 20));
    assert_eq!(a2.constraints()[12].weight, q(1, 20));
}

#[test]
fn json_round_trip_keeps_weights() {
    let phi = augment_k(&colouring_csp(&cycle(4), 2), 1);
    let s = serde_json::to_string(&phi.to_json()).unwrap();
    let back = CspInstance::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
    assert_eq!(back, phi);
}

fn arb_csp() -> impl Strategy<Value = CspInstance> {
    (1usize..=4, 1usize..=3).prop_flat_map(|(nv, na)| {
        let pred = proptest::collection::vec(proptest::bool::ANY, na * na);
        proptest::collection::vec((0..nv as u32, 0..nv as u32, pred, 1i64..4), 1..6).prop_map(move |cs| {
            let raw = cs
                .into_iter()
                .map(|(a, b, bits, w)| {
                    let mut p = Predicate::empty(2, na);
                    for (i, &on) in bits.iter().enumerate() {
                        if on {
                            p.insert(&[(i / na) as u32, (i % na) as u32]);
                        }
                    }
                    RawConstraint { scope: vec![a, b], predicate: p, weight: Some(q(w, 1)) }
                })
                .collect();
            CspInstance::new(names(nv), numeric_alphabet(na), raw).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn sat_matches_brute_force(phi in arb_csp()) {
        prop_assert_eq!(sat_value(&phi, None).unwrap(), brute_sat(&phi));
    }

    #[test]
    fn values_are_ordered(phi in arb_csp()) {
        let s = sat_value(&phi, None).unwrap();
        prop_assert!(s >= BigRational::zero() && s <= BigRational::one());
        let i1 = isat_value(&phi, 1, None).unwrap();
        let i2 = isat_value(&phi, 2, None).unwrap();
        prop_assert!(i1 <= i2);
        if s == BigRational::one() {
            prop_assert_eq!(i1, BigRational::one());
        }
    }

    #[test]
    fn structures_round_trip(phi in arb_csp()) {
        let (x, a, _) = to_structures_indexed(&phi);
        let ws: Vec<BigRational> = {
            // from_structures enumerates constraints by symbol then tuple
            let (_, _, syms) = to_structures_indexed(&phi);
            let mut keyed: Vec<(String, Vec<u32>, BigRational)> = phi
                .constraints()
                .iter()
                .zip(syms)
                .map(|(c, s)| (s, c.scope.clone(), c.weight.clone()))
                .collect();
            keyed.sort_by(|p, r| (&p.0, &p.1).cmp(&(&r.0, &r.1)));
            keyed.dedup_by(|p, r| p.0 == r.0 && p.1 == r.1);
            keyed.into_iter().map(|k| k.2).collect()
        };
        let back = from_structures(&x, &a, Some(ws)).unwrap();
        let (x2, a2) = to_structures(&back);
        prop_assert_eq!(x2.tuple_count(), x.tuple_count());
        prop_assert_eq!(a2.len(), a.len());
    }

    #[test]
    fn block_form_expands_back(bits in proptest::collection::vec(proptest::bool::ANY, 16)) {
        let mut p = Predicate::empty(2, 4);
        for (i, &on) in bits.iter().enumerate() {
            if on { p.insert(&[(i / 4) as u32, (i % 4) as u32]); }
        }
        if let Some(f) = block_form(&p) {
            prop_assert_eq!(f.expand(), p);
        }
    }
}
