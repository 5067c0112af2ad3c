use chromagap::f2linalg::*;
use chromagap::Error;
use proptest::prelude::*;

fn e(n: usize, i: usize) -> F2Vector {
    F2Vector::unit(n, i)
}

fn sp(n: usize, vs: &[F2Vector]) -> F2Subspace {
    F2Subspace::span(n, vs).unwrap()
}

// magic square: cells 0..8 row-major; rows then columns, last column odd
fn magic_equations() -> Vec<(F2Vector, bool)> {
    let eqs = [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8]];
    eqs.iter()
        .enumerate()
        .map(|(i, t)| (F2Vector::from_support(9, t), i == 5))
        .collect()
}

fn all_functionals(d: &F2Subspace) -> Vec<F2Functional> {
    (0u32..1 << d.dim())
        .map(|m| F2Functional::new(d.clone(), (0..d.dim()).map(|i| m >> i & 1 == 1).collect()).unwrap())
        .collect()
}

#[test]
fn small_subspace_facts() {
    let u = sp(3, &[e(3, 0)]);
    assert_eq!(u.intersect(&u).unwrap(), u);
    assert_eq!(sp(3, &[e(3, 0)]).sum(&sp(3, &[e(3, 1)])).unwrap().dim(), 2);
    let a = sp(3, &[e(3, 0).add(&e(3, 1))]);
    // span(e1+e2) = {0, e1+e2}, span(e1) = {0, e1}: only zero in common
    let brute: Vec<_> = a.elements().into_iter().filter(|v| u.contains(v)).collect();
    assert_eq!(brute.len(), 1);
    assert_eq!(a.intersect(&u).unwrap().dim(), 0);
    assert!(matches!(a.sum(&F2Subspace::zero(4)), Err(Error::AmbientMismatch(3, 4))));
}

#[test]
fn subspace_counts() {
    let full = F2Subspace::full(3);
    let none = F2Subspace::zero(3);
    assert_eq!(enumerate_subspaces(&full, 0, &none).unwrap(), vec![F2Subspace::zero(3)]);
    assert_eq!(enumerate_subspaces(&full, 2, &none).unwrap().len(), 7);
    let v = sp(3, &[F2Vector::from_support(3, &[0, 2])]);
    // 7 planes, 3 of them through a fixed nonzero vector
    assert_eq!(enumerate_subspaces(&full, 2, &v).unwrap().len(), 4);
    assert!(enumerate_subspaces(&full, 1, &full).unwrap().is_empty());
    assert_eq!(enumerate_subspaces(&full, 1, &none).unwrap().len(), 7);
}

#[test]
fn extension_on_same_tuple_is_identity() {
    let eqs = magic_equations();
    let u = vec![eqs[0].clone()];
    let psi = F2Functional::from_values(9, &[(e(9, 0), true), (eqs[0].0.clone(), false)]).unwrap();
    assert_eq!(extend_functional(&psi, &u, &u).unwrap(), psi);
}

#[test]
fn disjoint_equation_is_forced() {
    let eqs = magic_equations();
    let (u, w) = (vec![eqs[0].clone()], vec![eqs[1].clone()]);
    let psi = F2Functional::from_values(9, &u).unwrap();
    let ext = extend_functional(&psi, &u, &w).unwrap();
    assert_eq!(ext.domain().dim(), 2);
    assert!(!ext.eval(&eqs[1].0).unwrap());
    assert!(ext.respects(&u) && ext.respects(&w));
}

#[test]
fn respect_violation_reported_first() {
    let eqs = magic_equations();
    let u = vec![eqs[0].clone()];
    let psi = F2Functional::from_values(9, &[(eqs[0].0.clone(), true)]).unwrap();
    assert!(matches!(extend_functional(&psi, &u, &u), Err(Error::RespectViolation(_))));
}

#[test]
fn conflicting_extension_reported() {
    let n = 3;
    let psi = F2Functional::from_values(n, &[(e(n, 0), true)]).unwrap();
    let w = vec![(e(n, 0), false)];
    assert!(matches!(extend_functional(&psi, &[], &w), Err(Error::ExtensionConflict(_))));
}

#[test]
fn magic_square_extensions_are_unique() {
    let eqs = magic_equations();
    let mut checked = 0;
    for (iu, u) in eqs.iter().enumerate() {
        let ut: Vec<usize> = u.0.support();
        let restriction = sp(9, &ut.iter().map(|&i| e(9, i)).collect::<Vec<_>>());
        let hu = sp(9, &[u.0.clone()]);
        for l in 0..=2 {
            for big_l in enumerate_subspaces(&restriction, l, &hu).unwrap() {
                let dom = big_l.sum(&hu).unwrap();
                for psi in all_functionals(&dom).into_iter().filter(|p| p.respects(&[u.clone()])) {
                    for w in &eqs {
                        let ext = extend_functional(&psi, &[u.clone()], &[w.clone()]).unwrap();
                        let target = dom.sum(&sp(9, &[w.0.clone()])).unwrap();
                        let brute: Vec<F2Functional> = all_functionals(&target)
                            .into_iter()
                            .filter(|c| {
                                c.respects(&[w.clone()])
                                    && dom.basis().iter().all(|b| c.eval(b).unwrap() == psi.eval(b).unwrap())
                            })
                            .collect();
                        assert_eq!(brute.len(), 1, "u={iu} ψ={psi:?}");
                        assert_eq!(ext, brute[0]);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 0);
}

fn arb_vec(n: usize) -> impl Strategy<Value = F2Vector> {
    proptest::collection::vec(proptest::bool::ANY, n).prop_map(|b| F2Vector::from_bits(&b))
}

fn arb_space(n: usize) -> impl Strategy<Value = F2Subspace> {
    proptest::collection::vec(arb_vec(n), 0..5).prop_map(move |vs| F2Subspace::span(n, &vs).unwrap())
}

proptest! {
    #[test]
    fn grassmann_dimension_formula(u in arb_space(9), v in arb_space(9)) {
        let s = u.sum(&v).unwrap();
        let i = u.intersect(&v).unwrap();
        prop_assert_eq!(s.dim() + i.dim(), u.dim() + v.dim());
        prop_assert!(i.is_subspace_of(&u) && i.is_subspace_of(&v));
        prop_assert!(u.is_subspace_of(&s) && v.is_subspace_of(&s));
    }

    #[test]
    fn canonical_form_identifies_equal_spaces(vs in proptest::collection::vec(arb_vec(9), 1..5), seed in any::<u64>()) {
        let a = F2Subspace::span(9, &vs).unwrap();
        // rebuild from shuffled, recombined generators
        let mut gens: Vec<F2Vector> = vs.clone();
        let k = gens.len();
        for j in 1..k {
            if seed >> j & 1 == 1 {
                let prev = gens[j - 1].clone();
                gens[j].add_assign(&prev);
            }
        }
        gens.rotate_left((seed as usize) % k);
        let b = F2Subspace::span(9, &gens).unwrap();
        prop_assert_eq!(a.basis(), b.basis());
        let pivots = a.pivots();
        prop_assert!(pivots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn membership_matches_element_list(u in arb_space(6), v in arb_vec(6)) {
        prop_assert_eq!(u.contains(&v), u.elements().contains(&v));
    }
}
