//! Gram-algebra quantities checked against brute-force truncated Fock sums.

use ecs_core::fock::{coherent_fock, cutoff_for, FockVector};
use ecs_core::{branch_overlap, fidelity_pure, overlap, AtomWord, Branch, HybridState, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// ⟨a|b⟩ by summing Fock amplitudes.
fn fock_overlap(a: C64, b: C64, cutoff: usize) -> C64 {
    let (fa, _) = coherent_fock(a, cutoff);
    let (fb, _) = coherent_fock(b, cutoff);
    fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).sum()
}

fn fock_norm2(s: &HybridState) -> f64 {
    let max_amp = s
        .branches()
        .iter()
        .flat_map(|b| b.modes.iter().map(|a| a.norm()))
        .fold(0.0, f64::max);
    FockVector::from_hybrid(s, cutoff_for(max_amp, 1e-16)).norm2()
}

fn field(terms: &[(f64, Vec<C64>)]) -> HybridState {
    HybridState::field_superposition(&terms.iter().map(|(w, m)| (c(*w, 0.0), m.clone())).collect::<Vec<_>>()).unwrap()
}

fn w_branches(beta: C64) -> Vec<Vec<C64>> {
    (0..3)
        .map(|i| {
            let mut m = vec![beta; 3];
            m[i] = -beta;
            m
        })
        .collect()
}

#[test]
fn overlap_matches_fock_sum() {
    let direct = overlap(c(2.0, 0.0), c(0.0, 2.0));
    let expect = c(-4.0, 4.0).exp();
    assert!((direct - expect).norm() < 1e-15);
    let oracle = fock_overlap(c(2.0, 0.0), c(0.0, 2.0), 60);
    assert!((direct - oracle).norm() < 1e-12, "{direct} vs {oracle}");
}

#[test]
fn two_mode_mismatch_overlap() {
    for b in [0.3, 1.0, 1.7] {
        let beta = c(b, 0.0);
        let b1 = Branch::new(AtomWord::empty(), c(1.0, 0.0), vec![-beta, beta, beta]);
        let b2 = Branch::new(AtomWord::empty(), c(1.0, 0.0), vec![beta, -beta, beta]);
        let got = branch_overlap(&b1, &b2).unwrap();
        let oracle = fock_overlap(-beta, beta, 50) * fock_overlap(beta, -beta, 50) * fock_overlap(beta, beta, 50);
        assert!((got - oracle).norm() < 1e-12);
        assert!((got.re - (-4.0 * b * b).exp()).abs() < 1e-15);
    }
}

#[test]
fn w_gram_off_diagonals() {
    let beta = c(0.9, 0.0);
    let s = field(&w_branches(beta).into_iter().map(|m| (1.0, m)).collect::<Vec<_>>());
    let g = s.gram();
    let v: Vec<FockVector> = w_branches(beta)
        .into_iter()
        .map(|m| FockVector::from_hybrid(&HybridState::product(AtomWord::empty(), m).unwrap(), 40))
        .collect();
    for i in 0..3 {
        for j in 0..3 {
            let oracle = v[i].inner(&v[j]).unwrap();
            assert!((g[(i, j)] - oracle).norm() < 1e-12);
            if i != j {
                assert!((g[(i, j)].re - (-4.0 * 0.81f64).exp()).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn ghz_and_w_norms_match_fock() {
    for b in [0.0, 0.4, 1.0, 1.5] {
        let beta = c(b, 0.0);
        let ghz = field(&[(1.0, vec![beta; 3]), (1.0, vec![-beta; 3])]);
        let expect = 2.0 * (1.0 + (-6.0 * b * b).exp());
        assert!((ghz.norm2() - expect).abs() < 1e-12);
        assert!((fock_norm2(&ghz) - expect).abs() < 1e-10);

        let w = field(&w_branches(beta).into_iter().map(|m| (1.0, m)).collect::<Vec<_>>());
        let expect = 3.0 + 6.0 * (-4.0 * b * b).exp();
        assert!((w.norm2() - expect).abs() < 1e-12);
        assert!((fock_norm2(&w) - expect).abs() < 1e-10);
    }
    let beta0 = c(0.0, 0.0);
    assert_eq!(field(&[(1.0, vec![beta0; 3]), (1.0, vec![beta0; 3])]).norm2(), 4.0);
}

#[test]
fn density_trace_of_normalized_ghz() {
    let beta = c(1.2, -0.4);
    let s = field(&[(1.0, vec![beta; 3]), (1.0, vec![-beta; 3])])
        .normalize()
        .unwrap();
    assert!((s.to_density().trace() - 1.0).abs() < 1e-12);
}

#[test]
fn converted_norm_within_tail_bound() {
    let beta = c(1.4, 0.6);
    let s = field(&[(1.0, vec![beta; 3]), (1.0, vec![-beta; 3])]);
    for cutoff in [4, 8, 16] {
        let v = FockVector::from_hybrid(&s, cutoff);
        let gap = s.norm2() - v.norm2();
        assert!(
            gap >= -1e-12 && gap <= v.tail_bound() + 1e-12,
            "cutoff {cutoff}: gap {gap}, bound {}",
            v.tail_bound()
        );
    }
}

fn amp() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| c(re, im))
}

fn small_amp() -> impl Strategy<Value = C64> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(re, im)| c(re, im))
}

/// Random unnormalized state with one atom and two modes.
fn hybrid() -> impl Strategy<Value = HybridState> {
    prop::collection::vec((prop::bool::ANY, amp(), small_amp(), small_amp()), 1..6).prop_map(|terms| {
        let branches = terms
            .into_iter()
            .map(|(e, coeff, a, b)| Branch::new(if e { "e" } else { "g" }.parse().unwrap(), coeff, vec![a, b]))
            .collect();
        HybridState::new(1, 2, branches).unwrap()
    })
}

proptest! {
    #[test]
    fn overlap_hermitian_and_bounded(a in amp(), b in amp()) {
        let ab = overlap(a, b);
        prop_assert!((ab - overlap(b, a).conj()).norm() < 1e-12);
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
        prop_assert!((overlap(a, a) - c(1.0, 0.0)).norm() < 1e-12);
        if (a - b).norm() > 1e-3 {
            prop_assert!(ab.norm() < 1.0);
        }
    }

    #[test]
    fn gram_is_hermitian_psd(s in hybrid()) {
        let g = s.gram();
        let n = g.nrows();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((g[(i, j)] - g[(j, i)].conj()).norm() < 1e-12);
            }
        }
        let min = g.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-10);
    }

    #[test]
    fn norm_invariant_under_reorder_and_prune(s in hybrid()) {
        let mut reversed: Vec<Branch> = s.branches().to_vec();
        reversed.reverse();
        let r = HybridState::new(1, 2, reversed).unwrap();
        prop_assert!((r.norm2() - s.norm2()).abs() < 1e-12 * (1.0 + s.norm2()));
        let tol = 1e-12;
        let p = s.prune(tol);
        prop_assert!((p.norm2() - s.norm2()).abs() <= 4.0 * tol * s.branches().len() as f64 + 1e-12 * s.norm2());
    }

    #[test]
    fn duplicated_branches_prune_back(s in hybrid()) {
        let mut doubled = s.branches().to_vec();
        doubled.extend(s.branches().iter().cloned());
        let d = HybridState::new(1, 2, doubled).unwrap();
        prop_assert!((d.prune(1e-12).norm2() - 4.0 * s.norm2()).abs() < 1e-9 * (1.0 + s.norm2()));
    }

    #[test]
    fn fock_norm_agrees_with_gram(s in hybrid()) {
        let max_amp = s.branches().iter().flat_map(|b| b.modes.iter().map(|a| a.norm())).fold(0.0, f64::max);
        let v = FockVector::from_hybrid(&s, cutoff_for(max_amp, 1e-12));
        prop_assert!(v.tail_bound() < 1e-10 * s.branches().iter().map(|b| b.coeff.norm()).sum::<f64>().powi(2).max(1.0));
        let gap = s.norm2() - v.norm2();
        prop_assert!(gap.abs() <= v.tail_bound() + 1e-12 * (1.0 + s.norm2()));
    }

    #[test]
    fn fidelity_symmetric_and_one_for_multiples(a in hybrid(), b in hybrid(), k in amp()) {
        prop_assume!(a.norm2() > 1e-6 && b.norm2() > 1e-6 && k.norm() > 1e-3);
        let f_ab = fidelity_pure(&a, &b).unwrap();
        let f_ba = fidelity_pure(&b, &a).unwrap();
        prop_assert!((f_ab - f_ba).abs() < 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f_ab));
        prop_assert!((fidelity_pure(&a, &a.scaled(k)).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_spectrum_is_psd(s in hybrid()) {
        prop_assume!(s.norm2() > 1e-6);
        let rho = s.normalize().unwrap().to_density();
        let ev = rho.eigenvalues();
        prop_assert!(ev[0] >= -1e-10);
        prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
    }
}
