//! Exact Jaynes–Cummings evolution against the dispersive phase map.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use ecs_core::fock::validate_transits;
use ecs_core::{AtomWord, HybridState, Level, C64};

fn superposed_atom(n_modes: usize, alpha: C64) -> HybridState {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    HybridState::product(AtomWord::empty(), vec![alpha; n_modes])
        .unwrap()
        .with_atoms(&[(AtomWord::uniform(Level::E, 1), h), (AtomWord::uniform(Level::G, 1), h)])
        .unwrap()
}

#[test]
fn single_transit_sweep_is_monotone() {
    let s = superposed_atom(1, C64::new(1.0, 0.0));
    let mut last = 0.0;
    for ratio in [10.0, 20.0, 50.0, 100.0] {
        let check = validate_transits(&s, &[(0, 0)], FRAC_PI_2, ratio, 1e-10).unwrap();
        println!(
            "ratio {ratio}: raw {:.6} compensated {:.9} cutoff {} tail {:.2e}",
            check.fidelity.raw, check.fidelity.compensated, check.cutoff, check.tail_bound
        );
        assert!(check.tail_bound < 1e-10);
        assert!(check.fidelity.compensated > last);
        assert!(check.fidelity.compensated >= check.fidelity.raw - 1e-12);
        last = check.fidelity.compensated;
        if ratio == 50.0 {
            assert!(check.fidelity.compensated >= 0.99);
        }
    }
}

#[test]
fn three_transit_ghz_preparation() {
    let s = superposed_atom(3, C64::new(1.0, 0.0));
    let check = validate_transits(&s, &[(0, 0), (0, 1), (0, 2)], FRAC_PI_2, 50.0, 1e-10).unwrap();
    println!("ghz: {:?}", check.fidelity);
    assert!(check.tail_bound < 1e-10);
    assert!(check.fidelity.compensated >= 0.99);
}

#[test]
fn w_register_transits() {
    let third = C64::new(1.0 / 3f64.sqrt(), 0.0);
    let reg: Vec<(AtomWord, C64)> = ["egg", "geg", "gge"]
        .iter()
        .map(|w| (w.parse().unwrap(), third))
        .collect();
    let s = HybridState::product(AtomWord::empty(), vec![C64::new(1.0, 0.0); 3])
        .unwrap()
        .with_atoms(&reg)
        .unwrap();
    let check = validate_transits(&s, &[(0, 0), (1, 1), (2, 2)], FRAC_PI_2, 50.0, 1e-10).unwrap();
    println!("w: {:?}", check.fidelity);
    assert!(check.fidelity.compensated >= 0.99);
}
