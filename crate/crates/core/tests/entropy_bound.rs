mod common;

use common::{bias, caratheodory_min, oracle_atoms};
use proptest::prelude::*;
use sdiqrng::certify::{
    build_witness, conditional_entropy, entropy_bound, evaluate_witness, strategy_atoms,
    EnergyBound, GridSpec,
};
use sdiqrng::physics::{apply_white_noise, ideal_homodyne_behavior, Behavior, MeanPhotonNumber, NoiseModel};

fn small_grid() -> GridSpec {
    GridSpec::new(20, 1e-6).unwrap()
}

fn bound(f: &Behavior, omega: f64, grid: &GridSpec) -> f64 {
    entropy_bound(f, EnergyBound::new(omega).unwrap(), grid).unwrap().value
}

fn operating_point() -> Behavior {
    apply_white_noise(
        &ideal_homodyne_behavior(MeanPhotonNumber::new(0.005).unwrap()),
        NoiseModel::new(0.39).unwrap(),
    )
}

/// Feasible behaviour at `omega` from unit-interval coordinates.
fn feasible(omega: f64, a: f64, t: f64) -> Behavior {
    let d = bias(omega) * t;
    let u = a * (1.0 - d);
    let (u, v) = if a < 0.5 { (u, u + d) } else { (u + d, u) };
    Behavior::from_ones(u, v).unwrap()
}

#[test]
fn atoms_match_closed_form_boundary() {
    let grid = small_grid();
    for omega in [1e-3, 0.005, 0.2, 0.7] {
        let lib = strategy_atoms(EnergyBound::new(omega).unwrap(), &grid).unwrap();
        let mut oracle = oracle_atoms(omega, &grid);
        for a in &lib {
            let hit = oracle.iter().position(|o| {
                (o[0] - a.q.p1_given0()).abs() < 1e-15
                    && (o[1] - a.q.p1_given1()).abs() < 1e-15
                    && (o[3] - a.entropy).abs() < 1e-15
            });
            assert!(hit.is_some(), "unexpected atom {a:?}");
        }
        // Every oracle vertex is present (possibly at a cheaper energy).
        oracle.retain(|o| {
            !lib.iter().any(|a| a.q.p1_given0() == o[0] && a.q.p1_given1() == o[1] && a.e <= o[2])
        });
        assert!(oracle.is_empty(), "missing atoms {oracle:?}");
    }
}

#[test]
fn operating_point_matches_brute_force() {
    let grid = small_grid();
    let f = operating_point();
    let lp = bound(&f, 0.005, &grid);
    let brute = caratheodory_min(&f, 0.005, &oracle_atoms(0.005, &grid));
    assert!(lp > 0.0);
    assert!((lp - brute).abs() < 1e-6, "lp {lp} brute {brute}");
}

#[test]
fn operating_point_value_at_default_grid() {
    let b = entropy_bound(&operating_point(), EnergyBound::new(0.005).unwrap(), &GridSpec::default()).unwrap();
    assert!((b.value - 0.103_67).abs() < 1e-4, "{}", b.value);
    assert!(b.tolerance >= 0.0 && b.tolerance < 1e-4, "{}", b.tolerance);
}

#[test]
fn halving_spacing_moves_bound_within_tolerance() {
    let f = operating_point();
    let omega = EnergyBound::new(0.005).unwrap();
    for k in [21, 41, 101, 201] {
        let coarse = entropy_bound(&f, omega, &GridSpec::new(k, 1e-7).unwrap()).unwrap();
        let fine = entropy_bound(&f, omega, &GridSpec::new(2 * k - 1, 1e-7).unwrap()).unwrap();
        assert!(fine.value <= coarse.value + 1e-9);
        assert!(
            coarse.value - fine.value <= coarse.tolerance + 1e-9,
            "k={k}: {} -> {} tol {}",
            coarse.value,
            fine.value,
            coarse.tolerance
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convex_in_frequencies(lw in -4.0f64..-0.5, a1 in 0.0f64..1.0, t1 in 0.0f64..1.0,
                             a2 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let omega = 10f64.powf(lw);
        let g = GridSpec::default();
        let (f1, f2) = (feasible(omega, a1, t1), feasible(omega, a2, t2));
        let mid = f1.mix(&f2, 0.5).unwrap();
        let lhs = bound(&mid, omega, &g);
        let rhs = 0.5 * (bound(&f1, omega, &g) + bound(&f2, omega, &g));
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }

    #[test]
    fn nonincreasing_in_energy(lw in -4.0f64..-0.5, step in 0.0f64..2.0, a in 0.0f64..1.0, t in 0.0f64..1.0) {
        let omega = 10f64.powf(lw);
        let g = GridSpec::default();
        let f = feasible(omega, a, t);
        prop_assert!(bound(&f, omega * 10f64.powf(step), &g) <= bound(&f, omega, &g) + 1e-9);
    }

    #[test]
    fn below_single_strategy_entropy(lw in -4.0f64..0.0, a in 0.0f64..1.0, t in 0.0f64..1.0) {
        let omega = 10f64.powf(lw);
        let f = feasible(omega, a, t);
        let h = bound(&f, omega, &GridSpec::default());
        prop_assert!(h >= -1e-12 && h <= conditional_entropy(&f) + 1e-12);
    }

    #[test]
    fn witness_sound_everywhere(a in 0.0f64..1.0, t in 0.0f64..1.0) {
        let g = GridSpec::default();
        let omega = EnergyBound::new(0.005).unwrap();
        let w = build_witness(&operating_point(), omega, &g).unwrap();
        let q = feasible(0.005, a, t);
        prop_assert!(evaluate_witness(&w, &q) <= bound(&q, 0.005, &g) + 1e-9);
    }

    #[test]
    fn lp_matches_brute_force(lw in -3.0f64..-0.3, a in 0.0f64..1.0, t in 0.0f64..1.0) {
        let omega = 10f64.powf(lw);
        let grid = GridSpec::new(8, 1e-5).unwrap();
        let f = feasible(omega, a, t);
        let lp = bound(&f, omega, &grid);
        let brute = caratheodory_min(&f, omega, &oracle_atoms(omega, &grid));
        prop_assert!((lp - brute).abs() < 1e-6, "lp {} brute {}", lp, brute);
    }
}
