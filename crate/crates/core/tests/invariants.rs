//! Cross-module invariants on random instances.

use ccnet_core::dynamics::{evolve, spread_run, StateVector};
use ccnet_core::lattice::{
    block_anchor, block_of, relation_sim, BoxSpec, Chirality, IndexMap, Site,
};
use ccnet_core::mc::Sequential;
use ccnet_core::operator::{build_decoupled, build_network, sample_disorder, PhaseAngle};
use ccnet_core::resolvent::correlator;
use ccnet_core::spectral::{
    diagonalize, exact_miss_probability, gap_probability_mc, matched_distance, phi0_spectrum,
    DENSE_LIMIT,
};
use ccnet_core::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn s(m: i64, n: i64) -> Site {
    Site::new(m, n)
}

#[test]
fn disorder_phases_pass_kolmogorov_smirnov() {
    let t = BoxSpec::torus(80, 80).unwrap();
    let w = sample_disorder(2024, &t);
    let mut u: Vec<f64> = w
        .phases()
        .iter()
        .map(|p| p.arg().rem_euclid(TAU) / TAU)
        .collect();
    assert!(u.len() >= 100_000);
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i as f64 + 1.0) / n - x))
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample statistic
    assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    assert!(w.phases().iter().all(|p| (p.norm() - 1.0).abs() < 1e-15));
}

#[test]
fn anchors_are_idempotent() {
    for m in -50..50 {
        for n in -50..50 {
            let a = block_anchor(s(m, n));
            assert_eq!(block_anchor(a), a);
            assert!(a.m % 2 == 0 && a.n % 2 == 0);
        }
    }
}

#[test]
fn gap_law_scales_with_block_count() {
    let eta = 0.05;
    let z = C64::from_polar(1.0, 0.7);
    for (l, seed) in [(1, 1), (2, 2), (4, 3)] {
        let g = BoxSpec::boxed(l, l).unwrap();
        let est = gap_probability_mc(z, eta, &g, 4000, seed, &Sequential).unwrap();
        assert_eq!(est.blocks, 4 * (l * l) as usize);
        let exact = exact_miss_probability(z, eta, est.blocks).unwrap();
        assert!(
            (est.miss - exact).abs() <= 3.0 * est.stderr,
            "N = {}: {} vs {exact}",
            est.blocks,
            est.miss
        );
    }
}

fn dense(m: &ccnet_core::sparse::SparseMatrix) -> DMatrix<C64> {
    m.to_dense()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sim_is_an_equivalence_with_classes_of_four(m in -40i64..40, n in -40i64..40, dm in -3i64..4, dn in -3i64..4) {
        let a = s(m, n);
        let b = a.offset(dm, dn);
        prop_assert!(relation_sim(a, a));
        prop_assert_eq!(relation_sim(a, b), relation_sim(b, a));
        let class: Vec<Site> = block_of(a, Chirality::Counterclockwise).sites().to_vec();
        prop_assert_eq!(class.len(), 4);
        prop_assert!(class.iter().all(|&c| relation_sim(a, c)));
        for &c in &class {
            if relation_sim(a, b) {
                prop_assert!(relation_sim(b, c));
            }
        }
        prop_assert_eq!(relation_sim(a, b), class.contains(&b));
    }

    #[test]
    fn decoupling_identity_on_random_geometries(
        l1 in 1u32..=3, l2 in 1u32..=3, extra in 1u32..=2, seed in any::<u64>(), phi in -1.5f64..1.5, torus in any::<bool>(),
    ) {
        let inner = BoxSpec::boxed(l1, l2).unwrap();
        let (a1, a2) = (l1 + extra, l2 + extra);
        let ambient = if torus { BoxSpec::torus(a1, a2) } else { BoxSpec::boxed(a1, a2) }.unwrap();
        prop_assume!(ambient.site_count() <= 1024);
        let w = sample_disorder(seed, &ambient);
        let phi = PhaseAngle::new(phi);
        let full = build_network(&w, phi, &ambient).unwrap();
        let (dec, v) = build_decoupled(&w, phi, &inner, &ambient).unwrap();
        prop_assert!(dec.matrix().add(&v.matrix).sub(full.matrix()).max_abs() <= 1e-14);
        prop_assert!(v.max_abs() <= 4.0 * phi.radians().abs() + 1e-15);
        prop_assert!(dec.unitarity_deviation() <= 1e-10);
    }

    #[test]
    fn torus_covariance_under_even_shifts(seed in any::<u64>(), phi in 0.0f64..1.6, jm in -3i64..4, jn in -3i64..4) {
        let t = BoxSpec::torus(2, 3).unwrap();
        let w = sample_disorder(seed, &t);
        let phi = PhaseAngle::new(phi);
        let u = build_network(&w, phi, &t).unwrap();
        let shifted = build_network(&w.translated(s(jm, jn)).unwrap(), phi, &t).unwrap();
        for &a in u.map().sites() {
            for &b in u.map().sites() {
                let moved = |x: Site| x.offset(2 * jm, 2 * jn);
                prop_assert_eq!(shifted.element(a, b), u.element(moved(a), moved(b)));
            }
        }
    }

    #[test]
    fn phi_zero_oracle_matches_dense(seed in any::<u64>(), l1 in 1u32..=2, l2 in 1u32..=2, torus in any::<bool>()) {
        let g = if torus { BoxSpec::torus(l1, l2) } else { BoxSpec::boxed(l1, l2) }.unwrap();
        let w = sample_disorder(seed, &g);
        let sp = diagonalize(&build_network(&w, PhaseAngle::new(0.0), &g).unwrap(), DENSE_LIMIT).unwrap();
        let exact = phi0_spectrum(&w, &g).unwrap();
        prop_assert!(matched_distance(&sp.eigenvalues, &exact.eigenvalues).unwrap() <= 1e-8);
        prop_assert!(sp.eigenvalues.iter().all(|l| (l.norm() - 1.0).abs() <= 1e-8));
    }

    #[test]
    fn gap_events_are_monotone_in_eta(seed in any::<u64>(), theta in 0.0f64..TAU, e1 in 0.0f64..0.5, de in 0.0f64..0.5) {
        let g = BoxSpec::boxed(2, 2).unwrap();
        let sp = phi0_spectrum(&sample_disorder(seed, &g), &g).unwrap();
        let z = C64::from_polar(1.0, theta);
        if sp.gap_event(z, e1).hit {
            prop_assert!(sp.gap_event(z, e1 + de).hit);
        }
    }

    #[test]
    fn resolvent_identity(seed in any::<u64>(), phi in 0.01f64..1.0, rho in 1.05f64..1.5, theta in 0.0f64..TAU) {
        let g = BoxSpec::boxed(2, 2).unwrap();
        let w = sample_disorder(seed, &g);
        let u0 = dense(build_network(&w, PhaseAngle::new(0.0), &g).unwrap().matrix());
        let u1 = dense(build_network(&w, PhaseAngle::new(phi), &g).unwrap().matrix());
        let z = C64::from_polar(rho, theta);
        let shift = DMatrix::<C64>::identity(64, 64) * z;
        let r0 = (&u0 - &shift).try_inverse().unwrap();
        let r1 = (&u1 - &shift).try_inverse().unwrap();
        let lhs = &r1 - &r0 + &r1 * (&u1 - &u0) * &r0;
        prop_assert!(lhs.iter().all(|x| x.norm() <= 1e-9));
    }

    #[test]
    fn powers_are_dominated_by_the_correlator(seed in any::<u64>(), phi in 0.0f64..(PI / 2.0)) {
        let g = BoxSpec::torus(2, 2).unwrap();
        let u = build_network(&sample_disorder(seed, &g), PhaseAngle::new(phi), &g).unwrap();
        let q = correlator(&diagonalize(&u, DENSE_LIMIT).unwrap()).unwrap();
        let um = dense(u.matrix());
        let mut p = DMatrix::<C64>::identity(64, 64);
        for _ in 0..=100 {
            for (x, bound) in p.iter().zip(q.iter()) {
                prop_assert!(x.norm() <= bound + 1e-9);
            }
            p = &um * p;
        }
    }

    #[test]
    fn evolution_conserves_norm_and_inverts(seed in any::<u64>(), phi in 0.0f64..1.6, steps in 1i64..400) {
        let t = BoxSpec::torus(3, 3).unwrap();
        let u = build_network(&sample_disorder(seed, &t), PhaseAngle::new(phi), &t).unwrap();
        let map = IndexMap::new(t);
        let psi = StateVector::from_entries(&map, &[(s(0, 0), C64::new(0.6, 0.0)), (s(1, 2), C64::new(0.0, 0.8))]).unwrap();
        let sr = spread_run(&u, &psi, 1.0, steps as usize).unwrap();
        prop_assert!(sr.norm_drift <= 1e-10);
        let back = evolve(&u, &evolve(&u, &psi, steps).unwrap(), -steps).unwrap();
        let err = back.amplitudes().iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9);
    }
}
