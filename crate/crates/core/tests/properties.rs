mod common;

use common::*;
use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

use ris_sumrate::channel::RisConfiguration;
use ris_sumrate::em::{dipole_mutual_impedance, DipoleGeometry};
use ris_sumrate::linalg::{CMat, CVec};
use ris_sumrate::optimizer::{gamma_stack, q_mapping};
use ris_sumrate::scenario::{dbm_to_watts, watts_to_dbm, Scenario};

fn complex() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn cmat(r: usize, c: usize) -> impl Strategy<Value = CMat> {
    proptest::collection::vec(complex(), r * c).prop_map(move |v| CMat::from_vec(r, c, v))
}

fn point() -> impl Strategy<Value = Vector3<f64>> {
    (-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn axis() -> impl Strategy<Value = Vector3<f64>> {
    (0.0..std::f64::consts::PI, 0.0..2.0 * std::f64::consts::PI)
        .prop_map(|(th, ph)| Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()).normalize())
}

const LAMBDA: f64 = 0.0107;

fn dipole_pair() -> impl Strategy<Value = (DipoleGeometry, DipoleGeometry)> {
    (point(), axis(), axis()).prop_filter_map("wires too close", |(offset, a1, a2)| {
        let len = LAMBDA / 2.0;
        let d1 = DipoleGeometry::new(Vector3::zeros(), len, LAMBDA / 500.0, a1).ok()?;
        let d2 = DipoleGeometry::new(offset * 4.0 + Vector3::new(0.03, 0.0, 0.0), len, LAMBDA / 500.0, a2).ok()?;
        dipole_mutual_impedance(&d1, &d2, LAMBDA).ok().map(|_| (d1, d2))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn mapping_identity((l, p, cols) in (1usize..4, 1usize..6, 1usize..4), seed in any::<u64>()) {
        let mut g = rng(seed);
        let q1 = random_cmat(&mut g, l, p);
        let q2 = random_cmat(&mut g, p, cols);
        let d = random_cvec(&mut g, p);
        let lhs = &q1 * CMat::from_diagonal(&d) * &q2;
        let rhs = q_mapping(&q1, &q2).unwrap() * gamma_stack(&d, cols);
        prop_assert!((&lhs - &rhs).norm() <= 1e-13 * lhs.norm().max(1.0));
    }

    #[test]
    fn mapping_of_zero_increment_is_zero(q1 in cmat(2, 3), q2 in cmat(3, 2)) {
        let r = q_mapping(&q1, &q2).unwrap() * gamma_stack(&CVec::zeros(3), 2);
        prop_assert!(r.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn mutual_impedance_is_translation_invariant((d1, d2) in dipole_pair(), shift in point()) {
        let z = dipole_mutual_impedance(&d1, &d2, LAMBDA).unwrap();
        let mut e1 = d1;
        let mut e2 = d2;
        e1.center += shift * 20.0;
        e2.center += shift * 20.0;
        let zt = dipole_mutual_impedance(&e1, &e2, LAMBDA).unwrap();
        prop_assert!((z - zt).norm() <= 1e-10 * z.norm().max(1e-12), "{z} vs {zt}");
    }

    #[test]
    fn mutual_impedance_is_reciprocal((d1, d2) in dipole_pair()) {
        prop_assert_eq!(
            dipole_mutual_impedance(&d1, &d2, LAMBDA).unwrap(),
            dipole_mutual_impedance(&d2, &d1, LAMBDA).unwrap()
        );
    }

    #[test]
    fn increments_keep_resistance(r0 in 0.0..5.0f64, steps in proptest::collection::vec(proptest::collection::vec(-1e3..1e3f64, 4), 1..20)) {
        let mut ris = RisConfiguration::zeros(r0, 1, 4).unwrap();
        for s in steps {
            ris.apply_increment(0, &DVector::from_vec(s)).unwrap();
            prop_assert!(ris.tunable(0).iter().all(|b| (b.re - r0).abs() <= 1e-12));
        }
    }

    #[test]
    fn dbm_round_trip(dbm in -200.0..100.0f64) {
        prop_assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() <= 1e-12);
    }

    #[test]
    fn scenario_hash_ignores_key_order(seed in 0u64..1000, iters in 0usize..2000) {
        let text = include_str!("../../../scenarios/reference.json");
        let mut value: serde_json::Value = serde_json::from_str(text).unwrap();
        value["seed"] = seed.into();
        value["iterations"] = iters.into();
        let obj = value.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.reverse();
        let reordered = format!(
            "{{{}}}",
            keys.iter().map(|k| format!("{:?}: {}", k, obj[k])).collect::<Vec<_>>().join(", ")
        );
        let a = Scenario::from_json(&value.to_string()).unwrap();
        let b = Scenario::from_json(&reordered).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
    }
}
