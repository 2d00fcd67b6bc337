use gcdrift::diagnostics::{guiding_center_of, gyromotion, instantaneous_moment};
use gcdrift::field_models::{eval_field, sample_unit_ball};
use gcdrift::guiding_center::{drift_decomposition, gc_init, integrate_gc};
use gcdrift::orbit::boris_step;
use gcdrift::{BuiltinModel, FieldModel, GcOrder, InitMode, ParticleState, Vec3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(k: usize) -> BuiltinModel {
    BuiltinModel::all().swap_remove(k)
}

/// A seeded in-domain point and a velocity with a nonzero perpendicular part.
fn state(m: &BuiltinModel, seed: u64) -> (Vec3, Vec3) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x = m.domain().sample_interior(&mut rng, 1e-3);
        let v = sample_unit_ball(&mut rng);
        let b = eval_field(m, x).unwrap().unit;
        if b.cross(v).norm() > 1e-2 {
            return (x, v);
        }
    }
}

proptest! {
    #[test]
    fn field_geometry(k in 0usize..6, seed in any::<u64>()) {
        let m = model(k);
        let (x, _) = state(&m, seed);
        let s = eval_field(&m, x).unwrap();
        prop_assert!((s.unit.norm() - 1.0).abs() < 1e-12);
        prop_assert!(s.unit.dot(s.curvature).abs() < 1e-10);
        prop_assert!((s.curvature - s.curl_unit.cross(s.unit)).norm() < 1e-10);
    }

    #[test]
    fn centre_plus_gyromotion_is_position(k in 0usize..6, seed in any::<u64>(), omega in 10.0f64..1e5) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let st = ParticleState::new(0.0, x, v);
        let r = guiding_center_of(&st, omega, &m).unwrap();
        let rho = gyromotion(&st, omega, &m).unwrap();
        prop_assert!(((r + rho) - x).norm() <= 4.0 * f64::EPSILON * x.norm().max(1.0));
    }

    #[test]
    fn gyroradius_matches_moment(k in 0usize..6, seed in any::<u64>(), omega in 10.0f64..1e5) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let st = ParticleState::new(0.0, x, v);
        let rho = gyromotion(&st, omega, &m).unwrap().norm();
        let mu = instantaneous_moment(&st, v.norm(), &m).unwrap();
        let mag = eval_field(&m, x).unwrap().magnitude;
        let expected = (2.0 * mu / mag).sqrt() / omega;
        prop_assert!((rho - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn init_modes_differ_by_gyroradius(k in 0usize..6, seed in any::<u64>(), omega in 10.0f64..1e5) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let (e, _) = gc_init(&m, x, v, omega, InitMode::Exact, GcOrder::First).unwrap();
        let (n, _) = gc_init(&m, x, v, omega, InitMode::Naive, GcOrder::First).unwrap();
        let s = eval_field(&m, x).unwrap();
        let expected = s.unit.cross(v).norm() / (omega * s.magnitude);
        // x − ρ rounds at the scale of |x|, not |ρ|
        let tol = 1e-12 * expected + 4.0 * f64::EPSILON * x.norm();
        prop_assert!(((e.r - n.r).norm() - expected).abs() <= tol);
    }

    #[test]
    fn drift_groupings_agree(k in 4usize..6, seed in any::<u64>(), h in -1.0f64..1.0, mu0 in 0.0f64..1.0) {
        let m = model(k);
        let (x, _) = state(&m, seed);
        let s = eval_field(&m, x).unwrap();
        let d = drift_decomposition(&s, h, mu0, 1.0, true).unwrap();
        let (a, b) = d.pressure_form.unwrap();
        prop_assert!((d.total() - (a + b)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boris_preserves_speed(k in 0usize..6, seed in any::<u64>()) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let omega = 1e3;
        let dt = std::f64::consts::TAU / (omega * 64.0);
        let mut st = ParticleState::new(0.0, x, v);
        for _ in 0..2000 {
            match boris_step(&m, &st, dt, omega) {
                Ok(n) => st = n,
                Err(_) => break,
            }
        }
        prop_assert!((st.v.norm() - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn boris_is_reversible(k in 0usize..6, seed in any::<u64>()) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let omega = 1e3;
        let dt = std::f64::consts::TAU / (omega * 64.0);
        let mut st = ParticleState::new(0.0, x, v);
        let mut n = 0;
        for _ in 0..640 {
            match boris_step(&m, &st, dt, omega) {
                Ok(s) => { st = s; n += 1; }
                Err(_) => break,
            }
        }
        for _ in 0..n {
            st = boris_step(&m, &st, -dt, omega).unwrap();
        }
        prop_assert!((st.x - x).norm() < 1e-9);
    }

    #[test]
    fn zeroth_order_energy_is_conserved(k in 1usize..6, seed in any::<u64>()) {
        let m = model(k);
        let (x, v) = state(&m, seed);
        let (init, params) = gc_init(&m, x, v, 1e3, InitMode::Naive, GcOrder::Zeroth).unwrap();
        let Ok(traj) = integrate_gc(&m, &init, &params, 0.5, 1e-4, 1e-2) else {
            return Ok(());
        };
        let e = traj.energy(&m).unwrap();
        let spread = e.iter().fold(0.0_f64, |a, x| a.max((x - e[0]).abs()));
        prop_assert!(spread < 1e-8, "{}: {spread}", m.name());
    }
}
