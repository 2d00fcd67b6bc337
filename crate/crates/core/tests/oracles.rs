use gcdrift::convergence::{self, mirror_bounce_period, omega_sweep, sup_distance, Metric, SweepOptions, DEFAULT_OMEGAS};
use gcdrift::diagnostics::instantaneous_moment;
use gcdrift::field_models::eval_field;
use gcdrift::guiding_center::{gc_init, integrate_gc};
use gcdrift::orbit::{integrate_orbit, speed_drift, OrbitConfig, Scheme};
use gcdrift::series::uniform_grid;
use gcdrift::{BuiltinModel, FieldModel, GcOrder, InitMode, Vec3};
use std::f64::consts::TAU;

fn model(name: &str) -> BuiltinModel {
    BuiltinModel::named(name).unwrap()
}

fn orbit(m: &BuiltinModel, omega: f64, t_end: f64, scheme: Scheme, spg: usize, dt_out: f64) -> gcdrift::Trajectory {
    let p = convergence::preset(m).unwrap();
    let cfg = OrbitConfig {
        x0: p.x0,
        v0: p.v0,
        omega,
        t_end,
        steps_per_gyro: spg,
        scheme,
        dt_out,
    };
    integrate_orbit(m, &cfg).unwrap()
}

#[test]
fn boris_and_rk4_agree_in_every_model() {
    let omega = 1e3;
    for m in BuiltinModel::all() {
        let p = convergence::preset(&m).unwrap();
        let gyro = TAU / (omega * eval_field(&m, p.x0).unwrap().magnitude);
        let t_end = 10.0 * gyro;
        let a = orbit(&m, omega, t_end, Scheme::Boris, 64, gyro / 16.0);
        let b = orbit(&m, omega, t_end, Scheme::Rk4, 400, gyro / 16.0);
        let grid = uniform_grid(0.0, a.last().t.min(b.last().t), gyro / 16.0);
        let d = sup_distance(&a, &b, &grid).unwrap();
        assert!(d < 1e-4, "{}: {d}", m.name());
    }
}

#[test]
fn rk4_speed_drift_regression() {
    let m = model("uniform");
    let omega = 100.0;
    let t = orbit(&m, omega, 10.0 * TAU / omega, Scheme::Rk4, 200, TAU / omega / 8.0);
    let d = speed_drift(&t);
    // amplitude loss of classical RK4 on a rotation, ≈ θ⁶/144 per step
    assert!(d < 2e-8, "{d}");
}

#[test]
fn first_order_correction_is_order_one_over_omega() {
    for name in ["slab_gradB", "toroidal"] {
        let m = model(name);
        let p = convergence::preset(&m).unwrap();
        let dist = |omega: f64| {
            let run = |order| {
                let (i, q) = gc_init(&m, p.x0, p.v0, omega, InitMode::Exact, order).unwrap();
                integrate_gc(&m, &i, &q, 2.0, 2e-4, 1e-3).unwrap()
            };
            let (a, b) = (run(GcOrder::Zeroth), run(GcOrder::First));
            sup_distance(&a, &b, &uniform_grid(0.0, 2.0, 1e-3)).unwrap()
        };
        let ratio = dist(2e3) / dist(1e3);
        assert!((0.4..=0.6).contains(&ratio), "{name}: {ratio}");
    }
}

#[test]
fn first_order_energy_where_drift_is_transverse() {
    for name in ["slab_gradB", "toroidal", "screw_pinch"] {
        let m = model(name);
        let p = convergence::preset(&m).unwrap();
        let (i, q) = gc_init(&m, p.x0, p.v0, 1e2, InitMode::Exact, GcOrder::First).unwrap();
        let traj = integrate_gc(&m, &i, &q, p.t_end, 1e-3, 1e-2).unwrap();
        let e = traj.energy(&m).unwrap();
        let spread = e.iter().fold(0.0_f64, |a, x| a.max((x - e[0]).abs()));
        assert!(spread < 1e-8, "{name}: {spread}");
    }
}

#[test]
fn boris_mirror_moment_over_a_bounce() {
    let m = model("mirror");
    let p = convergence::preset(&m).unwrap();
    let omega = 1e3;
    let period = mirror_bounce_period(&m, p.x0, p.v0).unwrap();
    let gyro = TAU / (omega * eval_field(&m, p.x0).unwrap().magnitude);
    let t = orbit(&m, omega, period, Scheme::Boris, 64, gyro / 8.0);
    let (_, q) = gc_init(&m, p.x0, p.v0, omega, InitMode::Exact, GcOrder::First).unwrap();
    let worst = t
        .samples
        .iter()
        .map(|s| (instantaneous_moment(s, q.v0_mag, &m).unwrap() - q.mu0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05 * q.mu0, "{worst}");
}

#[test]
fn metrics_decrease_over_default_sweep() {
    let metrics = [Metric::ZerothOrder, Metric::MomentDrift, Metric::AvgGyro, Metric::PressureRemainder];
    for m in BuiltinModel::all().into_iter().filter(|m| m.name() != "uniform") {
        let p = convergence::preset(&m).unwrap();
        let opts = SweepOptions {
            steps_per_gyro: if m.name() == "mirror" { 800 } else { 200 },
            ..SweepOptions::default()
        };
        for metric in metrics {
            if metric == Metric::PressureRemainder && !m.has_pressure() {
                continue;
            }
            let r = omega_sweep(&m, p.x0, p.v0, &DEFAULT_OMEGAS, p.t_end, metric, &opts).unwrap();
            assert!(r.monotone, "{} {}: {:?}", m.name(), metric.name(), r.errors);
        }
    }
}

#[test]
fn first_order_decreases_on_current_free_fields() {
    for name in ["slab_gradB", "toroidal", "mirror"] {
        let m = model(name);
        let p = convergence::preset(&m).unwrap();
        let opts = SweepOptions {
            steps_per_gyro: if name == "mirror" { 800 } else { 200 },
            ..SweepOptions::default()
        };
        let r = omega_sweep(&m, p.x0, p.v0, &DEFAULT_OMEGAS, p.t_end, Metric::FirstOrderGc, &opts).unwrap();
        assert!(r.monotone, "{name}: {:?}", r.omega_times_errors());
        assert!(r.fitted_order.unwrap() > 1.3);
    }
}

#[test]
fn uniform_helix_radius() {
    let m = model("uniform");
    let omega = 100.0;
    let v0 = Vec3::new(1.0, 0.0, 1.0);
    let cfg = OrbitConfig {
        x0: Vec3::ZERO,
        v0,
        omega,
        t_end: 1.0,
        steps_per_gyro: 200,
        scheme: Scheme::Rk4,
        dt_out: 1e-3,
    };
    let t = integrate_orbit(&m, &cfg).unwrap();
    for s in &t.samples {
        let centre = Vec3::new(s.x.x, s.x.y + 1.0 / omega, 0.0);
        assert!((centre.norm() - 1.0 / omega).abs() < 1e-9);
        assert!((s.x.z - s.t).abs() < 1e-12);
    }
}
