use crate::config::{settle, vec3_value, Cfg, Sub, Table};
use crate::output::{json_string, write_atomic, Cell, Csv, Manifest};
use crate::CliError;
use gcdrift::convergence::{self, mirror_bounce_period, omega_sweep, Metric, SweepOptions};
use gcdrift::diagnostics::{gyrophase, guiding_center_of, instantaneous_moment, pressure_deviation};
use gcdrift::field_models::{check_divergence, check_equilibrium, check_jacobian, eval_field};
use gcdrift::guiding_center::{first_sign_change, gc_init, integrate_gc, GcOrder, InitMode};
use gcdrift::identities::{identity_sweep, Identity};
use gcdrift::orbit::{integrate_orbit, OrbitConfig, Scheme};
use gcdrift::{BuiltinModel, FieldModel, PositionTrack, Vec3};
use serde_json::json;
use std::f64::consts::TAU;
use std::path::Path;

/// Files produced by a subcommand, written only after all work succeeded.
struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn commit(self, sub: Sub, table: Table, dir: &Path) -> Result<(), CliError> {
        let seed = Cfg(&table).u64("seed")?;
        for (name, contents) in &self.files {
            write_atomic(dir, name, contents)?;
            println!("wrote {}", dir.join(name).display());
        }
        let manifest = Manifest {
            tool: "gcdrift".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: sub.name().into(),
            seed,
            config: table,
            outputs: self.files.iter().map(|(n, _)| n.clone()).collect(),
        };
        write_atomic(dir, "manifest.json", &json_string(&manifest))?;
        println!("wrote {}", dir.join("manifest.json").display());
        Ok(())
    }
}

pub fn run(sub: Sub, mut table: Table, out: &Path) -> Result<(), CliError> {
    let model = Cfg(&table).model()?;
    let mut outputs = Outputs::new();
    let verdict = match sub {
        Sub::Simulate => simulate(&model, &mut table, &mut outputs),
        Sub::Gc => gc(&model, &mut table, &mut outputs),
        Sub::Compare => compare(&model, &mut table, &mut outputs),
        Sub::Sweep => sweep(&model, &mut table, &mut outputs),
        Sub::VerifyField => verify_field(&model, &mut table, &mut outputs),
        Sub::VerifyIdentities => verify_identities(&model, &mut table, &mut outputs),
        Sub::MirrorBounce => mirror_bounce(&model, &mut table, &mut outputs),
        Sub::PressureDrift => pressure_drift(&model, &mut table, &mut outputs),
    }?;
    outputs.commit(sub, table, out)?;
    match verdict {
        Some(msg) => Err(CliError::Assertion(msg)),
        None => Ok(()),
    }
}

/// `(x0, v0, T)` with `auto` entries taken from the model preset.
fn initial_data(model: &BuiltinModel, table: &mut Table) -> Result<(Vec3, Vec3, f64), CliError> {
    let preset = convergence::preset(model)?;
    let cfg = Cfg(table);
    let x0 = cfg.opt_vec3("x0")?.unwrap_or(preset.x0);
    let v0 = cfg.opt_vec3("v0")?.unwrap_or(preset.v0);
    let t_end = if table.contains_key("T") {
        Cfg(table).opt_f64("T")?.unwrap_or(preset.t_end)
    } else {
        preset.t_end
    };
    settle(table, "x0", vec3_value(x0));
    settle(table, "v0", vec3_value(v0));
    settle(table, "T", json!(t_end));
    Ok((x0, v0, t_end))
}

fn resolved_f64(table: &mut Table, key: &str, fallback: f64) -> Result<f64, CliError> {
    let v = Cfg(table).opt_f64(key)?.unwrap_or(fallback);
    settle(table, key, json!(v));
    Ok(v)
}

fn oracle_steps(model: &BuiltinModel, table: &mut Table) -> Result<usize, CliError> {
    // bounce dynamics amplify the RK4 energy error; the mirror needs a finer oracle
    let fallback = if model.name() == "mirror" { 800 } else { 200 };
    let v = Cfg(table).opt_usize("steps_per_gyro")?.unwrap_or(fallback);
    settle(table, "steps_per_gyro", json!(v));
    Ok(v)
}

fn orbit_config(table: &Table, x0: Vec3, v0: Vec3, t_end: f64, steps: usize, dt_out: f64) -> Result<OrbitConfig, CliError> {
    let cfg = Cfg(table);
    Ok(OrbitConfig {
        x0,
        v0,
        omega: cfg.f64("omega")?,
        t_end,
        steps_per_gyro: steps,
        scheme: cfg.parse::<Scheme>("scheme")?,
        dt_out,
    })
}

fn gc_order(table: &Table) -> Result<GcOrder, CliError> {
    let n = Cfg(table).u64("order")?;
    GcOrder::from_int(n as u32).map_err(|e| CliError::Config(e.to_string()))
}

fn simulate(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let (x0, v0, t_end) = initial_data(model, table)?;
    let omega = Cfg(table).f64("omega")?;
    let dt_out = resolved_f64(table, "dt_out", OrbitConfig::gyro_resolved_dt_out(model, x0, omega)?)?;
    let steps = Cfg(table).usize("steps_per_gyro")?;
    let traj = integrate_orbit(model, &orbit_config(table, x0, v0, t_end, steps, dt_out)?)?;
    let mut csv = Csv::new(&["t", "x", "y", "z", "vx", "vy", "vz"]);
    for s in &traj.samples {
        csv.row(vec![s.t.into(), s.x.x.into(), s.x.y.into(), s.x.z.into(), s.v.x.into(), s.v.y.into(), s.v.z.into()]);
    }
    out.add("trajectory.csv", csv.finish());
    Ok(None)
}

fn gc(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let (x0, v0, t_end) = initial_data(model, table)?;
    let omega = Cfg(table).f64("omega")?;
    let dt = resolved_f64(table, "dt", t_end / 1e4)?;
    let dt_out = resolved_f64(table, "dt_out", t_end / 2000.0)?;
    let mode: InitMode = Cfg(table).parse("init_mode")?;
    let (init, params) = gc_init(model, x0, v0, omega, mode, gc_order(table)?)?;
    let traj = integrate_gc(model, &init, &params, t_end, dt, dt_out)?;
    let mut csv = Csv::new(&["t", "Rx", "Ry", "Rz", "h", "mu0"]);
    for s in &traj.samples {
        csv.row(vec![s.t.into(), s.r.x.into(), s.r.y.into(), s.r.z.into(), s.h.into(), params.mu0.into()]);
    }
    out.add("gc.csv", csv.finish());
    Ok(None)
}

fn compare(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let (x0, v0, t_end) = initial_data(model, table)?;
    let omega = Cfg(table).f64("omega")?;
    let steps = oracle_steps(model, table)?;
    let dt_out = resolved_f64(table, "dt_out", OrbitConfig::gyro_resolved_dt_out(model, x0, omega)?)?;
    let dt = resolved_f64(table, "dt", t_end / 1e4)?;
    let mode: InitMode = Cfg(table).parse("init_mode")?;

    let orbit = integrate_orbit(model, &orbit_config(table, x0, v0, t_end, steps, dt_out)?)?;
    let (init, params) = gc_init(model, x0, v0, omega, mode, gc_order(table)?)?;
    let gc = integrate_gc(model, &init, &params, orbit.last().t.max(dt_out), dt, dt_out)?;
    let phases = gyrophase(&orbit, model)?;
    let pressure = if model.has_pressure() {
        let (z, zp) = gc_init(model, x0, v0, omega, InitMode::Naive, GcOrder::Zeroth)?;
        let zeroth = integrate_gc(model, &z, &zp, orbit.last().t.max(dt_out), dt, dt_out)?;
        Some(pressure_deviation(&orbit, model, &zeroth)?)
    } else {
        None
    };

    let mut csv = Csv::new(&["t", "err_pos", "mu_inst", "phase_rate", "pressure_lhs", "pressure_rhs"]);
    for (k, s) in orbit.samples.iter().enumerate() {
        let r = guiding_center_of(s, omega, model)?;
        let err = (r - gc.samples[k].r).norm();
        let mu = instantaneous_moment(s, params.v0_mag, model)?;
        let (lhs, rhs) = match &pressure {
            Some(p) => (Some(p[k].lhs), Some(p[k].rhs)),
            None => (None, None),
        };
        csv.row(vec![s.t.into(), err.into(), mu.into(), phases[k].rate.into(), lhs.into(), rhs.into()]);
    }
    out.add("compare.csv", csv.finish());
    Ok(None)
}

fn sweep(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let (x0, v0, t_end) = initial_data(model, table)?;
    let steps = oracle_steps(model, table)?;
    let cfg = Cfg(table);
    let metric: Metric = cfg.parse("metric")?;
    let omegas = cfg.list("omegas")?;
    let opts = SweepOptions {
        steps_per_gyro: steps,
        scheme: cfg.parse("scheme")?,
        init_mode: cfg.parse("init_mode")?,
        gc_steps: cfg.usize("gc_steps")?,
        grid_points: cfg.usize("grid_points")?,
    };
    let result = omega_sweep(model, x0, v0, &omegas, t_end, metric, &opts).map_err(|e| match e {
        gcdrift::Error::InvalidArgument(m) => CliError::Config(m),
        other => CliError::Core(other),
    })?;

    let mut csv = Csv::new(&["omega", "error", "omega_times_error"]);
    for (w, e) in result.omegas.iter().zip(&result.errors) {
        csv.row(vec![(*w).into(), (*e).into(), (w * e).into()]);
    }
    out.add("sweep.csv", csv.finish());
    let checked = if metric.scaled_by_omega() { "omega*error" } else { "error" };
    out.add(
        "summary.json",
        json_string(&json!({
            "model": model.name(),
            "metric": metric.name(),
            "fitted_order": result.fitted_order,
            "monotone": result.monotone,
            "monotone_quantity": checked,
            "ratios": result.ratios,
        })),
    );
    println!(
        "{} on {}: fitted order {}, {checked} strictly decreasing: {}",
        metric.name(),
        model.name(),
        result.fitted_order.map_or("n/a".to_string(), |o| format!("{o:.3}")),
        result.monotone
    );
    Ok((!result.monotone).then(|| format!("{checked} is not strictly decreasing over the sweep")))
}

fn check_row(csv: &mut Csv, name: &str, deriv: Option<&str>, st: &gcdrift::ResidualStats, tol: f64) -> bool {
    let pass = st.max < tol;
    let mut row: Vec<Cell> = vec![name.into()];
    if let Some(d) = deriv {
        row.push(d.into());
    }
    row.extend([st.max.into(), st.mean.into(), st.n.into(), st.seed.into(), tol.into(), pass.into()]);
    csv.row(row);
    pass
}

fn verify_field(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let cfg = Cfg(table);
    let n = cfg.usize("n_samples")?;
    let seed = cfg.u64("seed")?;
    let mut csv = Csv::new(&["check", "max", "mean", "n", "seed", "tolerance", "pass"]);
    let mut failed = Vec::new();
    let div = check_divergence(model, n, seed)?;
    if !check_row(&mut csv, "divergence", None, &div, cfg.f64("divergence_tol")?) {
        failed.push("divergence");
    }
    if model.has_pressure() {
        let eq = check_equilibrium(model, n, seed)?;
        if !check_row(&mut csv, "equilibrium", None, &eq, cfg.f64("equilibrium_tol")?) {
            failed.push("equilibrium");
        }
    }
    let jac = check_jacobian(model, n, seed, cfg.f64("fd_step")?)?;
    if !check_row(&mut csv, "jacobian", None, &jac, cfg.f64("jacobian_tol")?) {
        failed.push("jacobian");
    }
    out.add("field_checks.csv", csv.finish());
    Ok((!failed.is_empty()).then(|| format!("field checks failed: {}", failed.join(", "))))
}

fn verify_identities(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    let cfg = Cfg(table);
    let n = cfg.usize("n_samples")?;
    let seed = cfg.u64("seed")?;
    let mut csv = Csv::new(&["identity", "derivatives", "max", "mean", "n", "seed", "tolerance", "pass"]);
    let mut failed = Vec::new();
    for id in Identity::ALL {
        for (fd, label, tol) in [(false, "analytic", cfg.f64("analytic_tol")?), (true, "finite_difference", cfg.f64("fd_tol")?)] {
            let st = identity_sweep(model, id, n, seed, fd)?;
            if !check_row(&mut csv, id.name(), Some(label), &st, tol) {
                failed.push(format!("{} ({label})", id.name()));
            }
        }
    }
    out.add("identities.csv", csv.finish());
    Ok((!failed.is_empty()).then(|| format!("identity residuals above tolerance: {}", failed.join(", "))))
}

fn mirror_bounce(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    if model.name() != "mirror" {
        return Err(CliError::Config(format!("mirror-bounce needs model = \"mirror\", got `{}`", model.name())));
    }
    let preset = convergence::preset(model)?;
    let cfg = Cfg(table);
    let x0 = cfg.opt_vec3("x0")?.unwrap_or(preset.x0);
    let v0 = cfg.opt_vec3("v0")?.unwrap_or(preset.v0);
    settle(table, "x0", vec3_value(x0));
    settle(table, "v0", vec3_value(v0));
    let cfg = Cfg(table);
    let omega = cfg.f64("omega")?;
    let period = mirror_bounce_period(model, x0, v0)?;
    let t_end = cfg.f64("bounces")? * period;
    let gyro = TAU / (omega * eval_field(model, x0)?.magnitude);
    let dt_out = resolved_f64(table, "dt_out", gyro / 16.0)?;
    let steps = Cfg(table).usize("steps_per_gyro")?;

    let orbit = integrate_orbit(model, &orbit_config(table, x0, v0, t_end, steps, dt_out)?)?;
    let (init, params) = gc_init(model, x0, v0, omega, InitMode::Exact, GcOrder::First)?;
    let gc = integrate_gc(model, &init, &params, orbit.last().t.max(dt_out), t_end / 1e4, dt_out)?;

    let mut csv = Csv::new(&["t", "x", "y", "z", "h_orbit", "mu_inst", "gc_x", "gc_y", "gc_z", "gc_h"]);
    let mut h_orbit = Vec::with_capacity(orbit.samples.len());
    let mut max_dev = 0.0_f64;
    for (k, s) in orbit.samples.iter().enumerate() {
        let h = eval_field(model, s.x)?.unit.dot(s.v);
        let mu = instantaneous_moment(s, params.v0_mag, model)?;
        max_dev = max_dev.max((mu - params.mu0).abs());
        h_orbit.push((s.t, h));
        let g = &gc.samples[k];
        csv.row(vec![
            s.t.into(),
            s.x.x.into(),
            s.x.y.into(),
            s.x.z.into(),
            h.into(),
            mu.into(),
            g.r.x.into(),
            g.r.y.into(),
            g.r.z.into(),
            g.h.into(),
        ]);
    }
    out.add("bounce.csv", csv.finish());

    let orbit_cross = first_sign_change(h_orbit.into_iter());
    let gc_cross = gc.first_h_crossing();
    let gap = match (orbit_cross, gc_cross) {
        (Some(a), Some(b)) => {
            let r = gc.position_at(b)?;
            let local = TAU / (omega * eval_field(model, r)?.magnitude);
            Some((a - b).abs() / local)
        }
        _ => None,
    };
    out.add(
        "summary.json",
        json_string(&json!({
            "omega": omega,
            "mu0": params.mu0,
            "bounce_period": period,
            "max_rel_moment_deviation": max_dev / params.mu0,
            "orbit_crossing": orbit_cross,
            "gc_crossing": gc_cross,
            "crossing_gap_gyroperiods": gap,
        })),
    );
    Ok(None)
}

fn pressure_drift(model: &BuiltinModel, table: &mut Table, out: &mut Outputs) -> Result<Option<String>, CliError> {
    if !model.has_pressure() {
        return Err(CliError::Config(format!("pressure-drift needs a model with pressure, got `{}`", model.name())));
    }
    let (x0, v0, t_end) = initial_data(model, table)?;
    let omega = Cfg(table).f64("omega")?;
    let dt_out = resolved_f64(table, "dt_out", t_end / 2000.0)?;
    let dt = resolved_f64(table, "dt", t_end / 1e4)?;
    let steps = Cfg(table).usize("steps_per_gyro")?;
    let orbit = integrate_orbit(model, &orbit_config(table, x0, v0, t_end, steps, dt_out)?)?;
    let (z, zp) = gc_init(model, x0, v0, omega, InitMode::Naive, GcOrder::Zeroth)?;
    let zeroth = integrate_gc(model, &z, &zp, orbit.last().t.max(dt_out), dt, dt_out)?;
    let samples = pressure_deviation(&orbit, model, &zeroth)?;

    let mut csv = Csv::new(&["t", "lhs", "rhs", "secular", "remainder"]);
    let (mut max_lhs, mut max_rem) = (0.0_f64, 0.0_f64);
    for s in &samples {
        max_lhs = max_lhs.max(s.lhs.abs());
        max_rem = max_rem.max((s.lhs - s.rhs).abs());
        csv.row(vec![s.t.into(), s.lhs.into(), s.rhs.into(), s.secular.into(), (s.lhs - s.rhs).into()]);
    }
    out.add("pressure.csv", csv.finish());
    out.add(
        "summary.json",
        json_string(&json!({
            "omega": omega,
            "max_abs_lhs": max_lhs,
            "omega_times_max_abs_lhs": omega * max_lhs,
            "max_remainder": max_rem,
            "omega_times_max_remainder": omega * max_rem,
        })),
    );
    Ok(None)
}
