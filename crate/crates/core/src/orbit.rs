//! Full-orbit integration of `ẍ = ω ẋ × B(x)`.
//!
//! Two fixed-resolution schemes are provided: a Boris push (speed-preserving,
//! time-symmetric) for production runs and classical RK4 as the accuracy
//! oracle. The internal step tracks the local gyroperiod,
//! `dt = 2π / (ω |B(x)| steps_per_gyro)`, and output is resampled onto a
//! uniform grid by cubic Hermite interpolation.

use crate::error::{Error, Result};
use crate::field_models::{field_checked, FieldModel};
use crate::series::{hermite, locate_span, uniform_grid, PositionTrack};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Phase-space state of a particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

impl ParticleState {
    pub fn new(t: f64, x: Vec3, v: Vec3) -> Self {
        ParticleState { t, x, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Boris,
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Boris => "boris",
            Scheme::Rk4 => "rk4",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boris" => Ok(Scheme::Boris),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}` (boris|rk4)"))),
        }
    }
}

/// Rotates `v` about `B` by the exact angle `ω |B| dt`, using the
/// `tan(θ/2)` form of the Boris rotation.
#[inline]
pub fn boris_rotate(v: Vec3, field: Vec3, omega: f64, dt: f64) -> Vec3 {
    let mag = field.norm();
    let theta = omega * mag * dt;
    let t = field * ((0.5 * theta).tan() / mag);
    let s = t * (2.0 / (1.0 + t.norm_sq()));
    let v_prime = v + v.cross(t);
    v + v_prime.cross(s)
}

/// One Boris step: half drift, exact rotation with the field at the half-step
/// position, half drift.
pub fn boris_step(model: &dyn FieldModel, state: &ParticleState, dt: f64, omega: f64) -> Result<ParticleState> {
    let x_half = state.x + state.v * (0.5 * dt);
    let field = field_checked(model, x_half)?;
    let v = boris_rotate(state.v, field, omega, dt);
    Ok(ParticleState::new(state.t + dt, x_half + v * (0.5 * dt), v))
}

#[inline]
fn lorentz(model: &dyn FieldModel, x: Vec3, v: Vec3, omega: f64) -> Result<Vec3> {
    Ok(v.cross(field_checked(model, x)?) * omega)
}

/// One classical RK4 step of `(ẋ, v̇) = (v, ω v × B(x))`.
pub fn rk4_step(model: &dyn FieldModel, state: &ParticleState, dt: f64, omega: f64) -> Result<ParticleState> {
    let (x, v) = (state.x, state.v);
    let h2 = 0.5 * dt;
    let a1 = lorentz(model, x, v, omega)?;
    let (x2, v2) = (x + v * h2, v + a1 * h2);
    let a2 = lorentz(model, x2, v2, omega)?;
    let (x3, v3) = (x + v2 * h2, v + a2 * h2);
    let a3 = lorentz(model, x3, v3, omega)?;
    let (x4, v4) = (x + v3 * dt, v + a3 * dt);
    let a4 = lorentz(model, x4, v4, omega)?;
    let w = dt / 6.0;
    Ok(ParticleState::new(
        state.t + dt,
        x + (v + v2 * 2.0 + v3 * 2.0 + v4) * w,
        v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * w,
    ))
}

/// Inputs of one full-orbit run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitConfig {
    pub x0: Vec3,
    pub v0: Vec3,
    pub omega: f64,
    /// Final time.
    pub t_end: f64,
    pub steps_per_gyro: usize,
    pub scheme: Scheme,
    pub dt_out: f64,
}

impl OrbitConfig {
    /// Output spacing of one eighth of the gyroperiod at `x0`.
    pub fn gyro_resolved_dt_out(model: &dyn FieldModel, x0: Vec3, omega: f64) -> Result<f64> {
        let b = field_checked(model, x0)?.norm();
        Ok(TAU / (omega * b) / 8.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be > 0, got {}", self.omega));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("T must be > 0, got {}", self.t_end));
        }
        if self.steps_per_gyro < 16 {
            return bad(format!("steps_per_gyro must be >= 16, got {}", self.steps_per_gyro));
        }
        if !(self.dt_out > 0.0 && self.dt_out.is_finite()) {
            return bad(format!("dt_out must be > 0, got {}", self.dt_out));
        }
        if !self.x0.is_finite() || !self.v0.is_finite() {
            return bad("x0 and v0 must be finite".into());
        }
        Ok(())
    }
}

/// Uniformly sampled full-orbit trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub omega: f64,
    pub scheme: Scheme,
    pub steps_per_gyro: usize,
    pub dt_out: f64,
    pub samples: Vec<ParticleState>,
    /// Set when `T` was shorter than the first internal step and only the
    /// initial state is returned.
    pub degenerate: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> &ParticleState {
        &self.samples[0]
    }

    pub fn last(&self) -> &ParticleState {
        &self.samples[self.samples.len() - 1]
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        locate_span(self.samples[0].t, self.last().t, self.samples.len(), t)
    }

    /// State at `t` by cubic Hermite interpolation between output samples
    /// (velocity interpolated with the Lorentz acceleration from `model`).
    pub fn state_at(&self, model: &dyn FieldModel, t: f64) -> Result<ParticleState> {
        let (i, tau) = self.locate(t)?;
        let s0 = &self.samples[i];
        if tau == 0.0 || self.samples.len() == 1 {
            return Ok(*s0);
        }
        let s1 = &self.samples[i + 1];
        let h = s1.t - s0.t;
        let a0 = lorentz(model, s0.x, s0.v, self.omega)?;
        let a1 = lorentz(model, s1.x, s1.v, self.omega)?;
        Ok(ParticleState::new(
            t,
            hermite(s0.x, s0.v, s1.x, s1.v, h, tau),
            hermite(s0.v, a0, s1.v, a1, h, tau),
        ))
    }
}

impl PositionTrack for Trajectory {
    fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    fn position_at(&self, t: f64) -> Result<Vec3> {
        let (i, tau) = self.locate(t)?;
        let s0 = &self.samples[i];
        if tau == 0.0 || self.samples.len() == 1 {
            return Ok(s0.x);
        }
        let s1 = &self.samples[i + 1];
        Ok(hermite(s0.x, s0.v, s1.x, s1.v, s1.t - s0.t, tau))
    }
}

/// Integrates the Lorentz equation from `(x0, v0)` over `[0, T]`.
pub fn integrate_orbit(model: &dyn FieldModel, cfg: &OrbitConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let omega = cfg.omega;
    let spg = cfg.steps_per_gyro as f64;
    let step_size = |x: Vec3| -> Result<(f64, Vec3)> {
        let b = field_checked(model, x)?;
        Ok((TAU / (omega * b.norm() * spg), b))
    };

    let mut state = ParticleState::new(0.0, cfg.x0, cfg.v0);
    let (dt0, mut b_here) = step_size(cfg.x0)?;
    let mut traj = Trajectory {
        omega,
        scheme: cfg.scheme,
        steps_per_gyro: cfg.steps_per_gyro,
        dt_out: cfg.dt_out,
        samples: vec![state],
        degenerate: false,
    };
    if cfg.t_end <= dt0 {
        traj.degenerate = true;
        return Ok(traj);
    }

    let out_times = uniform_grid(0.0, cfg.t_end, cfg.dt_out);
    traj.samples.reserve(out_times.len());
    let mut next = 1;
    let truncated = |t: f64| Error::Truncated {
        model: model.name().to_string(),
        exit_time: t,
    };
    while next < out_times.len() {
        let dt = TAU / (omega * b_here.norm() * spg);
        let new = match cfg.scheme {
            Scheme::Boris => boris_step(model, &state, dt, omega),
            Scheme::Rk4 => rk4_step(model, &state, dt, omega),
        }
        .map_err(|_| truncated(state.t))?;
        let b_new = field_checked(model, new.x).map_err(|_| truncated(new.t))?;

        if out_times[next] <= new.t {
            let a0 = state.v.cross(b_here) * omega;
            let a1 = new.v.cross(b_new) * omega;
            while next < out_times.len() && out_times[next] <= new.t {
                let t = out_times[next];
                let tau = (t - state.t) / dt;
                // direction from the Hermite interpolant, speed linear between the
                // steps, so a norm-preserving pusher stays norm-preserving on output
                let v = hermite(state.v, a0, new.v, a1, dt, tau);
                let speed = state.v.norm() * (1.0 - tau) + new.v.norm() * tau;
                traj.samples.push(ParticleState::new(
                    t,
                    hermite(state.x, state.v, new.x, new.v, dt, tau),
                    v * (speed / v.norm()),
                ));
                next += 1;
            }
        }
        state = new;
        b_here = b_new;
    }
    Ok(traj)
}

/// `max_k | |v_k| − |v_0| |`.
pub fn speed_drift(traj: &Trajectory) -> f64 {
    let v0 = traj.samples[0].v.norm();
    traj.samples
        .iter()
        .map(|s| (s.v.norm() - v0).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_models::BuiltinModel;

    fn model(name: &str) -> BuiltinModel {
        BuiltinModel::named(name).unwrap()
    }

    #[test]
    fn boris_closes_gyrocircle() {
        let m = model("uniform");
        let omega = 100.0;
        let dt = TAU / (100.0 * omega);
        let mut s = ParticleState::new(0.0, Vec3::ZERO, Vec3::X);
        for _ in 0..100 {
            s = boris_step(&m, &s, dt, omega).unwrap();
        }
        assert!(s.x.norm() < 1e-6, "{:?}", s.x);
    }

    #[test]
    fn boris_preserves_speed() {
        for m in BuiltinModel::all() {
            let x = match m.name() {
                "toroidal" | "solovev" => Vec3::new(1.1, 0.0, 0.05),
                _ => Vec3::new(0.01, 0.0, 0.1),
            };
            let s = ParticleState::new(0.0, x, Vec3::new(0.6, -0.3, 0.7));
            let out = boris_step(&m, &s, 1e-3, 1e3).unwrap();
            assert!((out.v.norm() - s.v.norm()).abs() < 1e-14, "{}", m.name());
        }
    }

    #[test]
    fn rk4_order_four_in_toroidal_field() {
        let m = model("toroidal");
        let omega = 10.0;
        let x0 = Vec3::new(1.0, 0.0, 0.0);
        let v0 = Vec3::new(0.5, 1.0, 0.3);
        let period = TAU / omega;
        let run = |n: usize| {
            let dt = period / n as f64;
            let mut s = ParticleState::new(0.0, x0, v0);
            for _ in 0..n {
                s = rk4_step(&m, &s, dt, omega).unwrap();
            }
            s.x
        };
        let reference = run(4096);
        let e1 = (run(64) - reference).norm();
        let e2 = (run(128) - reference).norm();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn uniform_helix() {
        let m = model("uniform");
        let cfg = OrbitConfig {
            x0: Vec3::ZERO,
            v0: Vec3::new(1.0, 0.0, 1.0),
            omega: 100.0,
            t_end: 1.0,
            steps_per_gyro: 200,
            scheme: Scheme::Rk4,
            dt_out: 0.01,
        };
        let traj = integrate_orbit(&m, &cfg).unwrap();
        assert_eq!(traj.samples.len(), 101);
        for s in &traj.samples {
            // gyration about (0, -1/ω) clockwise when viewed along +z
            let c = Vec3::new(0.0, -0.01, s.t);
            let r = Vec3::new(s.x.x - c.x, s.x.y - c.y, 0.0).norm();
            assert!((s.x.z - s.t).abs() < 1e-12);
            assert!((r - 0.01).abs() < 1e-8, "t={} r={r}", s.t);
        }
    }

    #[test]
    fn degenerate_horizon_returns_initial_state() {
        let m = model("uniform");
        let cfg = OrbitConfig {
            x0: Vec3::ZERO,
            v0: Vec3::X,
            omega: 1.0,
            t_end: 1e-3,
            steps_per_gyro: 64,
            scheme: Scheme::Boris,
            dt_out: 1e-4,
        };
        let traj = integrate_orbit(&m, &cfg).unwrap();
        assert!(traj.degenerate);
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(speed_drift(&traj), 0.0);
    }

    #[test]
    fn domain_exit_reports_time() {
        let m = model("uniform");
        let cfg = OrbitConfig {
            x0: Vec3::new(0.0, 0.0, 99.0),
            v0: Vec3::new(0.3, 0.0, 1.0),
            omega: 10.0,
            t_end: 10.0,
            steps_per_gyro: 32,
            scheme: Scheme::Boris,
            dt_out: 0.1,
        };
        match integrate_orbit(&m, &cfg) {
            Err(Error::Truncated { exit_time, .. }) => assert!((exit_time - 1.0).abs() < 0.05, "{exit_time}"),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        let m = model("uniform");
        let base = OrbitConfig {
            x0: Vec3::ZERO,
            v0: Vec3::X,
            omega: 1.0,
            t_end: 1.0,
            steps_per_gyro: 64,
            scheme: Scheme::Boris,
            dt_out: 0.1,
        };
        assert!(integrate_orbit(&m, &OrbitConfig { omega: 0.0, ..base }).is_err());
        assert!(integrate_orbit(&m, &OrbitConfig { steps_per_gyro: 8, ..base }).is_err());
        assert!(integrate_orbit(&m, &OrbitConfig { t_end: -1.0, ..base }).is_err());
        assert!(integrate_orbit(&m, &OrbitConfig { x0: Vec3::new(1e3, 0.0, 0.0), ..base }).is_err());
    }
}
