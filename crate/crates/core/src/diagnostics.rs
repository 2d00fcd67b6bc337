//! Quantities extracted from full orbits: gyromotion and guiding centre,
//! instantaneous moment, gyrophase, path curvature, averaged gyromotion and
//! pressure deviation.

use crate::error::{Error, Result};
use crate::field_models::{eval_field, FieldModel, FieldSample};
use crate::guiding_center::GCTrajectory;
use crate::orbit::{ParticleState, Trajectory};
use crate::series::{cumulative_trapezoid, PositionTrack};
use crate::vec3::Vec3;
use serde::Serialize;

/// Below this `|b×v|` the gyration direction is undefined.
pub const DEGENERATE_PITCH: f64 = 1e-10;

fn gyromotion_from(s: &FieldSample, v: Vec3, omega: f64) -> Vec3 {
    s.unit.cross(v) / (omega * s.magnitude)
}

/// `ρ = b(x)×v / (ω|B(x)|)`.
pub fn gyromotion(state: &ParticleState, omega: f64, model: &dyn FieldModel) -> Result<Vec3> {
    let s = eval_field(model, state.x)?;
    Ok(gyromotion_from(&s, state.v, omega))
}

/// `x − ρ`.
pub fn guiding_center_of(state: &ParticleState, omega: f64, model: &dyn FieldModel) -> Result<Vec3> {
    Ok(state.x - gyromotion(state, omega, model)?)
}

/// `(|v0|² − (b(x)·v)²) / (2|B(x)|)`.
pub fn instantaneous_moment(state: &ParticleState, v0_mag: f64, model: &dyn FieldModel) -> Result<f64> {
    let s = eval_field(model, state.x)?;
    let h = s.unit.dot(state.v);
    Ok((v0_mag * v0_mag - h * h) / (2.0 * s.magnitude))
}

/// One gyrophase sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSample {
    pub t: f64,
    /// Unwrapped angle of `b×v` in the transported frame.
    pub phase: f64,
    /// Finite-difference rate of `phase`.
    pub rate: f64,
}

/// Unit vector ⊥ `b` built from the coordinate axis least aligned with it.
fn reference_normal(b: Vec3) -> Vec3 {
    let axis = if b.x.abs() <= b.y.abs() && b.x.abs() <= b.z.abs() {
        Vec3::X
    } else if b.y.abs() <= b.z.abs() {
        Vec3::Y
    } else {
        Vec3::Z
    };
    (axis - b * axis.dot(b)).normalized()
}

/// Gyrophase along an output-sampled trajectory.
///
/// The frame `{e2, e3 = e2×b}` starts from a fixed reference axis at the first
/// sample and is carried along by minimal rotation (project onto the plane ⊥ to
/// the new `b`, renormalise). The angle of `u = b×v/|b×v|` in it grows at
/// roughly `ω|B|`. Output spacing must stay below half a gyroperiod for the
/// unwrapping to be unambiguous.
pub fn gyrophase(traj: &Trajectory, model: &dyn FieldModel) -> Result<Vec<PhaseSample>> {
    let n = traj.samples.len();
    let mut phases = Vec::with_capacity(n);
    let mut e2 = Vec3::ZERO;
    let mut prev = 0.0_f64;
    for (k, st) in traj.samples.iter().enumerate() {
        let s = eval_field(model, st.x)?;
        let b = s.unit;
        let w = b.cross(st.v);
        let wn = w.norm();
        if wn < DEGENERATE_PITCH {
            return Err(Error::DegeneratePitch { time: st.t });
        }
        let u = w / wn;
        e2 = if k == 0 {
            reference_normal(b)
        } else {
            let p = e2 - b * e2.dot(b);
            if p.norm() < 1e-8 {
                reference_normal(b)
            } else {
                p.normalized()
            }
        };
        let e3 = e2.cross(b);
        let raw = u.dot(e3).atan2(u.dot(e2));
        let phase = if k == 0 {
            raw
        } else {
            let mut d = raw - prev.rem_euclid(std::f64::consts::TAU);
            d = (d + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
            prev + d
        };
        phases.push((st.t, phase));
        prev = phase;
    }
    let rate = |k: usize| -> f64 {
        if n < 2 {
            return 0.0;
        }
        let (a, b) = match k {
            0 => (0, 1),
            k if k == n - 1 => (n - 2, n - 1),
            k => (k - 1, k + 1),
        };
        (phases[b].1 - phases[a].1) / (phases[b].0 - phases[a].0)
    };
    Ok((0..n)
        .map(|k| PhaseSample {
            t: phases[k].0,
            phase: phases[k].1,
            rate: rate(k),
        })
        .collect())
}

/// Mean phase rate over `[t0, t1]` and `ω · mean|B|` over the same samples,
/// both from the output grid (endpoints snapped to the nearest samples).
pub fn phase_rate_window(
    traj: &Trajectory,
    phases: &[PhaseSample],
    model: &dyn FieldModel,
    t0: f64,
    t1: f64,
) -> Result<(f64, f64)> {
    let dt = traj.dt_out;
    let i0 = (t0 / dt).round() as usize;
    let i1 = ((t1 / dt).round() as usize).min(phases.len() - 1);
    if i1 <= i0 {
        return Err(Error::InvalidArgument(format!("empty phase window [{t0}, {t1}]")));
    }
    let span = phases[i1].t - phases[i0].t;
    let mean_rate = (phases[i1].phase - phases[i0].phase) / span;
    let mags = traj.samples[i0..=i1]
        .iter()
        .map(|s| Ok(eval_field(model, s.x)?.magnitude))
        .collect::<Result<Vec<f64>>>()?;
    let mean_b = crate::series::trapezoid(&mags, dt) / span;
    Ok((mean_rate, traj.omega * mean_b))
}

/// `|v×B/|v×B| + ρ/|ρ||`: the path curvature direction `∝ v×B` is opposite
/// the unit gyromotion.
pub fn curvature_antiparallel_residual(state: &ParticleState, omega: f64, model: &dyn FieldModel) -> Result<f64> {
    let s = eval_field(model, state.x)?;
    let vxb = state.v.cross(s.field);
    let rho = gyromotion_from(&s, state.v, omega);
    let (na, nr) = (vxb.norm(), rho.norm());
    if na <= f64::MIN_POSITIVE || nr <= f64::MIN_POSITIVE || na < 1e-14 * state.v.norm() * s.magnitude {
        return Err(Error::DegeneratePitch { time: state.t });
    }
    Ok((vxb / na + rho / nr).norm())
}

/// Path curvature `|ẍ×ẋ|/|ẋ|³` of the full orbit at `state`.
pub fn path_curvature(state: &ParticleState, omega: f64, model: &dyn FieldModel) -> Result<f64> {
    let s = eval_field(model, state.x)?;
    let acc = state.v.cross(s.field) * omega;
    let speed = state.v.norm();
    Ok(acc.cross(state.v).norm() / (speed * speed * speed))
}

/// Trapezoid average of the gyromotion over `[t0, t1]`.
///
/// Interior nodes are the trajectory's output samples; window ends off the
/// grid are interpolated. `t0 == t1` returns the gyromotion at that time.
pub fn time_avg_gyromotion(traj: &Trajectory, model: &dyn FieldModel, t0: f64, t1: f64) -> Result<Vec3> {
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("empty averaging window [{t0}, {t1}]")));
    }
    let (a, b) = traj.span();
    if t0 < a - 1e-9 || t1 > b + 1e-9 * b.abs().max(1.0) {
        return Err(Error::Coverage {
            from: t0.min(a),
            to: t1.max(b),
        });
    }
    let start = traj.state_at(model, t0)?;
    if t1 == t0 {
        return gyromotion(&start, traj.omega, model);
    }
    let mut nodes = vec![start];
    nodes.extend(traj.samples.iter().filter(|s| s.t > t0 + 1e-12 && s.t < t1 - 1e-12).copied());
    nodes.push(traj.state_at(model, t1)?);

    let rho = nodes
        .iter()
        .map(|s| gyromotion(s, traj.omega, model))
        .collect::<Result<Vec<Vec3>>>()?;
    let mut acc = Vec3::ZERO;
    for k in 1..nodes.len() {
        acc += (rho[k - 1] + rho[k]) * (0.5 * (nodes[k].t - nodes[k - 1].t));
    }
    Ok(acc / (t1 - t0))
}

/// The secular pressure integrand `(|v0|²/|B| − μ0) (B×∇p)·∇(1/|B|)`.
pub fn pressure_secular_integrand(sample: &FieldSample, v0_sq: f64, mu0: f64) -> Result<f64> {
    let grad_p = sample.grad_pressure.ok_or(Error::Unsupported {
        model: "<sample>".into(),
        what: "pressure",
    })?;
    let mag = sample.magnitude;
    let grad_inv_b = sample.grad_magnitude * (-1.0 / (mag * mag));
    Ok((v0_sq / mag - mu0) * sample.field.cross(grad_p).dot(grad_inv_b))
}

/// One sample of the pressure comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureSample {
    pub t: f64,
    /// `p(x_ω(t)) − p(x0)`.
    pub lhs: f64,
    /// Oscillatory boundary terms plus the secular integral.
    pub rhs: f64,
    /// The secular integral alone.
    pub secular: f64,
}

/// Compares the pressure change along a full orbit with its first-order
/// expansion built on the zeroth-order path `x(t)`:
///
/// ```text
/// rhs(t) = (b×v_ω(t))·∇p / (ω|B|) |_{x(t)} − (b×v0)·∇p / (ω|B|) |_{x0}
///        + (1/ω) ∫₀ᵗ (|v0|²/|B| − μ0) (B×∇p)·∇(1/|B|) |_{x(s)} ds
/// ```
///
/// Evaluated on the orbit's output grid; the zeroth-order path is resampled
/// onto it and the integral uses the trapezoid rule.
pub fn pressure_deviation(
    traj: &Trajectory,
    model: &dyn FieldModel,
    gc_zero_order: &GCTrajectory,
) -> Result<Vec<PressureSample>> {
    if !model.has_pressure() {
        return Err(Error::Unsupported {
            model: model.name().to_string(),
            what: "pressure (pressure deviation)",
        });
    }
    let omega = traj.omega;
    let x0 = traj.initial().x;
    let v0 = traj.initial().v;
    let v0_sq = v0.norm_sq();
    let mu0 = gc_zero_order.params.mu0;
    let p_of = |x: Vec3| -> Result<f64> { Ok(eval_field(model, x)?.pressure.expect("pressure model")) };
    let p_start = p_of(x0)?;

    let boundary = |s: &FieldSample, v: Vec3| -> f64 {
        s.unit.cross(v).dot(s.grad_pressure.expect("pressure model")) / (s.magnitude * omega)
    };
    let s_start = eval_field(model, x0)?;
    let b_start = boundary(&s_start, v0);

    let mut integrand = Vec::with_capacity(traj.samples.len());
    let mut bounds = Vec::with_capacity(traj.samples.len());
    for st in &traj.samples {
        let x_limit = gc_zero_order.position_at(st.t)?;
        let s = eval_field(model, x_limit)?;
        integrand.push(pressure_secular_integrand(&s, v0_sq, mu0)?);
        bounds.push(boundary(&s, st.v));
    }
    let integral = cumulative_trapezoid(&integrand, traj.dt_out);
    traj.samples
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let secular = integral[k] / omega;
            Ok(PressureSample {
                t: st.t,
                lhs: p_of(st.x)? - p_start,
                rhs: bounds[k] - b_start + secular,
                secular,
            })
        })
        .collect()
}

/// Result of [`gyroradius_rate_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GyroradiusRate {
    /// `max |dρ*/dt| / ((|h|/2) ρ* |∇|B||/|B|)`; at most 1.
    pub max_ratio: f64,
    /// Largest `|dρ*/dt|` seen.
    pub max_rate: f64,
    /// Samples where the bound is nonzero.
    pub used: usize,
}

/// Gyroradius `ρ* = √(2μ0/|B(R)|)/ω` along a guiding-centre path, its rate
/// `dρ*/dt = −(h/2)(b·∇|B|/|B|) ρ*`, and the ratio of that rate to the bound
/// `(|h|/2) ρ* |∇|B||/|B|`. Samples where the bound vanishes are skipped.
pub fn gyroradius_rate_check(gc_traj: &GCTrajectory, model: &dyn FieldModel) -> Result<GyroradiusRate> {
    let p = &gc_traj.params;
    if !(p.mu0 > 0.0) {
        return Err(Error::InvalidArgument("gyroradius rate check needs mu0 > 0".into()));
    }
    let mut out = GyroradiusRate {
        max_ratio: 0.0,
        max_rate: 0.0,
        used: 0,
    };
    for st in &gc_traj.samples {
        let s = eval_field(model, st.r)?;
        let rho = (2.0 * p.mu0 / s.magnitude).sqrt() / p.omega;
        let rate = -(st.h / 2.0) * s.unit.dot(s.grad_magnitude) / s.magnitude * rho;
        let bound = (st.h.abs() / 2.0) * rho * s.grad_magnitude.norm() / s.magnitude;
        out.max_rate = out.max_rate.max(rate.abs());
        if bound > 1e-300 {
            out.max_ratio = out.max_ratio.max(rate.abs() / bound);
            out.used += 1;
        }
    }
    Ok(out)
}
