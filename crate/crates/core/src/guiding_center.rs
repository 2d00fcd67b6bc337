//! Zeroth- and first-order guiding-centre dynamics.
//!
//! The reduced state is `(R, h)` with the magnetic moment `μ0` as a conserved
//! parameter:
//!
//! ```text
//! dR/dt = h b(R) + [h² b×κ + μ0 b×∇|B|](R) / (ω |B(R)|)     (first order only)
//! dh/dt = −μ0 b(R)·∇|B|(R)
//! ```

use crate::error::{Error, Result};
use crate::field_models::{eval_field, FieldModel, FieldSample};
use crate::series::{cubic_uniform, uniform_grid, PositionTrack};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Tolerance on `|h| ≤ |v0|` while integrating.
pub const PARALLEL_SPEED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCState {
    pub t: f64,
    /// Guiding-centre position.
    pub r: Vec3,
    /// Parallel velocity.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GcOrder {
    Zeroth,
    First,
}

impl GcOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            0 => Ok(GcOrder::Zeroth),
            1 => Ok(GcOrder::First),
            other => Err(Error::InvalidArgument(format!("order must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            GcOrder::Zeroth => 0,
            GcOrder::First => 1,
        }
    }
}

/// How the initial guiding-centre position is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// `R0 = x0 − b(x0)×v0 / (ω|B(x0)|)`: the initial gyration is removed.
    Exact,
    /// `R0 = x0`.
    Naive,
}

impl std::str::FromStr for InitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(InitMode::Exact),
            "naive" => Ok(InitMode::Naive),
            other => Err(Error::InvalidArgument(format!("unknown init_mode `{other}` (exact|naive)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCParams {
    pub mu0: f64,
    pub v0_mag: f64,
    pub omega: f64,
    pub order: GcOrder,
}

/// Initial guiding-centre state and parameters for particle data `(x0, v0)`.
///
/// `h0 = b(x0)·v0` and `μ0 = (|v0|² − h0²) / (2|B(x0)|)` are taken at the
/// particle position in both modes.
pub fn gc_init(
    model: &dyn FieldModel,
    x0: Vec3,
    v0: Vec3,
    omega: f64,
    mode: InitMode,
    order: GcOrder,
) -> Result<(GCState, GCParams)> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be > 0, got {omega}")));
    }
    let s = eval_field(model, x0)?;
    let h0 = s.unit.dot(v0);
    let v0_sq = v0.norm_sq();
    let mu0 = ((v0_sq - h0 * h0) / (2.0 * s.magnitude)).max(0.0);
    let r0 = match mode {
        InitMode::Exact => x0 - s.unit.cross(v0) / (omega * s.magnitude),
        InitMode::Naive => x0,
    };
    Ok((
        GCState { t: 0.0, r: r0, h: h0 },
        GCParams {
            mu0,
            v0_mag: v0_sq.sqrt(),
            omega,
            order,
        },
    ))
}

fn rhs_from_sample(s: &FieldSample, h: f64, params: &GCParams) -> (Vec3, f64) {
    let mut dr = s.unit * h;
    if params.order == GcOrder::First {
        let drift = s.unit.cross(s.curvature * (h * h) + s.grad_magnitude * params.mu0);
        dr += drift / (params.omega * s.magnitude);
    }
    (dr, -params.mu0 * s.unit.dot(s.grad_magnitude))
}

/// Right-hand side `(dR/dt, dh/dt)` of the guiding-centre system.
pub fn gc_rhs(model: &dyn FieldModel, state: &GCState, params: &GCParams) -> Result<(Vec3, f64)> {
    let s = eval_field(model, state.r)?;
    Ok(rhs_from_sample(&s, state.h, params))
}

/// Output of [`integrate_gc`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GCTrajectory {
    pub params: GCParams,
    pub dt_out: f64,
    pub samples: Vec<GCState>,
}

impl GCTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Parallel velocity at `t` by cubic interpolation.
    pub fn h_at(&self, t: f64) -> Result<f64> {
        cubic_uniform(&self.times(), t, |k| self.samples[k].h)
    }

    /// `h² + 2 μ0 |B(R)|` at every sample.
    pub fn energy(&self, model: &dyn FieldModel) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                let b = eval_field(model, s.r)?.magnitude;
                Ok(s.h * s.h + 2.0 * self.params.mu0 * b)
            })
            .collect()
    }

    /// First time `h` changes sign, located by linear interpolation between samples.
    pub fn first_h_crossing(&self) -> Option<f64> {
        first_sign_change(self.samples.iter().map(|s| (s.t, s.h)))
    }
}

/// First sign change of a sampled scalar, by linear interpolation.
pub fn first_sign_change(mut it: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut t_prev, mut y_prev) = it.next()?;
    for (t, y) in it {
        if y_prev != 0.0 && (y == 0.0 || y.signum() != y_prev.signum()) {
            return Some(t_prev + (t - t_prev) * y_prev / (y_prev - y));
        }
        t_prev = t;
        y_prev = y;
    }
    None
}

impl PositionTrack for GCTrajectory {
    fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    fn position_at(&self, t: f64) -> Result<Vec3> {
        cubic_uniform(&self.times(), t, |k| self.samples[k].r)
    }
}

/// Fixed-step RK4 integration of the guiding-centre system over `[0, T]`.
///
/// The step is shrunk so that an integer number of steps fits each output
/// interval. `|h| ≤ |v0|` is monitored (not clamped); a violation means the
/// step is too large.
pub fn integrate_gc(
    model: &dyn FieldModel,
    init: &GCState,
    params: &GCParams,
    t_end: f64,
    dt: f64,
    dt_out: f64,
) -> Result<GCTrajectory> {
    if !(dt > 0.0 && dt_out > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt, dt_out, T > 0 (got dt={dt}, dt_out={dt_out}, T={t_end})"
        )));
    }
    let substeps = ((dt_out / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h_step = dt_out / substeps as f64;
    let out_times = uniform_grid(0.0, t_end, dt_out);
    let truncated = |t: f64| Error::Truncated {
        model: model.name().to_string(),
        exit_time: t,
    };
    model.check_domain(init.r)?;

    let f = |r: Vec3, h: f64| -> Result<(Vec3, f64)> {
        let s = eval_field(model, r)?;
        Ok(rhs_from_sample(&s, h, params))
    };

    let mut samples = Vec::with_capacity(out_times.len());
    let mut r = init.r;
    let mut h = init.h;
    samples.push(GCState { t: 0.0, r, h });
    for (k, &t_out) in out_times.iter().enumerate().skip(1) {
        let t_start = out_times[k - 1];
        for j in 0..substeps {
            let t = t_start + j as f64 * h_step;
            let step = || -> Result<(Vec3, f64)> {
                let (k1r, k1h) = f(r, h)?;
                let (k2r, k2h) = f(r + k1r * (0.5 * h_step), h + 0.5 * h_step * k1h)?;
                let (k3r, k3h) = f(r + k2r * (0.5 * h_step), h + 0.5 * h_step * k2h)?;
                let (k4r, k4h) = f(r + k3r * h_step, h + h_step * k3h)?;
                let w = h_step / 6.0;
                Ok((
                    r + (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * w,
                    h + (k1h + 2.0 * k2h + 2.0 * k3h + k4h) * w,
                ))
            };
            let (r_new, h_new) = step().map_err(|_| truncated(t))?;
            if h_new.abs() > params.v0_mag + PARALLEL_SPEED_TOL {
                return Err(Error::IntegrationFailure {
                    time: t + h_step,
                    reason: format!(
                        "|h| = {} exceeds |v0| = {}; the guiding-centre step is too large",
                        h_new.abs(),
                        params.v0_mag
                    ),
                });
            }
            r = r_new;
            h = h_new;
        }
        samples.push(GCState { t: t_out, r, h });
    }
    Ok(GCTrajectory {
        params: *params,
        dt_out,
        samples,
    })
}

/// Drift terms at one point: the curvature / grad-B split, and optionally the
/// regrouping into a pure curvature part and a Lorentz-force part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDecomposition {
    /// `h² b×κ / (ω|B|)`
    pub curvature: Vec3,
    /// `μ0 b×∇|B| / (ω|B|)`
    pub grad_b: Vec3,
    /// `((|v0|²/|B| − μ0) b×κ / ω, μ0 b×(B×curl B) / (ω|B|²))` with `|v0|² = h² + 2μ0|B|`.
    pub pressure_form: Option<(Vec3, Vec3)>,
}

impl DriftDecomposition {
    pub fn total(&self) -> Vec3 {
        self.curvature + self.grad_b
    }
}

/// Splits the first-order drift at `sample`. The pressure form is computed only
/// when requested and requires pressure data on the sample.
pub fn drift_decomposition(
    sample: &FieldSample,
    h: f64,
    mu0: f64,
    omega: f64,
    pressure_form: bool,
) -> Result<DriftDecomposition> {
    let b = sample.unit;
    let mag = sample.magnitude;
    let curvature = b.cross(sample.curvature) * (h * h / (omega * mag));
    let grad_b = b.cross(sample.grad_magnitude) * (mu0 / (omega * mag));
    let pressure_form = if pressure_form {
        if sample.grad_pressure.is_none() {
            return Err(Error::Unsupported {
                model: "<sample>".into(),
                what: "pressure-form drift decomposition",
            });
        }
        let v0_sq = h * h + 2.0 * mu0 * mag;
        let curvature_like = b.cross(sample.curvature) * ((v0_sq / mag - mu0) / omega);
        let lorentz = sample.field.cross(sample.curl_field);
        let lorentz_like = b.cross(lorentz) * (mu0 / (omega * mag * mag));
        Some((curvature_like, lorentz_like))
    } else {
        None
    };
    Ok(DriftDecomposition {
        curvature,
        grad_b,
        pressure_form,
    })
}
