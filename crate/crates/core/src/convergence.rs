//! ω-sweeps of full orbits against guiding-centre solutions, and order fits.

use crate::diagnostics::{guiding_center_of, instantaneous_moment, pressure_deviation, time_avg_gyromotion};
use crate::error::{Error, Result};
use crate::field_models::{eval_field, FieldModel};
use crate::guiding_center::{gc_init, integrate_gc, GCTrajectory, GcOrder, InitMode};
use crate::orbit::{integrate_orbit, OrbitConfig, Scheme, Trajectory};
use crate::series::{uniform_grid, PositionTrack};
use crate::vec3::Vec3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Default ω values of a sweep.
pub const DEFAULT_OMEGAS: [f64; 5] = [1e2, 3e2, 1e3, 3e3, 1e4];
/// Default comparison window.
pub const DEFAULT_T: f64 = 5.0;
/// Errors below this are treated as converged by the monotonicity check.
pub const CONVERGED_FLOOR: f64 = 1e-12;

/// `max_t |a(t) − b(t)|` over `t_grid`.
pub fn sup_distance(a: &dyn PositionTrack, b: &dyn PositionTrack, t_grid: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &t in t_grid {
        let d = (a.position_at(t)? - b.position_at(t)?).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `sup |x_ω − x|` against the zeroth-order path.
    ZerothOrder,
    /// `sup |R(x_ω, v_ω) − R_gc|` against the first-order guiding centre.
    FirstOrderGc,
    /// `max |μ_inst − μ0|`.
    MomentDrift,
    /// `|(1/T) ∫ ρ_ω dt|` over the window.
    AvgGyro,
    /// `max |Δp − (boundary + secular)|` along the orbit.
    PressureRemainder,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::ZerothOrder,
        Metric::FirstOrderGc,
        Metric::MomentDrift,
        Metric::AvgGyro,
        Metric::PressureRemainder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ZerothOrder => "zeroth_order",
            Metric::FirstOrderGc => "first_order_gc",
            Metric::MomentDrift => "moment_drift",
            Metric::AvgGyro => "avg_gyro",
            Metric::PressureRemainder => "pressure_remainder",
        }
    }

    /// Whether the monotonicity check runs on `ω·error` (an o(1/ω) claim)
    /// rather than on the error itself.
    pub fn scaled_by_omega(self) -> bool {
        matches!(self, Metric::FirstOrderGc | Metric::AvgGyro | Metric::PressureRemainder)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!("unknown metric `{s}` (one of {})", names.join(", ")))
            })
    }
}

/// Numerical settings of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Full-orbit steps per local gyroperiod.
    pub steps_per_gyro: usize,
    pub scheme: Scheme,
    /// Guiding-centre initialisation (the zeroth-order path of the pressure
    /// metric always starts at `x0`).
    pub init_mode: InitMode,
    /// Guiding-centre step as a fraction of `T`.
    pub gc_steps: usize,
    /// Comparison points on `[0, T]`.
    pub grid_points: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            steps_per_gyro: 200,
            scheme: Scheme::Rk4,
            init_mode: InitMode::Exact,
            gc_steps: 10_000,
            grid_points: 2000,
        }
    }
}

/// Output of [`omega_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub omegas: Vec<f64>,
    pub metric: Metric,
    pub errors: Vec<f64>,
    /// Negated log-log slope; `None` if fewer than three errors are positive.
    pub fitted_order: Option<f64>,
    /// `errors[k+1] / errors[k]`.
    pub ratios: Vec<f64>,
    /// Strict decrease of the error (or of `ω·error`, see [`Metric::scaled_by_omega`]).
    pub monotone: bool,
}

impl SweepResult {
    pub fn omega_times_errors(&self) -> Vec<f64> {
        self.omegas.iter().zip(&self.errors).map(|(w, e)| w * e).collect()
    }
}

/// Strict decrease, with consecutive values both below `floor` counted as converged.
pub fn strictly_decreasing(values: &[f64], floor: f64) -> bool {
    values.windows(2).all(|w| w[1] < w[0] || (w[0] < floor && w[1] < floor))
}

/// Log-log least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    /// Negated slope: 1 means `error ∝ 1/ω`.
    pub order: f64,
    /// Intercept of `log error` at `log ω = 0`.
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
    /// Entries dropped because their error was not positive.
    pub excluded: Vec<bool>,
}

pub fn order_fit(omegas: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if omegas.len() != errors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} omegas but {} errors",
            omegas.len(),
            errors.len()
        )));
    }
    let excluded: Vec<bool> = errors.iter().map(|&e| !(e > 0.0 && e.is_finite())).collect();
    let pts: Vec<(f64, f64)> = omegas
        .iter()
        .zip(errors)
        .zip(&excluded)
        .filter(|(_, &x)| !x)
        .map(|((w, e), _)| (w.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit { usable: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(OrderFit {
        order: -slope,
        intercept,
        residual,
        excluded,
    })
}

fn gyroperiod(model: &dyn FieldModel, x0: Vec3, omega: f64) -> Result<f64> {
    Ok(TAU / (omega * eval_field(model, x0)?.magnitude))
}

fn full_orbit(
    model: &dyn FieldModel,
    x0: Vec3,
    v0: Vec3,
    omega: f64,
    t_end: f64,
    dt_out: f64,
    opts: &SweepOptions,
) -> Result<Trajectory> {
    integrate_orbit(
        model,
        &OrbitConfig {
            x0,
            v0,
            omega,
            t_end,
            steps_per_gyro: opts.steps_per_gyro,
            scheme: opts.scheme,
            dt_out,
        },
    )
}

fn guiding_centre(
    model: &dyn FieldModel,
    x0: Vec3,
    v0: Vec3,
    omega: f64,
    t_end: f64,
    dt_out: f64,
    mode: InitMode,
    order: GcOrder,
    opts: &SweepOptions,
) -> Result<GCTrajectory> {
    let (init, params) = gc_init(model, x0, v0, omega, mode, order)?;
    integrate_gc(model, &init, &params, t_end, t_end / opts.gc_steps as f64, dt_out)
}

/// Guiding-centre positions of the full orbit at its samples.
struct ExtractedCentre<'a> {
    traj: &'a Trajectory,
    model: &'a dyn FieldModel,
}

impl PositionTrack for ExtractedCentre<'_> {
    fn span(&self) -> (f64, f64) {
        self.traj.span()
    }

    fn position_at(&self, t: f64) -> Result<Vec3> {
        let s = self.traj.state_at(self.model, t)?;
        guiding_center_of(&s, self.traj.omega, self.model)
    }
}

/// The error of one sweep cell.
pub fn metric_error(
    model: &dyn FieldModel,
    x0: Vec3,
    v0: Vec3,
    omega: f64,
    t_end: f64,
    metric: Metric,
    opts: &SweepOptions,
) -> Result<f64> {
    let grid_dt = t_end / opts.grid_points as f64;
    let grid = uniform_grid(0.0, t_end, grid_dt);
    match metric {
        Metric::ZerothOrder => {
            let orbit = full_orbit(model, x0, v0, omega, t_end, grid_dt, opts)?;
            let gc = guiding_centre(model, x0, v0, omega, t_end, grid_dt, opts.init_mode, GcOrder::Zeroth, opts)?;
            sup_distance(&orbit, &gc, &grid)
        }
        Metric::FirstOrderGc => {
            let orbit = full_orbit(model, x0, v0, omega, t_end, grid_dt, opts)?;
            let gc = guiding_centre(model, x0, v0, omega, t_end, grid_dt, opts.init_mode, GcOrder::First, opts)?;
            let centre = ExtractedCentre { traj: &orbit, model };
            sup_distance(&centre, &gc, &grid)
        }
        Metric::MomentDrift => {
            // gyro-resolved sampling so the oscillation peaks are seen
            let dt_out = grid_dt.min(gyroperiod(model, x0, omega)? / 16.0);
            let orbit = full_orbit(model, x0, v0, omega, t_end, dt_out, opts)?;
            let (_, params) = gc_init(model, x0, v0, omega, opts.init_mode, GcOrder::Zeroth)?;
            let mut worst = 0.0_f64;
            for s in &orbit.samples {
                worst = worst.max((instantaneous_moment(s, params.v0_mag, model)? - params.mu0).abs());
            }
            Ok(worst)
        }
        Metric::AvgGyro => {
            // the average must not alias the gyration
            let dt_out = grid_dt.min(gyroperiod(model, x0, omega)? / 8.0);
            let orbit = full_orbit(model, x0, v0, omega, t_end, dt_out, opts)?;
            // the gyro-resolved grid need not end exactly at T
            Ok(time_avg_gyromotion(&orbit, model, 0.0, orbit.last().t)?.norm())
        }
        Metric::PressureRemainder => {
            let orbit = full_orbit(model, x0, v0, omega, t_end, grid_dt, opts)?;
            let gc = guiding_centre(model, x0, v0, omega, t_end, grid_dt, InitMode::Naive, GcOrder::Zeroth, opts)?;
            let samples = pressure_deviation(&orbit, model, &gc)?;
            Ok(samples.iter().map(|s| (s.lhs - s.rhs).abs()).fold(0.0, f64::max))
        }
    }
}

/// Runs `metric` at each ω with identical initial data (cells in parallel).
pub fn omega_sweep(
    model: &dyn FieldModel,
    x0: Vec3,
    v0: Vec3,
    omegas: &[f64],
    t_end: f64,
    metric: Metric,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if omegas.len() < 3 {
        return Err(Error::InvalidArgument(format!("a sweep needs >= 3 omegas, got {}", omegas.len())));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("omegas must be strictly increasing".into()));
    }
    if let Some(&w) = omegas.iter().find(|&&w| w < 1e2) {
        return Err(Error::InvalidArgument(format!("omegas must be >= 100, got {w}")));
    }
    let cells: Vec<Result<f64>> = omegas
        .par_iter()
        .map(|&w| metric_error(model, x0, v0, w, t_end, metric, opts))
        .collect();
    let mut errors = Vec::with_capacity(omegas.len());
    for (cell, &omega) in cells.into_iter().zip(omegas) {
        errors.push(cell.map_err(|e| Error::Sweep {
            omega,
            source: Box::new(e),
        })?);
    }
    let ratios = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let checked: Vec<f64> = if metric.scaled_by_omega() {
        omegas.iter().zip(&errors).map(|(w, e)| w * e).collect()
    } else {
        errors.clone()
    };
    Ok(SweepResult {
        omegas: omegas.to_vec(),
        metric,
        fitted_order: order_fit(omegas, &errors).ok().map(|f| f.order),
        ratios,
        monotone: strictly_decreasing(&checked, CONVERGED_FLOOR),
        errors,
    })
}

/// Velocity with parallel part `h b(x0)` and perpendicular part of size
/// `v_perp` along the perpendicular gradient of `|B|` (a fixed axis when that
/// vanishes). The initial gyration then points along a level set of `|B|`,
/// which keeps the gyro-averaged mirror force free of an O(1/ω) offset.
pub fn well_prepared_velocity(model: &dyn FieldModel, x0: Vec3, h: f64, v_perp: f64) -> Result<Vec3> {
    let s = eval_field(model, x0)?;
    let b = s.unit;
    let g = s.grad_magnitude - b * b.dot(s.grad_magnitude);
    let dir = if g.norm() > 1e-12 * s.grad_magnitude.norm().max(1e-300) && g.norm() > 0.0 {
        g.normalized()
    } else {
        let axis = if b.x.abs() <= b.y.abs() && b.x.abs() <= b.z.abs() {
            Vec3::X
        } else if b.y.abs() <= b.z.abs() {
            Vec3::Y
        } else {
            Vec3::Z
        };
        (axis - b * axis.dot(b)).normalized()
    };
    Ok(b * h + dir * v_perp)
}

/// Initial data and window used for a model's sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub x0: Vec3,
    pub v0: Vec3,
    pub t_end: f64,
}

/// Default sweep setup per built-in model (mirror: one bounce period).
pub fn preset(model: &dyn FieldModel) -> Result<Preset> {
    let (x0, h, vp) = match model.name() {
        "uniform" | "slab_gradB" => (Vec3::ZERO, 0.8, 0.6),
        "toroidal" => (Vec3::new(1.0, 0.0, 0.0), 1.0, 1.0),
        "mirror" => (Vec3::new(0.02, 0.0, 0.0), 0.5, 0.75_f64.sqrt()),
        "screw_pinch" => (Vec3::new(0.5, 0.0, 0.0), 0.8, 0.6),
        "solovev" => (Vec3::new(1.2, 0.0, 0.0), 0.8, 0.6),
        other => {
            return Err(Error::Unsupported {
                model: other.to_string(),
                what: "sweep preset",
            })
        }
    };
    let v0 = well_prepared_velocity(model, x0, h, vp)?;
    let t_end = if model.name() == "mirror" {
        mirror_bounce_period(model, x0, v0)?
    } else {
        DEFAULT_T
    };
    Ok(Preset { x0, v0, t_end })
}

/// Bounce period `2π / √(μ0 ∂²|B|/∂z²)` of the guiding centre on the mirror
/// axis, exact for the quadratic on-axis profile.
pub fn mirror_bounce_period(model: &dyn FieldModel, x0: Vec3, v0: Vec3) -> Result<f64> {
    let s = eval_field(model, x0)?;
    let h = s.unit.dot(v0);
    let mu0 = (v0.norm_sq() - h * h) / (2.0 * s.magnitude);
    // curvature of |B| along the axis from the field Jacobian
    let d = 1e-4;
    let bp = eval_field(model, x0 + Vec3::Z * d)?.grad_magnitude.z;
    let bm = eval_field(model, x0 - Vec3::Z * d)?.grad_magnitude.z;
    let k = (bp - bm) / (2.0 * d);
    if !(mu0 > 0.0 && k > 0.0) {
        return Err(Error::InvalidArgument("no bounce motion for this initial data".into()));
    }
    Ok(TAU / (mu0 * k).sqrt())
}
