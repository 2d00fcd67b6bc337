//! Uniform time grids, interpolation and quadrature shared by the trajectory types.

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Anything that can report a position at arbitrary times in its span.
pub trait PositionTrack {
    /// Covered time interval `[start, end]`.
    fn span(&self) -> (f64, f64);

    fn position_at(&self, t: f64) -> Result<Vec3>;
}

/// Uniform grid `t_k = t0 + k dt`, `k = 0..n`.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt * (1.0 + 1e-12)).floor() as usize;
    (0..=n).map(|k| t0 + k as f64 * dt).collect()
}

/// Locates `t` on a uniform grid: returns the left index and the fractional offset.
/// Errors if `t` falls outside `[times[0], times[last]]` beyond rounding.
pub(crate) fn locate(times: &[f64], t: f64) -> Result<(usize, f64)> {
    locate_span(times[0], times[times.len() - 1], times.len(), t)
}

/// [`locate`] for a uniform grid given by its end points and node count.
pub(crate) fn locate_span(t0: f64, t1: f64, n: usize, t: f64) -> Result<(usize, f64)> {
    let tol = 1e-9 * (t1 - t0).abs().max(1e-300);
    if !(t >= t0 - tol && t <= t1 + tol) {
        let (from, to) = if t < t0 { (t, t0) } else { (t1, t) };
        return Err(Error::Coverage { from, to });
    }
    if n == 1 {
        return Ok((0, 0.0));
    }
    let dt = (t1 - t0) / (n - 1) as f64;
    let mut u = ((t - t0) / dt).clamp(0.0, (n - 1) as f64);
    if (u - u.round()).abs() < 1e-9 {
        // snap onto a node so grid-aligned lookups return stored samples exactly
        u = u.round();
        if (u as usize) == n - 1 {
            return Ok((n - 1, 0.0));
        }
    }
    let mut i = u.floor() as usize;
    if i >= n - 1 {
        i = n - 2;
    }
    Ok((i, u - i as f64))
}

/// Cubic Hermite interpolation on `[0, h]` at fraction `tau`.
#[inline]
pub fn hermite(p0: Vec3, d0: Vec3, p1: Vec3, d1: Vec3, h: f64, tau: f64) -> Vec3 {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + tau;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    p0 * h00 + d0 * (h10 * h) + p1 * h01 + d1 * (h11 * h)
}

/// Four-point cubic Lagrange weights for a uniform grid, evaluated at
/// fractional offset `u` from the second node.
#[inline]
fn lagrange4(u: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    let a = u + 1.0;
    let b = u;
    let c = u - 1.0;
    let d = u - 2.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// Cubic interpolation of a uniformly sampled series (vector-valued via `get`).
pub(crate) fn cubic_uniform<T, F>(times: &[f64], t: f64, get: F) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    F: Fn(usize) -> T,
{
    let n = times.len();
    let (i, u) = locate(times, t)?;
    if n == 1 || u == 0.0 {
        return Ok(get(i));
    }
    if n < 4 {
        // linear fallback on very short series
        return Ok(get(i) * (1.0 - u) + get(i + 1) * u);
    }
    // choose the 4-node window [j-1, j+2] containing the interval
    let j = i.clamp(1, n - 3);
    let offset = u + i as f64 - j as f64;
    let w = lagrange4(offset);
    Ok(get(j - 1) * w[0] + get(j) * w[1] + get(j + 1) * w[2] + get(j + 2) * w[3])
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Running trapezoid integral; `out[k] = ∫_{t0}^{t_k}`.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * dt * (values[k - 1] + v);
        }
        out.push(acc);
    }
    out
}
