use super::{eval_field, FieldModel};
use crate::error::{Error, Result};
use crate::vec3::{Mat3, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Max / mean of a residual over seeded sample points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub n: usize,
    pub seed: u64,
}

impl ResidualStats {
    pub fn from_values(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let max = values.iter().copied().fold(0.0_f64, f64::max);
        let mean = if n == 0 { 0.0 } else { values.iter().sum::<f64>() / n as f64 };
        ResidualStats { max, mean, n, seed }
    }
}

/// Central-difference Jacobian of `B`; column j is `(B(x + h e_j) − B(x − h e_j)) / 2h`.
pub fn fd_jacobian(model: &dyn FieldModel, x: Vec3, step: f64) -> Result<Mat3> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {step}")));
    }
    let mut cols = [Vec3::ZERO; 3];
    for (j, e) in [Vec3::X, Vec3::Y, Vec3::Z].into_iter().enumerate() {
        let xp = x + e * step;
        let xm = x - e * step;
        model.check_domain(xp)?;
        model.check_domain(xm)?;
        cols[j] = (model.field(xp) - model.field(xm)) / (2.0 * step);
    }
    Ok(Mat3::from_columns(cols[0], cols[1], cols[2]))
}

fn sample_points(model: &dyn FieldModel, n: usize, seed: u64, margin: f64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = model.domain();
    (0..n).map(|_| domain.sample_interior(&mut rng, margin)).collect()
}

fn require_samples(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("n_samples must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// `|trace DB|` of the analytic Jacobian at `n` seeded points.
pub fn check_divergence(model: &dyn FieldModel, n: usize, seed: u64) -> Result<ResidualStats> {
    require_samples(n)?;
    let values: Vec<f64> = sample_points(model, n, seed, 0.0)
        .into_iter()
        .map(|x| model.field_and_jacobian(x).1.trace().abs())
        .collect();
    Ok(ResidualStats::from_values(&values, seed))
}

/// `|B × curl B − ∇p| / max(|∇p|, 1)` at `n` seeded points.
pub fn check_equilibrium(model: &dyn FieldModel, n: usize, seed: u64) -> Result<ResidualStats> {
    require_samples(n)?;
    if !model.has_pressure() {
        return Err(Error::Unsupported {
            model: model.name().to_string(),
            what: "pressure (force-balance check)",
        });
    }
    let mut values = Vec::with_capacity(n);
    for x in sample_points(model, n, seed, 0.0) {
        let s = eval_field(model, x)?;
        let grad_p = s.grad_pressure.expect("pressure model");
        let lhs = s.field.cross(s.curl_field);
        values.push((lhs - grad_p).norm() / grad_p.norm().max(1.0));
    }
    Ok(ResidualStats::from_values(&values, seed))
}

/// Relative disagreement `max|J_fd − J| / max(max|J|, 1)` between analytic
/// and central-difference Jacobians at `n` seeded points.
pub fn check_jacobian(model: &dyn FieldModel, n: usize, seed: u64, step: f64) -> Result<ResidualStats> {
    require_samples(n)?;
    let mut values = Vec::with_capacity(n);
    for x in sample_points(model, n, seed, step) {
        let exact = model.field_and_jacobian(x).1;
        let approx = fd_jacobian(model, x, step)?;
        values.push((approx - exact).max_abs() / exact.max_abs().max(1.0));
    }
    Ok(ResidualStats::from_values(&values, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_models::BuiltinModel;

    #[test]
    fn uniform_fd_is_zero() {
        let m = BuiltinModel::named("uniform").unwrap();
        assert!(fd_jacobian(&m, Vec3::new(0.3, -2.0, 1.0), 1e-5).unwrap().max_abs() < 1e-12);
        assert_eq!(check_divergence(&m, 10, 42).unwrap().max, 0.0);
    }

    #[test]
    fn equilibrium_needs_pressure() {
        let m = BuiltinModel::named("toroidal").unwrap();
        assert!(matches!(check_equilibrium(&m, 3, 1), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn stencil_outside_domain_is_an_error() {
        let m = BuiltinModel::named("toroidal").unwrap();
        // R = 0.5 exactly: the inner stencil point leaves the shell
        assert!(matches!(
            fd_jacobian(&m, Vec3::new(0.5, 0.0, 0.0), 1e-5),
            Err(Error::Domain { .. })
        ));
        assert!(fd_jacobian(&m, Vec3::new(1.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn degenerate_uniform_equilibrium() {
        let mut p = crate::field_models::ModelParams::new();
        p.insert("p".into(), 1.0);
        let m = BuiltinModel::from_params("uniform", &p).unwrap();
        assert_eq!(check_equilibrium(&m, 50, 42).unwrap().max, 0.0);
    }

    #[test]
    fn checks_are_deterministic() {
        let m = BuiltinModel::named("solovev").unwrap();
        let a = check_jacobian(&m, 20, 9, 1e-5).unwrap();
        let b = check_jacobian(&m, 20, 9, 1e-5).unwrap();
        assert_eq!(a, b);
    }
}
