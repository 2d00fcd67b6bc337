//! Analytic magnetic field models and the local field geometry derived from them.
//!
//! Every model supplies a closed-form field `B` and its Jacobian `DB`
//! (entry (i, j) = ∂B_i/∂x_j). Everything else a particle pusher or a
//! guiding-centre integrator needs (unit field, ∇|B|, curls, curvature) is
//! derived from that pair by [`derive_geometry`], so analytic and
//! finite-difference Jacobians go through the same code path.

mod builtin;
mod checks;
mod domain;

pub use builtin::{BuiltinModel, Mirror, ModelParams, ScrewPinch, SlabGradB, Solovev, Toroidal, Uniform};
pub use checks::{check_divergence, check_equilibrium, check_jacobian, fd_jacobian, ResidualStats};
pub use domain::{sample_unit_ball, Domain};

use crate::error::{Error, Result};
use crate::vec3::{Mat3, Vec3};

/// Field magnitudes below this are treated as singular.
pub const SINGULAR_FIELD: f64 = 1e-12;

/// Default central-difference step for Jacobian oracles.
pub const FD_STEP: f64 = 1e-5;

/// A static, divergence-free magnetic field with closed-form derivatives.
///
/// Implementations are immutable and shared freely across threads.
pub trait FieldModel: Send + Sync {
    fn name(&self) -> &str;

    fn domain(&self) -> Domain;

    /// Field and Jacobian at `x`; no domain check.
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3);

    /// Field only; no domain check.
    fn field(&self, x: Vec3) -> Vec3 {
        self.field_and_jacobian(x).0
    }

    /// Pressure and its gradient for equilibrium models.
    fn pressure(&self, _x: Vec3) -> Option<(f64, Vec3)> {
        None
    }

    fn has_pressure(&self) -> bool {
        false
    }

    /// Domain check producing the error the rest of the crate propagates.
    fn check_domain(&self, x: Vec3) -> Result<()> {
        if self.domain().contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                model: self.name().to_string(),
                point: x,
            })
        }
    }
}

/// Quantities derived from `(B, DB)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub unit: Vec3,
    pub magnitude: f64,
    pub grad_magnitude: Vec3,
    pub curl_field: Vec3,
    pub curl_unit: Vec3,
    pub curvature: Vec3,
}

/// Field value plus all local geometry at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub field: Vec3,
    pub magnitude: f64,
    pub unit: Vec3,
    pub jacobian: Mat3,
    pub grad_magnitude: Vec3,
    pub curl_field: Vec3,
    pub curl_unit: Vec3,
    pub curvature: Vec3,
    pub pressure: Option<f64>,
    pub grad_pressure: Option<Vec3>,
}

impl FieldSample {
    /// Builds a sample from a field value and a Jacobian (analytic or finite-difference).
    pub fn from_parts(field: Vec3, jacobian: Mat3, pressure: Option<(f64, Vec3)>) -> Result<Self> {
        let g = derive_geometry(field, jacobian)?;
        Ok(FieldSample {
            field,
            magnitude: g.magnitude,
            unit: g.unit,
            jacobian,
            grad_magnitude: g.grad_magnitude,
            curl_field: g.curl_field,
            curl_unit: g.curl_unit,
            curvature: g.curvature,
            pressure: pressure.map(|p| p.0),
            grad_pressure: pressure.map(|p| p.1),
        })
    }

    /// Jacobian of the unit field, `∂_j b_i = (∂_j B_i − b_i ∂_j|B|) / |B|`.
    pub fn unit_jacobian(&self) -> Mat3 {
        unit_jacobian(self.unit, self.magnitude, self.jacobian, self.grad_magnitude)
    }
}

fn unit_jacobian(unit: Vec3, magnitude: f64, jacobian: Mat3, grad_magnitude: Vec3) -> Mat3 {
    (jacobian - unit.outer(grad_magnitude)) * (1.0 / magnitude)
}

/// `curl` from the antisymmetric part of a Jacobian.
pub fn curl_of(j: &Mat3) -> Vec3 {
    Vec3::new(
        j.get(2, 1) - j.get(1, 2),
        j.get(0, 2) - j.get(2, 0),
        j.get(1, 0) - j.get(0, 1),
    )
}

/// Derives unit field, `|B|`, `∇|B|`, `curl B`, `curl b` and the curvature `κ = ∇_b b`.
///
/// `curl b = curl B/|B| + ∇(|B|⁻¹) × B`; `κ` is taken from the chain-rule
/// Jacobian of `b` applied to `b` and coincides with `curl b × b`.
pub fn derive_geometry(field: Vec3, jacobian: Mat3) -> Result<Geometry> {
    let magnitude = field.norm();
    if !(magnitude >= SINGULAR_FIELD) {
        return Err(Error::SingularField {
            model: "<field>".into(),
            magnitude,
        });
    }
    let unit = field / magnitude;
    let grad_magnitude = jacobian.tr_mul_vec(unit);
    let curl_field = curl_of(&jacobian);
    // ∇(1/|B|) = −∇|B| / |B|²
    let grad_inv = grad_magnitude * (-1.0 / (magnitude * magnitude));
    let curl_unit = curl_field / magnitude + grad_inv.cross(field);
    let db = unit_jacobian(unit, magnitude, jacobian, grad_magnitude);
    let curvature = db.mul_vec(unit);
    Ok(Geometry {
        unit,
        magnitude,
        grad_magnitude,
        curl_field,
        curl_unit,
        curvature,
    })
}

/// Evaluates a model at `x` and derives the full local geometry.
pub fn eval_field(model: &dyn FieldModel, x: Vec3) -> Result<FieldSample> {
    model.check_domain(x)?;
    let (b, j) = model.field_and_jacobian(x);
    FieldSample::from_parts(b, j, model.pressure(x)).map_err(|e| name_singular(e, model))
}

/// Same as [`eval_field`] but with the Jacobian replaced by central differences.
pub fn eval_field_fd(model: &dyn FieldModel, x: Vec3, step: f64) -> Result<FieldSample> {
    model.check_domain(x)?;
    let j = fd_jacobian(model, x, step)?;
    FieldSample::from_parts(model.field(x), j, model.pressure(x)).map_err(|e| name_singular(e, model))
}

fn name_singular(e: Error, model: &dyn FieldModel) -> Error {
    match e {
        Error::SingularField { magnitude, .. } => Error::SingularField {
            model: model.name().to_string(),
            magnitude,
        },
        other => other,
    }
}

/// Field value and magnitude only, with a domain check. Used in inner loops.
#[inline]
pub(crate) fn field_checked(model: &dyn FieldModel, x: Vec3) -> Result<Vec3> {
    model.check_domain(x)?;
    let b = model.field(x);
    let m = b.norm();
    if !(m >= SINGULAR_FIELD) {
        return Err(Error::SingularField {
            model: model.name().to_string(),
            magnitude: m,
        });
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn constant_field_has_no_geometry() {
        let g = derive_geometry(Vec3::Z, Mat3::ZERO).unwrap();
        assert_eq!(g.unit, Vec3::Z);
        assert_eq!(g.magnitude, 1.0);
        assert_eq!(g.grad_magnitude, Vec3::ZERO);
        assert_eq!(g.curl_field, Vec3::ZERO);
        assert_eq!(g.curl_unit, Vec3::ZERO);
        assert_eq!(g.curvature, Vec3::ZERO);
    }

    #[test]
    fn zero_field_is_singular() {
        assert!(matches!(
            derive_geometry(Vec3::ZERO, Mat3::ZERO),
            Err(Error::SingularField { .. })
        ));
        assert!(derive_geometry(Vec3::new(f64::NAN, 0.0, 0.0), Mat3::ZERO).is_err());
    }

    #[test]
    fn slab_curl_and_gradient() {
        // B = (0, 0, 1 + x)
        let mut j = Mat3::ZERO;
        j.0[2][0] = 1.0;
        let g = derive_geometry(Vec3::Z, j).unwrap();
        assert!(close(g.curl_field, Vec3::new(0.0, -1.0, 0.0), 1e-15));
        assert!(close(g.grad_magnitude, Vec3::X, 1e-15));
        assert!(close(g.curvature, Vec3::ZERO, 1e-15));
    }

    #[test]
    fn curvature_matches_curl_cross_unit() {
        // a generic non-symmetric Jacobian: the relation is algebraic in (B, J)
        let b = Vec3::new(0.3, -0.7, 1.1);
        let j = Mat3([[0.2, -0.4, 0.9], [1.3, 0.5, -0.2], [-0.6, 0.8, -0.7]]);
        let g = derive_geometry(b, j).unwrap();
        assert!(close(g.curvature, g.curl_unit.cross(g.unit), 1e-14));
        assert!(g.curvature.dot(g.unit).abs() < 1e-15);
    }
}
