//! Vector-calculus identities used by the first-order expansion, as residuals.
//!
//! Each function evaluates both sides from a [`FieldSample`] along separate
//! routes and returns the norm of the difference. For the analytic models they
//! are pure rounding; with finite-difference Jacobians they bound the
//! consistency of the derived geometry.

use crate::error::Result;
use crate::field_models::{eval_field, eval_field_fd, sample_unit_ball, FieldModel, FieldSample, ResidualStats, FD_STEP};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use crate::vec3::Vec3;

/// Seed used by the identity sweeps unless overridden.
pub const DEFAULT_SEED: u64 = 42;

/// `|(Db·(v×b))×(v×b) − [(b·v)(v·curl b) − |v|²(b·curl b) − (∇_v b)·(v×b)] b|`
/// for a unit field `b` with chain-rule Jacobian `Db`.
pub fn lemma_residual(sample: &FieldSample, v: Vec3) -> f64 {
    let b = sample.unit;
    let db = sample.unit_jacobian();
    let w = v.cross(b);
    let lhs = db.mul_vec(w).cross(w);

    let curl_b = sample.curl_unit;
    let grad_v_b = db.mul_vec(v);
    let coeff = b.dot(v) * v.dot(curl_b) - v.norm_sq() * b.dot(curl_b) - grad_v_b.dot(w);
    (lhs - b * coeff).norm()
}

/// `|∇(|B|²/2) − ∇_B B − B × curl B|` with `∇(|B|²/2) = Jᵀ B` and `∇_B B = J B`.
pub fn grad_b2_residual(sample: &FieldSample) -> f64 {
    let bf = sample.field;
    let j = &sample.jacobian;
    (j.tr_mul_vec(bf) - j.mul_vec(bf) - bf.cross(sample.curl_field)).norm()
}

/// `|κ + b × curl b|`, i.e. `0 = ∇_b b + b × curl b` for a unit field.
pub fn unit_field_residual(sample: &FieldSample) -> f64 {
    (sample.curvature + sample.unit.cross(sample.curl_unit)).norm()
}

/// Which identity to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identity {
    Lemma,
    GradB2,
    UnitField,
}

impl Identity {
    pub const ALL: [Identity; 3] = [Identity::Lemma, Identity::GradB2, Identity::UnitField];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Lemma => "lemma",
            Identity::GradB2 => "gradB2",
            Identity::UnitField => "unit_field",
        }
    }
}

/// Residual statistics of one identity at `n` seeded points (and velocities in the unit ball).
///
/// With `finite_difference` the sample Jacobians come from central differences at [`FD_STEP`].
pub fn identity_sweep(
    model: &dyn FieldModel,
    identity: Identity,
    n: usize,
    seed: u64,
    finite_difference: bool,
) -> Result<ResidualStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = model.domain();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let x = domain.sample_interior(&mut rng, FD_STEP);
        let v = sample_unit_ball(&mut rng);
        let sample = if finite_difference {
            eval_field_fd(model, x, FD_STEP)?
        } else {
            eval_field(model, x)?
        };
        values.push(match identity {
            Identity::Lemma => lemma_residual(&sample, v),
            Identity::GradB2 => grad_b2_residual(&sample),
            Identity::UnitField => unit_field_residual(&sample),
        });
    }
    Ok(ResidualStats::from_values(&values, seed))
}
