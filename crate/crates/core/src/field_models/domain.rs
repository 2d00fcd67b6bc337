use crate::vec3::Vec3;
use rand::Rng;
use serde::Serialize;

/// Region on which a field model guarantees a nonvanishing field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Domain {
    /// Axis-aligned box `[min, max]`.
    Box { min: Vec3, max: Vec3 },
    /// Cylindrical shell about the z-axis: `r_min ≤ √(x²+y²) ≤ r_max`, `z_min ≤ z ≤ z_max`.
    /// `r_min = 0` gives a solid cylinder.
    Shell {
        r_min: f64,
        r_max: f64,
        z_min: f64,
        z_max: f64,
    },
}

impl Domain {
    pub fn contains(&self, p: Vec3) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            Domain::Box { min, max } => {
                (min.x..=max.x).contains(&p.x)
                    && (min.y..=max.y).contains(&p.y)
                    && (min.z..=max.z).contains(&p.z)
            }
            Domain::Shell {
                r_min,
                r_max,
                z_min,
                z_max,
            } => {
                let r = p.x.hypot(p.y);
                (r_min..=r_max).contains(&r) && (z_min..=z_max).contains(&p.z)
            }
        }
    }

    /// Draws a point uniformly (by volume) from the domain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match *self {
            Domain::Box { min, max } => Vec3::new(
                rng.gen_range(min.x..=max.x),
                rng.gen_range(min.y..=max.y),
                rng.gen_range(min.z..=max.z),
            ),
            Domain::Shell {
                r_min,
                r_max,
                z_min,
                z_max,
            } => {
                let r = rng.gen_range(r_min * r_min..=r_max * r_max).sqrt();
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                Vec3::new(r * phi.cos(), r * phi.sin(), rng.gen_range(z_min..=z_max))
            }
        }
    }

    /// Draws a point whose axis-aligned stencil of half-width `margin` lies in the domain.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, margin: f64) -> Vec3 {
        loop {
            let p = self.sample(rng);
            if self.stencil_inside(p, margin) {
                return p;
            }
        }
    }

    pub(crate) fn stencil_inside(&self, p: Vec3, h: f64) -> bool {
        [Vec3::X, Vec3::Y, Vec3::Z]
            .iter()
            .all(|&e| self.contains(p + e * h) && self.contains(p - e * h))
    }
}

/// Uniform draw from the unit ball.
pub fn sample_unit_ball<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        if v.norm_sq() <= 1.0 {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shell = Domain::Shell {
            r_min: 0.5,
            r_max: 2.0,
            z_min: -1.0,
            z_max: 1.0,
        };
        for _ in 0..500 {
            assert!(shell.contains(shell.sample(&mut rng)));
        }
        assert!(!shell.contains(Vec3::new(0.1, 0.0, 0.0)));
        assert!(!shell.contains(Vec3::new(f64::NAN, 1.0, 0.0)));
    }
}
