use super::{Domain, FieldModel};
use crate::error::{Error, Result};
use crate::vec3::{Mat3, Vec3};
use std::collections::BTreeMap;

/// Flat parameter table for a built-in model (`B0`, `L`, `R0`, ...).
pub type ModelParams = BTreeMap<String, f64>;

/// `B = (0, 0, B0)`, optionally carrying a constant pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniform {
    pub b0: f64,
    pub pressure: Option<f64>,
}

impl FieldModel for Uniform {
    fn name(&self) -> &str {
        "uniform"
    }
    fn domain(&self) -> Domain {
        Domain::Box {
            min: Vec3::new(-100.0, -100.0, -100.0),
            max: Vec3::new(100.0, 100.0, 100.0),
        }
    }
    fn field_and_jacobian(&self, _x: Vec3) -> (Vec3, Mat3) {
        (Vec3::new(0.0, 0.0, self.b0), Mat3::ZERO)
    }
    fn field(&self, _x: Vec3) -> Vec3 {
        Vec3::new(0.0, 0.0, self.b0)
    }
    fn pressure(&self, _x: Vec3) -> Option<(f64, Vec3)> {
        self.pressure.map(|p| (p, Vec3::ZERO))
    }
    fn has_pressure(&self) -> bool {
        self.pressure.is_some()
    }
}

/// `B = (0, 0, B0 (1 + x/L))`: straight field lines with a transverse gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabGradB {
    pub b0: f64,
    pub l: f64,
}

impl FieldModel for SlabGradB {
    fn name(&self) -> &str {
        "slab_gradB"
    }
    fn domain(&self) -> Domain {
        let l = self.l;
        Domain::Box {
            min: Vec3::new(-0.45 * l, -50.0 * l, -50.0 * l),
            max: Vec3::new(2.0 * l, 50.0 * l, 50.0 * l),
        }
    }
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        let mut j = Mat3::ZERO;
        j.0[2][0] = self.b0 / self.l;
        (self.field(x), j)
    }
    fn field(&self, x: Vec3) -> Vec3 {
        Vec3::new(0.0, 0.0, self.b0 * (1.0 + x.x / self.l))
    }
}

/// Vacuum toroidal field `B = (B0 R0 / R) e_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Toroidal {
    pub b0: f64,
    pub r0: f64,
}

impl FieldModel for Toroidal {
    fn name(&self) -> &str {
        "toroidal"
    }
    fn domain(&self) -> Domain {
        Domain::Shell {
            r_min: 0.5 * self.r0,
            r_max: 2.0 * self.r0,
            z_min: -2.0 * self.r0,
            z_max: 2.0 * self.r0,
        }
    }
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        let c = self.b0 * self.r0;
        let s = x.x * x.x + x.y * x.y;
        let s2 = s * s;
        let dxy = c * 2.0 * x.x * x.y / s2;
        let dmix = c * (x.y * x.y - x.x * x.x) / s2;
        let j = Mat3([[dxy, dmix, 0.0], [dmix, -dxy, 0.0], [0.0, 0.0, 0.0]]);
        (self.field(x), j)
    }
    fn field(&self, x: Vec3) -> Vec3 {
        let c = self.b0 * self.r0;
        let s = x.x * x.x + x.y * x.y;
        Vec3::new(-c * x.y / s, c * x.x / s, 0.0)
    }
}

/// Axisymmetric mirror `B_z = B0 (1 + z²/L²)`, `B_r = −r z B0 / L²`, valid near the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirror {
    pub b0: f64,
    pub l: f64,
}

impl FieldModel for Mirror {
    fn name(&self) -> &str {
        "mirror"
    }
    fn domain(&self) -> Domain {
        Domain::Shell {
            r_min: 0.0,
            r_max: 0.05 * self.l,
            z_min: -2.0 * self.l,
            z_max: 2.0 * self.l,
        }
    }
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        let k = self.b0 / (self.l * self.l);
        let j = Mat3([
            [-k * x.z, 0.0, -k * x.x],
            [0.0, -k * x.z, -k * x.y],
            [0.0, 0.0, 2.0 * k * x.z],
        ]);
        (self.field(x), j)
    }
    fn field(&self, x: Vec3) -> Vec3 {
        let k = self.b0 / (self.l * self.l);
        Vec3::new(-k * x.x * x.z, -k * x.y * x.z, self.b0 + k * x.z * x.z)
    }
}

/// Screw pinch with `B_z = B0` and `B_θ = k r / (1 + r²/a²)`.
///
/// The pressure `p = p0 + B_θ²/2 + (k²a²/2)(1 − 1/(1 + r²/a²))` satisfies
/// `B × curl B = ∇p` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScrewPinch {
    pub b0: f64,
    pub k: f64,
    pub a: f64,
    pub p0: f64,
}

impl ScrewPinch {
    // B_θ / r as a function of s = r²
    fn g(&self, s: f64) -> (f64, f64) {
        let d = 1.0 + s / (self.a * self.a);
        let g = self.k / d;
        let dg = -self.k / (self.a * self.a * d * d);
        (g, dg)
    }
}

impl FieldModel for ScrewPinch {
    fn name(&self) -> &str {
        "screw_pinch"
    }
    fn domain(&self) -> Domain {
        Domain::Shell {
            r_min: 0.0,
            r_max: self.a,
            z_min: -20.0 * self.a,
            z_max: 20.0 * self.a,
        }
    }
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        let s = x.x * x.x + x.y * x.y;
        let (g, dg) = self.g(s);
        let j = Mat3([
            [-2.0 * x.x * x.y * dg, -g - 2.0 * x.y * x.y * dg, 0.0],
            [g + 2.0 * x.x * x.x * dg, 2.0 * x.x * x.y * dg, 0.0],
            [0.0, 0.0, 0.0],
        ]);
        (Vec3::new(-g * x.y, g * x.x, self.b0), j)
    }
    fn field(&self, x: Vec3) -> Vec3 {
        let (g, _) = self.g(x.x * x.x + x.y * x.y);
        Vec3::new(-g * x.y, g * x.x, self.b0)
    }
    fn pressure(&self, x: Vec3) -> Option<(f64, Vec3)> {
        let s = x.x * x.x + x.y * x.y;
        let (g, dg) = self.g(s);
        let ka = self.k * self.a;
        let d = 1.0 + s / (self.a * self.a);
        let p = self.p0 + 0.5 * g * g * s + 0.5 * ka * ka * (1.0 - 1.0 / d);
        // dp/ds = g g' s + g²
        let dp_ds = g * dg * s + g * g;
        Some((p, Vec3::new(2.0 * x.x * dp_ds, 2.0 * x.y * dp_ds, 0.0)))
    }
    fn has_pressure(&self) -> bool {
        true
    }
}

/// Solov'ev equilibrium with flux `ψ = α R²Z² + β (R² − R0²)²`.
///
/// `B = ∇ψ × ∇φ + B0 R0 ∇φ`, `p = p0 + (8β + 2α) ψ`. Flux surfaces are
/// nested about the magnetic axis `(R0, 0)` and closed for `ψ < β R0⁴`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solovev {
    pub b0: f64,
    pub r0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p0: f64,
}

impl Solovev {
    pub fn flux(&self, x: Vec3) -> f64 {
        let s = x.x * x.x + x.y * x.y;
        let q = s - self.r0 * self.r0;
        self.alpha * s * x.z * x.z + self.beta * q * q
    }
}

impl FieldModel for Solovev {
    fn name(&self) -> &str {
        "solovev"
    }
    fn domain(&self) -> Domain {
        Domain::Shell {
            r_min: 0.6 * self.r0,
            r_max: 1.4 * self.r0,
            z_min: -0.6 * self.r0,
            z_max: 0.6 * self.r0,
        }
    }
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        let (a, c) = (self.alpha, self.beta);
        let f0 = self.b0 * self.r0;
        let s = x.x * x.x + x.y * x.y;
        let s2 = s * s;
        let tor_xy = f0 * 2.0 * x.x * x.y / s2;
        let tor_mix = f0 * (x.y * x.y - x.x * x.x) / s2;
        let j = Mat3([
            [-2.0 * a * x.z + tor_xy, tor_mix, -2.0 * a * x.x],
            [tor_mix, -2.0 * a * x.z - tor_xy, -2.0 * a * x.y],
            [8.0 * c * x.x, 8.0 * c * x.y, 4.0 * a * x.z],
        ]);
        (self.field(x), j)
    }
    fn field(&self, x: Vec3) -> Vec3 {
        let (a, c) = (self.alpha, self.beta);
        let f0 = self.b0 * self.r0;
        let s = x.x * x.x + x.y * x.y;
        Vec3::new(
            -2.0 * a * x.z * x.x - f0 * x.y / s,
            -2.0 * a * x.z * x.y + f0 * x.x / s,
            2.0 * a * x.z * x.z + 4.0 * c * (s - self.r0 * self.r0),
        )
    }
    fn pressure(&self, x: Vec3) -> Option<(f64, Vec3)> {
        let (a, c) = (self.alpha, self.beta);
        let k = 8.0 * c + 2.0 * a;
        let s = x.x * x.x + x.y * x.y;
        let radial = 2.0 * (a * x.z * x.z + 2.0 * c * (s - self.r0 * self.r0));
        let grad_flux = Vec3::new(x.x * radial, x.y * radial, 2.0 * a * s * x.z);
        Some((self.p0 + k * self.flux(x), grad_flux * k))
    }
    fn has_pressure(&self) -> bool {
        true
    }
}

/// The six built-in models behind one configurable type.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel {
    Uniform(Uniform),
    SlabGradB(SlabGradB),
    Toroidal(Toroidal),
    Mirror(Mirror),
    ScrewPinch(ScrewPinch),
    Solovev(Solovev),
}

impl BuiltinModel {
    pub const NAMES: [&'static str; 6] = [
        "uniform",
        "slab_gradB",
        "toroidal",
        "mirror",
        "screw_pinch",
        "solovev",
    ];

    /// Parameter names and defaults accepted by a model.
    pub fn defaults(name: &str) -> Result<ModelParams> {
        let pairs: &[(&str, f64)] = match name {
            "uniform" => &[("B0", 1.0)],
            "slab_gradB" => &[("B0", 1.0), ("L", 1.0)],
            "toroidal" => &[("B0", 1.0), ("R0", 1.0)],
            "mirror" => &[("B0", 1.0), ("L", 1.0)],
            "screw_pinch" => &[("B0", 1.0), ("k", 0.5), ("a", 1.0), ("p0", 0.1)],
            "solovev" => &[
                ("B0", 1.0),
                ("R0", 1.0),
                ("alpha", 0.2),
                ("beta", 0.1),
                ("p0", 0.1),
            ],
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    /// Optional parameters that have no default (currently only the uniform pressure `p`).
    fn optional(name: &str) -> &'static [&'static str] {
        match name {
            "uniform" => &["p"],
            _ => &[],
        }
    }

    pub fn accepts(name: &str, key: &str) -> bool {
        Self::defaults(name).map(|d| d.contains_key(key)).unwrap_or(false)
            || Self::optional(name).contains(&key)
    }

    /// Builds a model from a name and a (possibly partial) parameter table.
    ///
    /// Unknown parameters are rejected, all of them named in the error.
    pub fn from_params(name: &str, params: &ModelParams) -> Result<Self> {
        let mut merged = Self::defaults(name)?;
        let unknown: Vec<&str> = params
            .keys()
            .filter(|k| !Self::accepts(name, k))
            .map(|k| k.as_str())
            .collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "unknown parameter(s) for model `{name}`: {}",
                unknown.join(", ")
            )));
        }
        for (k, v) in params {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("parameter `{k}` must be finite")));
            }
            merged.insert(k.clone(), *v);
        }
        let get = |k: &str| merged[k];
        let positive = |k: &str| -> Result<f64> {
            let v = merged[k];
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::InvalidArgument(format!("parameter `{k}` must be > 0, got {v}")))
            }
        };
        Ok(match name {
            "uniform" => BuiltinModel::Uniform(Uniform {
                b0: positive("B0")?,
                pressure: merged.get("p").copied(),
            }),
            "slab_gradB" => BuiltinModel::SlabGradB(SlabGradB {
                b0: positive("B0")?,
                l: positive("L")?,
            }),
            "toroidal" => BuiltinModel::Toroidal(Toroidal {
                b0: positive("B0")?,
                r0: positive("R0")?,
            }),
            "mirror" => BuiltinModel::Mirror(Mirror {
                b0: positive("B0")?,
                l: positive("L")?,
            }),
            "screw_pinch" => BuiltinModel::ScrewPinch(ScrewPinch {
                b0: positive("B0")?,
                k: get("k"),
                a: positive("a")?,
                p0: get("p0"),
            }),
            "solovev" => BuiltinModel::Solovev(Solovev {
                b0: positive("B0")?,
                r0: positive("R0")?,
                alpha: positive("alpha")?,
                beta: positive("beta")?,
                p0: get("p0"),
            }),
            _ => unreachable!("validated by defaults()"),
        })
    }

    /// A model with all default parameters.
    pub fn named(name: &str) -> Result<Self> {
        Self::from_params(name, &ModelParams::new())
    }

    /// All six models with default parameters.
    pub fn all() -> Vec<BuiltinModel> {
        Self::NAMES
            .iter()
            .map(|n| Self::named(n).expect("built-in defaults are valid"))
            .collect()
    }

    fn inner(&self) -> &dyn FieldModel {
        match self {
            BuiltinModel::Uniform(m) => m,
            BuiltinModel::SlabGradB(m) => m,
            BuiltinModel::Toroidal(m) => m,
            BuiltinModel::Mirror(m) => m,
            BuiltinModel::ScrewPinch(m) => m,
            BuiltinModel::Solovev(m) => m,
        }
    }
}

impl FieldModel for BuiltinModel {
    fn name(&self) -> &str {
        self.inner().name()
    }
    fn domain(&self) -> Domain {
        self.inner().domain()
    }
    #[inline]
    fn field_and_jacobian(&self, x: Vec3) -> (Vec3, Mat3) {
        self.inner().field_and_jacobian(x)
    }
    #[inline]
    fn field(&self, x: Vec3) -> Vec3 {
        self.inner().field(x)
    }
    fn pressure(&self, x: Vec3) -> Option<(f64, Vec3)> {
        self.inner().pressure(x)
    }
    fn has_pressure(&self) -> bool {
        self.inner().has_pressure()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_models::{eval_field, fd_jacobian};

    #[test]
    fn unknown_parameters_are_all_listed() {
        let mut p = ModelParams::new();
        p.insert("B0".into(), 2.0);
        p.insert("Lx".into(), 1.0);
        p.insert("zeta".into(), 1.0);
        let err = BuiltinModel::from_params("slab_gradB", &p).unwrap_err().to_string();
        assert!(err.contains("Lx") && err.contains("zeta"), "{err}");
    }

    #[test]
    fn unknown_model_is_rejected() {
        assert!(BuiltinModel::named("stellarator").is_err());
    }

    #[test]
    fn uniform_sample() {
        let m = BuiltinModel::named("uniform").unwrap();
        let s = eval_field(&m, Vec3::ZERO).unwrap();
        assert_eq!(s.unit, Vec3::Z);
        assert_eq!(s.curvature, Vec3::ZERO);
        assert_eq!(s.grad_magnitude, Vec3::ZERO);
    }

    #[test]
    fn slab_sample() {
        let m = BuiltinModel::named("slab_gradB").unwrap();
        let s = eval_field(&m, Vec3::ZERO).unwrap();
        assert_eq!(s.grad_magnitude, Vec3::X);
        assert_eq!(s.curvature, Vec3::ZERO);
        assert_eq!(s.curl_field, Vec3::new(0.0, -1.0, 0.0));
        let j = fd_jacobian(&m, Vec3::ZERO, 1e-5).unwrap();
        assert!((j.get(2, 0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn domain_violation_names_model() {
        let m = BuiltinModel::named("toroidal").unwrap();
        let err = eval_field(&m, Vec3::new(0.1, 0.0, 0.0)).unwrap_err().to_string();
        assert!(err.contains("toroidal") && err.contains("0.1"), "{err}");
    }

    #[test]
    fn solovev_surfaces_close_inside_the_domain() {
        // the flux surface through (1.2, 0, 0) stays strictly inside the shell
        let m = match BuiltinModel::named("solovev").unwrap() {
            BuiltinModel::Solovev(s) => s,
            _ => unreachable!(),
        };
        let psi = m.flux(Vec3::new(1.2, 0.0, 0.0));
        assert!(psi < m.beta * m.r0.powi(4));
        let z_top = (psi / (m.alpha * m.r0 * m.r0)).sqrt();
        let r_in = (m.r0 * m.r0 - (psi / m.beta).sqrt()).sqrt();
        let d = m.domain();
        assert!(d.contains(Vec3::new(m.r0, 0.0, z_top * 1.1)));
        assert!(d.contains(Vec3::new(r_in * 0.95, 0.0, 0.0)));
    }
}
