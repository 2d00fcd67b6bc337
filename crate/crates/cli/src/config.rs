//! Flat key/value configuration: per-subcommand defaults, a TOML file or a
//! manifest, `--set` overrides and dedicated flags, merged in that order.

use crate::CliError;
use gcdrift::{BuiltinModel, Vec3};
use serde_json::{Map, Value};

pub type Table = Map<String, Value>;

/// Marker for values derived from the model preset at run time.
pub const AUTO: &str = "auto";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    Simulate,
    Gc,
    Compare,
    Sweep,
    VerifyField,
    VerifyIdentities,
    MirrorBounce,
    PressureDrift,
}

impl Sub {
    pub fn name(self) -> &'static str {
        match self {
            Sub::Simulate => "simulate",
            Sub::Gc => "gc",
            Sub::Compare => "compare",
            Sub::Sweep => "sweep",
            Sub::VerifyField => "verify-field",
            Sub::VerifyIdentities => "verify-identities",
            Sub::MirrorBounce => "mirror-bounce",
            Sub::PressureDrift => "pressure-drift",
        }
    }

    fn default_model(self) -> &'static str {
        match self {
            Sub::Simulate => "uniform",
            Sub::Gc | Sub::Sweep => "slab_gradB",
            Sub::Compare | Sub::VerifyIdentities => "toroidal",
            Sub::VerifyField | Sub::PressureDrift => "solovev",
            Sub::MirrorBounce => "mirror",
        }
    }
}

fn auto() -> Value {
    Value::String(AUTO.into())
}

fn num(x: f64) -> Value {
    serde_json::json!(x)
}

/// Subcommand keys with their defaults (model parameters excluded).
fn base_defaults(sub: Sub) -> Table {
    let mut t = Table::new();
    let mut put = |k: &str, v: Value| {
        t.insert(k.to_string(), v);
    };
    put("model", Value::String(sub.default_model().into()));
    put("seed", serde_json::json!(42));
    let orbit_keys = |put: &mut dyn FnMut(&str, Value)| {
        put("x0", auto());
        put("v0", auto());
        put("T", auto());
    };
    match sub {
        Sub::Simulate => {
            orbit_keys(&mut put);
            put("omega", num(100.0));
            put("steps_per_gyro", serde_json::json!(64));
            put("scheme", Value::String("boris".into()));
            put("dt_out", auto());
        }
        Sub::Gc => {
            orbit_keys(&mut put);
            put("omega", num(1e3));
            put("order", serde_json::json!(1));
            put("init_mode", Value::String("exact".into()));
            put("dt", auto());
            put("dt_out", auto());
        }
        Sub::Compare => {
            orbit_keys(&mut put);
            put("omega", num(1e3));
            put("steps_per_gyro", auto());
            put("scheme", Value::String("rk4".into()));
            put("order", serde_json::json!(1));
            put("init_mode", Value::String("exact".into()));
            put("dt", auto());
            put("dt_out", auto());
        }
        Sub::Sweep => {
            orbit_keys(&mut put);
            put("metric", Value::String("first_order_gc".into()));
            put("omegas", serde_json::json!(gcdrift::convergence::DEFAULT_OMEGAS));
            put("steps_per_gyro", auto());
            put("scheme", Value::String("rk4".into()));
            put("init_mode", Value::String("exact".into()));
            put("gc_steps", serde_json::json!(10_000));
            put("grid_points", serde_json::json!(2000));
        }
        Sub::VerifyField => {
            put("n_samples", serde_json::json!(1000));
            put("fd_step", num(1e-5));
            put("divergence_tol", num(1e-8));
            put("equilibrium_tol", num(1e-6));
            put("jacobian_tol", num(1e-6));
        }
        Sub::VerifyIdentities => {
            put("n_samples", serde_json::json!(1000));
            put("analytic_tol", num(1e-8));
            put("fd_tol", num(1e-5));
        }
        Sub::MirrorBounce => {
            put("x0", auto());
            put("v0", auto());
            put("omega", num(1e3));
            put("bounces", num(1.0));
            put("steps_per_gyro", serde_json::json!(800));
            put("scheme", Value::String("rk4".into()));
            put("dt_out", auto());
        }
        Sub::PressureDrift => {
            orbit_keys(&mut put);
            put("omega", num(1e3));
            put("steps_per_gyro", serde_json::json!(200));
            put("scheme", Value::String("rk4".into()));
            put("dt", auto());
            put("dt_out", auto());
        }
    }
    t
}

/// Defaults for `sub` with `model`'s parameters merged in at top level.
pub fn defaults(sub: Sub, model: &str) -> Result<Table, CliError> {
    let mut t = base_defaults(sub);
    t.insert("model".into(), Value::String(model.into()));
    let params = BuiltinModel::defaults(model).map_err(|e| CliError::Config(e.to_string()))?;
    for (k, v) in params {
        t.insert(k, num(v));
    }
    Ok(t)
}

/// Reads a TOML config file into a flat table.
pub fn read_toml(path: &std::path::Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config file `{}`: {e}", path.display())))?;
    let parsed: toml::Table = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse config file `{}`: {e}", path.display())))?;
    to_table(parsed, &format!("config file `{}`", path.display()))
}

fn to_table(parsed: toml::Table, origin: &str) -> Result<Table, CliError> {
    let value = serde_json::to_value(parsed).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    match value {
        Value::Object(m) => {
            if let Some((k, _)) = m.iter().find(|(_, v)| v.is_object()) {
                return Err(CliError::Config(format!(
                    "{origin}: key `{k}` is a table; the configuration is flat"
                )));
            }
            Ok(m)
        }
        _ => unreachable!("a TOML document is a table"),
    }
}

/// Parses `key=value`; the value is read as a TOML value, falling back to a bare string.
pub fn parse_set(item: &str) -> Result<(String, Value), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!("--set expects key=value, got `{item}`")));
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key"))
            .map_err(|e| CliError::Usage(format!("--set {key}: {e}")))?,
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

/// Merges `layers` over the defaults of `sub`, rejecting unknown keys.
///
/// The model is taken from the last layer that names one, else the
/// subcommand's default.
pub fn resolve(sub: Sub, layers: &[(&str, Table)]) -> Result<Table, CliError> {
    let model = layers
        .iter()
        .rev()
        .find_map(|(_, t)| t.get("model"))
        .map(|v| match v {
            Value::String(s) => Ok(s.clone()),
            other => Err(CliError::Config(format!("`model` must be a string, got {other}"))),
        })
        .transpose()?
        .unwrap_or_else(|| sub.default_model().to_string());
    let mut table = defaults(sub, &model)?;

    let mut unknown = Vec::new();
    for (origin, layer) in layers {
        for key in layer.keys() {
            if !table.contains_key(key) && !BuiltinModel::accepts(&model, key) {
                unknown.push(format!("`{key}` ({origin})"));
            }
        }
    }
    if !unknown.is_empty() {
        return Err(CliError::Config(format!(
            "unknown configuration keys for `{}` with model `{model}`: {}",
            sub.name(),
            unknown.join(", ")
        )));
    }
    for (_, layer) in layers {
        for (k, v) in layer {
            table.insert(k.clone(), v.clone());
        }
    }
    Ok(table)
}

/// Typed access to a resolved table.
pub struct Cfg<'a>(pub &'a Table);

impl Cfg<'_> {
    fn raw(&self, key: &str) -> &Value {
        self.0.get(key).unwrap_or(&Value::Null)
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        CliError::Config(format!("`{key}` must be {want}, got {}", self.raw(key)))
    }

    pub fn is_auto(&self, key: &str) -> bool {
        matches!(self.raw(key), Value::String(s) if s == AUTO)
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key).as_f64().ok_or_else(|| self.bad(key, "a number"))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.is_auto(key) {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.raw(key).as_u64().ok_or_else(|| self.bad(key, "a non-negative integer"))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        Ok(self.u64(key)? as usize)
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        if self.is_auto(key) {
            Ok(None)
        } else {
            self.usize(key).map(Some)
        }
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).as_str().ok_or_else(|| self.bad(key, "a string"))
    }

    pub fn parse<T: std::str::FromStr<Err = gcdrift::Error>>(&self, key: &str) -> Result<T, CliError> {
        self.str(key)?.parse().map_err(|e: gcdrift::Error| CliError::Config(format!("`{key}`: {e}")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let arr = self.raw(key).as_array().ok_or_else(|| self.bad(key, "an array of numbers"))?;
        arr.iter()
            .map(|v| v.as_f64().ok_or_else(|| self.bad(key, "an array of numbers")))
            .collect()
    }

    pub fn opt_vec3(&self, key: &str) -> Result<Option<Vec3>, CliError> {
        if self.is_auto(key) {
            return Ok(None);
        }
        let v = self.list(key).map_err(|_| self.bad(key, "an array of 3 numbers"))?;
        if v.len() != 3 {
            return Err(self.bad(key, "an array of 3 numbers"));
        }
        Ok(Some(Vec3::new(v[0], v[1], v[2])))
    }

    /// The built-in model named by `model`, with its parameters from the table.
    pub fn model(&self) -> Result<BuiltinModel, CliError> {
        let name = self.str("model")?;
        let mut params = gcdrift::ModelParams::new();
        for key in self.0.keys().filter(|k| BuiltinModel::accepts(name, k)) {
            params.insert(key.clone(), self.f64(key)?);
        }
        BuiltinModel::from_params(name, &params).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Replaces an `auto` entry with its resolved value.
pub fn settle(table: &mut Table, key: &str, value: Value) {
    if matches!(table.get(key), Some(Value::String(s)) if s == AUTO) {
        table.insert(key.to_string(), value);
    }
}

pub fn vec3_value(v: Vec3) -> Value {
    serde_json::json!([v.x, v.y, v.z])
}
