//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Every angle (`arg_a`,
//! `arg_b`, `eta`, `theta`, `z_arg`, `alpha`, `beta`) is given in units of 2π,
//! and fields are written as `Φ/2π`: `1/5`, `golden`, `0.3183`, `liouville`
//! or `liouville:2,4,512`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use ewalk_core::numtheory::{Field, LiouvilleSchedule};
use ewalk_core::{Coin64, StateVector64, WalkError, WalkSpec64};
use num_complex::Complex;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("invalid walk: {0}")]
    Walk(#[from] WalkError),
}

type Res<T> = std::result::Result<T, ConfigError>;

/// Every accepted key with its default.
const KEYS: &[(&str, &str)] = &[
    ("coin", "hadamard"),
    ("abs_a", ""),
    ("abs_b", ""),
    ("arg_a", "0"),
    ("arg_b", "0"),
    ("eta", "0"),
    ("field", "golden"),
    ("fields", "1/5, golden, liouville"),
    ("theta", "0"),
    ("n", "2000"),
    ("n_list", "250, 500, 1000, 2000"),
    ("samples", "200"),
    ("z_samples", "8"),
    ("z_abs", "1"),
    ("z_arg", "0"),
    ("steps", "1000"),
    ("record_ratio", "1.2"),
    ("index_cap", "200000"),
    ("cell", "0"),
    ("spin", "0"),
    ("cells", "400"),
    ("start", "0"),
    ("alpha", "0"),
    ("beta", "0"),
    ("slack", ""),
    ("tol", "0.02"),
    ("depth", "20"),
    ("dioph_c", "0.1"),
    ("dioph_a", "2"),
    ("kmax", "10000"),
    ("trials", "5"),
    ("bins", "20"),
];

/// Raw key/value pairs after defaults and overrides.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
    explicit: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Res<Self> {
        let mut explicit = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            let k = k.trim().to_string();
            if explicit.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(k));
            }
        }
        Self::from_map(explicit)
    }

    pub fn load(path: &Path) -> Res<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    fn from_map(explicit: BTreeMap<String, String>) -> Res<Self> {
        if let Some(k) = explicit.keys().find(|k| !KEYS.iter().any(|(name, _)| name == k)) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        let mut values: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values.extend(explicit.clone());
        Ok(ExperimentConfig { values, explicit })
    }

    /// Applies a `key=value` override on top of the file.
    pub fn set(&mut self, assignment: &str) -> Res<()> {
        let (k, v) = assignment.split_once('=').ok_or(ConfigError::Syntax(0))?;
        let mut explicit = self.explicit.clone();
        explicit.insert(k.trim().to_string(), v.trim().to_string());
        *self = Self::from_map(explicit)?;
        Ok(())
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.contains_key(key)
    }

    /// Keys given explicitly, in sorted order.
    pub fn explicit(&self) -> &BTreeMap<String, String> {
        &self.explicit
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Value { key: key.into(), msg: msg.into() }
    }

    pub fn f64(&self, key: &str) -> Res<f64> {
        let v: f64 = self.raw(key).parse().map_err(|_| Self::bad(key, format!("`{}` is not a number", self.raw(key))))?;
        if !v.is_finite() {
            return Err(Self::bad(key, "must be finite"));
        }
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str) -> Res<Option<f64>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Res<usize> {
        self.raw(key).parse().map_err(|_| Self::bad(key, format!("`{}` is not a non-negative integer", self.raw(key))))
    }

    pub fn i64(&self, key: &str) -> Res<i64> {
        self.raw(key).parse().map_err(|_| Self::bad(key, format!("`{}` is not an integer", self.raw(key))))
    }

    pub fn usize_list(&self, key: &str) -> Res<Vec<usize>> {
        let out = self
            .raw(key)
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| Self::bad(key, format!("`{s}` is not a non-negative integer"))))
            .collect::<Res<Vec<usize>>>()?;
        if out.is_empty() || out.contains(&0) {
            return Err(Self::bad(key, "need positive entries"));
        }
        Ok(out)
    }

    /// Angle in radians from a value in units of 2π.
    pub fn angle(&self, key: &str) -> Res<f64> {
        Ok(TAU * self.f64(key)?)
    }

    pub fn unit_phase(&self, key: &str) -> Res<Complex<f64>> {
        Ok(Complex::from_polar(1.0, self.angle(key)?))
    }

    pub fn coin(&self) -> Res<Coin64> {
        let su2_keys = ["abs_a", "abs_b", "arg_a", "arg_b"];
        let kind = self.raw("coin");
        if kind != "su2" {
            if let Some(k) = su2_keys.iter().find(|k| self.is_set(k)) {
                return Err(Self::bad(k, "only applies to coin = su2"));
            }
        }
        let coin = match kind {
            "hadamard" => Coin64::hadamard(),
            "identity" => Coin64::identity(),
            "su2" => {
                let abs_a = self.opt_f64("abs_a")?.unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
                if !(0.0..=1.0).contains(&abs_a) {
                    return Err(Self::bad("abs_a", "must lie in [0, 1]"));
                }
                let abs_b = self.opt_f64("abs_b")?.unwrap_or((1.0 - abs_a * abs_a).sqrt());
                let a = Complex::from_polar(abs_a, self.angle("arg_a")?);
                let b = Complex::from_polar(abs_b, self.angle("arg_b")?);
                Coin64::su2(a, b, 0.0)?
            }
            other => return Err(Self::bad("coin", format!("`{other}`; expected hadamard, identity or su2"))),
        };
        let eta = self.angle("eta")?;
        Ok(Coin64::new(coin.a(), coin.b(), coin.c(), coin.d(), eta)?)
    }

    pub fn field(&self) -> Res<Field> {
        parse_field(self.raw("field")).map_err(|m| Self::bad("field", m))
    }

    /// The `fields` list with the text of each entry.
    pub fn fields(&self) -> Res<Vec<(String, Field)>> {
        let mut out = Vec::new();
        for part in split_fields(self.raw("fields")) {
            let f = parse_field(&part).map_err(|m| Self::bad("fields", m))?;
            out.push((part, f));
        }
        if out.is_empty() {
            return Err(Self::bad("fields", "need at least one field"));
        }
        Ok(out)
    }

    pub fn spec_for(&self, field: &Field) -> Res<WalkSpec64> {
        Ok(WalkSpec64::new(self.coin()?, field.phi(), self.angle("theta")?))
    }

    pub fn spec(&self) -> Res<WalkSpec64> {
        self.spec_for(&self.field()?)
    }

    pub fn z(&self) -> Res<Complex<f64>> {
        let r = self.f64("z_abs")?;
        if r <= 0.0 {
            return Err(Self::bad("z_abs", "must be positive"));
        }
        Ok(Complex::from_polar(r, self.angle("z_arg")?))
    }

    /// `δ_cell ⊗ e_spin`.
    pub fn initial_state(&self) -> Res<StateVector64> {
        let cell = self.i64("cell")?;
        let spin = match self.raw("spin") {
            "0" | "+" | "up" => 0,
            "1" | "-" | "down" => 1,
            other => return Err(Self::bad("spin", format!("`{other}`; expected 0 or 1"))),
        };
        Ok(StateVector64::delta(2 * cell + spin))
    }
}

/// Splits on commas that separate fields (not the commas inside `liouville:…`).
fn split_fields(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let continues = part.chars().all(|c| c.is_ascii_digit())
            && out.last().is_some_and(|l| l.starts_with("liouville:"));
        if continues {
            let last = out.last_mut().unwrap();
            last.push(',');
            last.push_str(part);
        } else {
            out.push(part.to_string());
        }
    }
    out
}

pub fn parse_field(s: &str) -> std::result::Result<Field, String> {
    let s = s.trim();
    if s == "golden" {
        return Ok(Field::Golden);
    }
    if s == "liouville" {
        return Ok(Field::Liouville(LiouvilleSchedule::PowerOfTwo { depth: 4 }));
    }
    if let Some(rest) = s.strip_prefix("liouville:") {
        let coeffs = rest
            .split(',')
            .map(|c| c.trim().parse::<num_bigint::BigUint>().map_err(|_| format!("bad coefficient `{c}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let field = Field::Liouville(LiouvilleSchedule::Explicit(coeffs));
        ewalk_core::numtheory::make_liouville(match &field {
            Field::Liouville(s) => s,
            _ => unreachable!(),
        })
        .map_err(|e| e.to_string())?;
        return Ok(field);
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if q <= 0 || p < 0 {
            return Err(format!("`{s}` needs p >= 0 and q > 0"));
        }
        return Ok(Field::Rational { p, q });
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(Field::Real)
        .ok_or_else(|| format!("`{s}` is not a field (p/q, golden, liouville[:c1,c2,...] or a real)"))
}
