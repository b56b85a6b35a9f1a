//! Flat `key = value` run configuration.
//!
//! Values come from three places, weakest first: the scene's own defaults,
//! the config file, then `--set` flags. Lines starting with `#` are comments.

use std::path::PathBuf;

use thiserror::Error;
use vortexmap::scenes::SceneSpec;
use vortexmap::simulation::Advection;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value, got '{text}'")]
    Syntax { line: usize, text: String },

    #[error("unknown key '{key}'")]
    UnknownKey { key: String },

    #[error("key '{key}': cannot read '{value}' as {expected}")]
    Type { key: String, value: String, expected: &'static str },

    #[error("key '{key}': {reason}")]
    Invalid { key: String, reason: String },

    #[error("no scene given; set scene = <name>")]
    MissingScene,

    #[error("key 'scene': {0}")]
    Scene(vortexmap::Error),
}

/// Everything a run needs besides the scene itself. `None` keeps the scene's value.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scene: String,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub nz: Option<usize>,
    pub cfl: Option<f64>,
    pub reinit: Option<usize>,
    pub frames: Option<usize>,
    pub frame_dt: Option<f64>,
    /// Hard cap on solver steps inside one frame.
    pub steps_per_frame: usize,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub nu: Option<f64>,
    pub advection: Option<Advection>,
    pub out_dir: PathBuf,
    /// Frames between field dumps and images.
    pub output_every: usize,
    pub emit_png: bool,
    /// Normal of the rendered plane in 3D.
    pub slice_axis: usize,
    /// Also write per-solve statistics, including wall times.
    pub solver_csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: String::new(),
            nx: None,
            ny: None,
            nz: None,
            cfl: None,
            reinit: None,
            frames: None,
            frame_dt: None,
            steps_per_frame: 1000,
            tol: None,
            max_iters: None,
            nu: None,
            advection: None,
            out_dir: PathBuf::from("out"),
            output_every: 1,
            emit_png: false,
            slice_axis: 2,
            solver_csv: false,
        }
    }
}

pub const KEYS: [&str; 19] = [
    "scene",
    "nx",
    "ny",
    "nz",
    "cfl",
    "reinit",
    "reinit_steps",
    "frames",
    "frame_dt",
    "steps_per_frame",
    "tol",
    "max_iters",
    "nu",
    "advection",
    "out_dir",
    "output_every",
    "emit_png",
    "slice_axis",
    "solver_csv",
];

/// `key = value` pairs of a config file, in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let pair = split_pair(line).ok_or_else(|| ConfigError::Syntax { line: n + 1, text: raw.trim().to_string() })?;
        out.push(pair);
    }
    Ok(out)
}

/// One `--set key=value` flag.
pub fn parse_flag(flag: &str) -> Result<(String, String), ConfigError> {
    split_pair(flag).ok_or_else(|| ConfigError::Syntax { line: 0, text: flag.to_string() })
}

fn split_pair(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = unquote(k.trim());
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), unquote(v.trim()).to_string()))
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|t| t.strip_suffix('"')).unwrap_or(s)
}

fn number<T: std::str::FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Type { key: key.to_string(), value: value.to_string(), expected })
}

fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
    number(key, value, "a non-negative integer")
}

fn real(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = number(key, value, "a number")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::Type { key: key.to_string(), value: value.to_string(), expected: "a finite number" })
    }
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Type { key: key.to_string(), value: value.to_string(), expected: "a boolean" }),
    }
}

fn advection(key: &str, value: &str) -> Result<Advection, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "flowmap" | "flow_map" | "fm" => Ok(Advection::FlowMap),
        "semi-lagrangian" | "semi_lagrangian" | "sl" => Ok(Advection::SemiLagrangian),
        "bfecc" => Ok(Advection::Bfecc),
        _ => Err(ConfigError::Type {
            key: key.to_string(),
            value: value.to_string(),
            expected: "one of flowmap, semi-lagrangian, bfecc",
        }),
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

impl RunConfig {
    /// Applies one pair on top of the current values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "scene" => self.scene = value.to_string(),
            "nx" => self.nx = Some(count(key, value)?),
            "ny" => self.ny = Some(count(key, value)?),
            "nz" => self.nz = Some(count(key, value)?),
            "cfl" => self.cfl = Some(real(key, value)?),
            "reinit" | "reinit_steps" => self.reinit = Some(count(key, value)?),
            "frames" => self.frames = Some(count(key, value)?),
            "frame_dt" => self.frame_dt = Some(real(key, value)?),
            "steps_per_frame" => self.steps_per_frame = count(key, value)?,
            "tol" => self.tol = Some(real(key, value)?),
            "max_iters" => self.max_iters = Some(count(key, value)?),
            "nu" => self.nu = Some(real(key, value)?),
            "advection" => self.advection = Some(advection(key, value)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "output_every" => self.output_every = count(key, value)?,
            "emit_png" => self.emit_png = flag(key, value)?,
            "slice_axis" => self.slice_axis = count(key, value)?,
            "solver_csv" => self.solver_csv = flag(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// File pairs first, then flags; a missing scene is an error.
    pub fn from_sources(file: Option<&str>, flags: &[String]) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(text) = file {
            for (k, v) in parse_pairs(text)? {
                cfg.set(&k, &v)?;
            }
        }
        for f in flags {
            let (k, v) = parse_flag(f)?;
            cfg.set(&k, &v)?;
        }
        if cfg.scene.is_empty() {
            return Err(ConfigError::MissingScene);
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        for (key, v) in [("cfl", self.cfl), ("frame_dt", self.frame_dt), ("tol", self.tol)] {
            if let Some(v) = v {
                if v <= 0.0 {
                    return Err(invalid(key, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(t) = self.tol {
            if t >= 1.0 {
                return Err(invalid("tol", format!("must be below 1, got {t}")));
            }
        }
        if let Some(nu) = self.nu {
            if nu < 0.0 {
                return Err(invalid("nu", format!("must be non-negative, got {nu}")));
            }
        }
        for (key, v) in [("reinit", self.reinit), ("max_iters", self.max_iters)] {
            if v == Some(0) {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        for (key, v) in [("steps_per_frame", self.steps_per_frame), ("output_every", self.output_every)] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if self.slice_axis > 2 {
            return Err(invalid("slice_axis", format!("must be 0, 1 or 2, got {}", self.slice_axis)));
        }
        Ok(())
    }

    /// The scene with every override applied.
    pub fn scene_spec(&self) -> Result<SceneSpec, ConfigError> {
        let mut s = SceneSpec::named(&self.scene).map_err(ConfigError::Scene)?;
        let dim = s.dims.len();
        if let Some(nx) = self.nx {
            s = s.with_resolution(nx);
        }
        for (axis, key, v) in [(1, "ny", self.ny), (2, "nz", self.nz)] {
            if let Some(n) = v {
                if axis >= dim {
                    return Err(invalid(key, format!("scene '{}' is {dim}D", self.scene)));
                }
                s.dims[axis] = n;
            }
        }
        for (key, &n) in ["nx", "ny", "nz"].iter().zip(&s.dims) {
            if n < 4 {
                return Err(invalid(key, format!("needs at least 4 cells, got {n}")));
            }
        }
        if let Some(v) = self.cfl {
            s.config.cfl = v;
        }
        if let Some(v) = self.reinit {
            s.config.reinit = v;
        }
        if let Some(v) = self.frames {
            s.frames = v;
        }
        if let Some(v) = self.frame_dt {
            s.frame_dt = v;
        }
        if let Some(v) = self.tol {
            s.config.poisson.tol = v;
        }
        if let Some(v) = self.max_iters {
            s.config.poisson.max_iters = v;
        }
        if let Some(v) = self.nu {
            s.config.viscosity = v;
        }
        if let Some(v) = self.advection {
            s.config.advection = v;
        }
        s.config.output_every = self.output_every;
        s.config.validate().map_err(|e| invalid("config", e.to_string()))?;
        Ok(s)
    }
}
