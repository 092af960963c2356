//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! nx = 32
//! ny = 32
//! kappa = 1
//! preset = solenoidal-vortex
//! init = random-offnull(1)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::ambient::Preset;
use crate::calculus::Coefficients;
use crate::error::{FsiError, Result};
use crate::evolve::step_count;
use crate::grid::{Geometry, MIN_CELLS};
use crate::init::InitSpec;

const KEYS: &[&str] = &[
    "L1", "L2", "nx", "ny", "nu", "lambda", "eta", "pstab", "kappa", "preset", "amplitude", "dt", "T",
    "stride", "init", "out", "eig_cap",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub coefficients: Coefficients,
    pub kappa: f64,
    pub preset: Preset,
    pub amplitude: f64,
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
    pub init: InitSpec,
    pub out: PathBuf,
    pub eig_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl RunConfig {
    /// One-line rendering of every resolved field, in a fixed order.
    pub fn resolved(&self) -> String {
        let g = &self.geometry;
        let c = &self.coefficients;
        let mut s = String::new();
        let _ = write!(
            s,
            "L1={} L2={} nx={} ny={} nu={} lambda={} eta={} pstab={} kappa={} preset={} amplitude={} \
             dt={} T={} stride={} init={} eig_cap={}",
            g.l1,
            g.l2,
            g.nx,
            g.ny,
            c.nu,
            c.lambda,
            c.eta,
            c.pstab,
            self.kappa,
            self.preset,
            self.amplitude,
            self.dt,
            self.t_final,
            self.stride,
            self.init,
            self.eig_cap
        );
        s
    }

    /// Replaces the seed of a random initial condition.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init = self.init.with_seed(seed);
        self
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| FsiError::Parse {
            line,
            key: body.to_string(),
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|k| **k == key) else {
            return Err(FsiError::Parse { line, key: key.to_string(), msg: "unknown key".into() });
        };
        if value.is_empty() {
            return Err(FsiError::Parse { line, key: key.into(), msg: "missing value".into() });
        }
        if let Some(prev) = entries.insert(key, Entry { line, value }) {
            return Err(FsiError::Parse {
                line,
                key: key.into(),
                msg: format!("duplicate key, first set on line {}", prev.line),
            });
        }
    }
    Parser { entries }.build()
}

struct Parser<'a> {
    entries: HashMap<&'a str, Entry<'a>>,
}

impl Parser<'_> {
    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> FsiError {
        FsiError::Parse { line: self.line(key), key: key.into(), msg: msg.into() }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|_| self.err(key, format!("malformed value `{}`", e.value))),
        }
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.get(key, default)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(key, "value must be finite"))
        }
    }

    fn build(self) -> Result<RunConfig> {
        let l1 = self.real("L1", 1.0)?;
        let l2 = self.real("L2", 1.0)?;
        let nx: usize = self.get("nx", 16)?;
        let ny: usize = self.get("ny", 16)?;
        for (k, v) in [("L1", l1), ("L2", l2)] {
            if v <= 0.0 {
                return Err(self.err(k, "must be positive"));
            }
        }
        for (k, v) in [("nx", nx), ("ny", ny)] {
            if v < MIN_CELLS {
                return Err(self.err(k, format!("must be at least {}", MIN_CELLS)));
            }
        }
        let geometry = Geometry::new(l1, l2, nx, ny).map_err(|e| self.err("nx", e.to_string()))?;

        let coefficients = Coefficients {
            nu: self.real("nu", 1.0)?,
            lambda: self.real("lambda", 1.0)?,
            eta: self.real("eta", 1.0)?,
            pstab: self.real("pstab", 1.0)?,
        };
        if coefficients.nu <= 0.0 {
            return Err(self.err("nu", "must be positive"));
        }
        if coefficients.lambda < 0.0 {
            return Err(self.err("lambda", "must be nonnegative"));
        }
        if coefficients.eta <= 0.0 {
            return Err(self.err("eta", "must be positive"));
        }
        if coefficients.pstab < 0.0 {
            return Err(self.err("pstab", "must be nonnegative"));
        }

        let kappa = self.real("kappa", 0.0)?;
        if kappa != 0.0 && kappa != 1.0 {
            return Err(self.err("kappa", format!("must be 0 or 1, got {kappa}")));
        }
        let preset: Preset = match self.entries.get("preset") {
            None => Preset::Zero,
            Some(e) => e.value.parse().map_err(|err: FsiError| self.err("preset", err.to_string()))?,
        };
        let amplitude = self.real("amplitude", 1.0)?;
        if amplitude < 0.0 {
            return Err(self.err("amplitude", "must be nonnegative"));
        }

        let dt = self.real("dt", 0.5 * geometry.hx.min(geometry.hy))?;
        if dt <= 0.0 {
            return Err(self.err("dt", "must be positive"));
        }
        let t_final = self.real("T", 20.0)?;
        if let Err(e) = step_count(dt, t_final) {
            return Err(self.err("T", e.to_string()));
        }
        let stride: usize = self.get("stride", 64)?;
        if stride == 0 {
            return Err(self.err("stride", "must be at least 1"));
        }
        let init: InitSpec = match self.entries.get("init") {
            None => InitSpec::RandomOffNull(1),
            Some(e) => e.value.parse().map_err(|err: FsiError| self.err("init", err.to_string()))?,
        };
        let out = PathBuf::from(self.entries.get("out").map_or("out", |e| e.value));
        let eig_cap: usize = self.get("eig_cap", crate::analyze::spectrum::DEFAULT_CAP)?;

        Ok(RunConfig {
            geometry,
            coefficients,
            kappa,
            preset,
            amplitude,
            dt,
            t_final,
            stride,
            init,
            out,
            eig_cap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> (usize, String) {
        match parse_config(text).unwrap_err() {
            FsiError::Parse { line, key, .. } => (line, key),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn defaults() {
        let c = parse_config("nx = 16\nny = 16\nkappa = 0").unwrap();
        assert_eq!(c.geometry.nx, 16);
        assert_eq!(c.kappa, 0.0);
        assert_eq!(c.dt, 1.0 / 32.0);
        assert_eq!(c.t_final, 20.0);
        assert_eq!(c.coefficients, Coefficients::default());
        assert_eq!(c.init, InitSpec::RandomOffNull(1));
    }

    #[test]
    fn kappa_two_names_kappa() {
        assert_eq!(parse_err("kappa = 2"), (1, "kappa".into()));
    }

    #[test]
    fn preset_and_amplitude_threaded() {
        let c = parse_config("preset = solenoidal-vortex\namplitude = 0.5").unwrap();
        assert_eq!(c.preset, Preset::SolenoidalVortex);
        assert_eq!(c.amplitude, 0.5);
    }

    #[test]
    fn rejections() {
        assert_eq!(parse_err("# hi\nspeed = 3"), (2, "speed".into()));
        assert_eq!(parse_err("nx = sixteen"), (1, "nx".into()));
        assert_eq!(parse_err("nx = 4"), (1, "nx".into()));
        assert_eq!(parse_err("nx = 16\nnx = 32"), (2, "nx".into()));
        assert_eq!(parse_err("dt = 0.3\nT = 1"), (2, "T".into()));
        assert_eq!(parse_err("eta = 0"), (1, "eta".into()));
        assert_eq!(parse_err("init = random(x)"), (1, "init".into()));
        assert_eq!(parse_err("L1 = nan"), (1, "L1".into()));
        assert_eq!(parse_err("nx"), (1, "nx".into()));
    }

    #[test]
    fn comments_and_seed_override() {
        let c = parse_config("init = random(3)  # trailing\n\n").unwrap().with_seed(9);
        assert_eq!(c.init, InitSpec::Random(9));
        assert!(c.resolved().contains("init=random(9)"));
    }
}
