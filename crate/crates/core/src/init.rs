//! Initial data presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::DiscreteCalculus;
use crate::error::{FsiError, Result};
use crate::generator::{Generator, NullSpace};
use crate::grid::State;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSpec {
    N0,
    Random(u64),
    RandomOffNull(u64),
    File(PathBuf),
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::N0 => f.write_str("n0"),
            InitSpec::Random(s) => write!(f, "random({s})"),
            InitSpec::RandomOffNull(s) => write!(f, "random-offnull({s})"),
            InitSpec::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

impl FromStr for InitSpec {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "n0" {
            return Ok(InitSpec::N0);
        }
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::trim)
        };
        let seed = |a: &str| {
            a.parse::<u64>()
                .map_err(|_| FsiError::Config(format!("bad seed `{a}` in init `{s}`")))
        };
        if let Some(a) = arg("random-offnull") {
            return Ok(InitSpec::RandomOffNull(seed(a)?));
        }
        if let Some(a) = arg("random") {
            return Ok(InitSpec::Random(seed(a)?));
        }
        if let Some(a) = arg("file") {
            if a.is_empty() {
                return Err(FsiError::Config("file() needs a path".into()));
            }
            return Ok(InitSpec::File(PathBuf::from(a)));
        }
        Err(FsiError::Config(format!("unknown init `{s}`")))
    }
}

impl InitSpec {
    /// The same spec with its seed replaced, if it has one.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            InitSpec::Random(_) => InitSpec::Random(seed),
            InitSpec::RandomOffNull(_) => InitSpec::RandomOffNull(seed),
            other => other.clone(),
        }
    }
}

/// Uniform `[−1, 1]` values for every reduced unknown, expanded so the
/// boundary and interface conditions hold.
pub fn random_state(generator: &Generator, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (0..generator.order()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    generator.expand_state(&r)
}

pub fn initial_state(
    calc: &DiscreteCalculus,
    generator: &Generator,
    null: &NullSpace,
    spec: &InitSpec,
) -> Result<State> {
    match spec {
        InitSpec::N0 => Ok(null.n0.clone()),
        InitSpec::Random(seed) => Ok(random_state(generator, *seed)),
        InitSpec::RandomOffNull(seed) => null.project_off(calc, &random_state(generator, *seed)),
        InitSpec::File(path) => {
            let s = crate::state_io::read_state(path, &calc.geom)?;
            Ok(generator.expand_state(&generator.reduce(&s)))
        }
    }
}
