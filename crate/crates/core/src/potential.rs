//! Potentials `V(x, s)` where `s` is time for the path-integral code and the
//! longitudinal coordinate `z` for the biprism.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait PotentialField: Send + Sync {
    fn value(&self, x: f64, s: f64) -> f64;
    fn partial_x(&self, x: f64, s: f64) -> f64;
    fn descriptor(&self) -> String;
}

/// The named model potentials accepted on the command line and in config
/// files: `zero`, `constant:V0`, `harmonic:k`, `gaussian:V0,w,l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelPotential {
    Zero,
    Constant {
        v0: f64,
    },
    /// `k x^2 / 2`
    Harmonic {
        k: f64,
    },
    /// `V0 exp(-x^2/w^2) exp(-s^2/l^2)`
    Gaussian {
        v0: f64,
        w: f64,
        l: f64,
    },
}

impl PotentialField for ModelPotential {
    fn value(&self, x: f64, s: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Constant { v0 } => v0,
            Self::Harmonic { k } => 0.5 * k * x * x,
            Self::Gaussian { v0, w, l } => v0 * (-(x * x) / (w * w)).exp() * (-(s * s) / (l * l)).exp(),
        }
    }

    fn partial_x(&self, x: f64, s: f64) -> f64 {
        match *self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::Harmonic { k } => k * x,
            Self::Gaussian { w, .. } => -2.0 * x / (w * w) * self.value(x, s),
        }
    }

    fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl ModelPotential {
    /// Lower bound of `V` over all arguments.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            Self::Zero | Self::Harmonic { .. } => 0.0,
            Self::Constant { v0 } => v0,
            Self::Gaussian { v0, .. } => v0.min(0.0),
        }
    }
}

impl fmt::Display for ModelPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Constant { v0 } => write!(f, "constant:{v0}"),
            Self::Harmonic { k } => write!(f, "harmonic:{k}"),
            Self::Gaussian { v0, w, l } => write!(f, "gaussian:{v0},{w},{l}"),
        }
    }
}

impl FromStr for ModelPotential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PotentialDescriptor(s.to_string());
        let (name, args) = match s.trim().split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums: Vec<f64> = match args {
            Some(a) => a
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?,
            None => Vec::new(),
        };
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        match (name, nums.as_slice()) {
            ("zero", []) => Ok(Self::Zero),
            ("constant", [v0]) => Ok(Self::Constant { v0: *v0 }),
            ("harmonic", [k]) if *k >= 0.0 => Ok(Self::Harmonic { k: *k }),
            ("gaussian", [v0, w, l]) if *w > 0.0 && *l > 0.0 => Ok(Self::Gaussian { v0: *v0, w: *w, l: *l }),
            _ => Err(bad()),
        }
    }
}

impl From<ModelPotential> for String {
    fn from(p: ModelPotential) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for ModelPotential {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

type Field = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A user-supplied potential and its x-gradient.
pub struct CustomPotential {
    name: String,
    value: Field,
    partial_x: Field,
}

impl CustomPotential {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        partial_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), value: Box::new(value), partial_x: Box::new(partial_x) }
    }
}

impl PotentialField for CustomPotential {
    fn value(&self, x: f64, s: f64) -> f64 {
        (self.value)(x, s)
    }

    fn partial_x(&self, x: f64, s: f64) -> f64 {
        (self.partial_x)(x, s)
    }

    fn descriptor(&self) -> String {
        self.name.clone()
    }
}
