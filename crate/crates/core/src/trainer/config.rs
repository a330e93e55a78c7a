use std::fmt;
use std::str::FromStr;

use crate::corpus::{LengthBounds, TargetPolicy};
use crate::{Error, Result};

/// A single composition rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Composition {
    Cbow,
    Cmow,
    Fos,
    Fop,
    Sos,
}

impl Composition {
    pub fn is_rate(self) -> bool {
        matches!(self, Composition::Fos | Composition::Fop | Composition::Sos)
    }

    /// Number of parameters one word owns for an embedding of size `dim`.
    pub fn param_len(self, dim: usize) -> usize {
        if self.is_rate() {
            dim * dim
        } else {
            dim
        }
    }
}

/// Training mode: a composition, or a hybrid concatenating two of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Cbow,
    Cmow,
    Fos,
    Fop,
    Sos,
    HybridFosFop,
    HybridFosSos,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Cbow,
        Mode::Cmow,
        Mode::Fos,
        Mode::Fop,
        Mode::Sos,
        Mode::HybridFosFop,
        Mode::HybridFosSos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Cbow => "cbow",
            Mode::Cmow => "cmow",
            Mode::Fos => "fos",
            Mode::Fop => "fop",
            Mode::Sos => "sos",
            Mode::HybridFosFop => "hybrid-fos-fop",
            Mode::HybridFosSos => "hybrid-fos-sos",
        }
    }

    pub fn code(self) -> u8 {
        Mode::ALL.iter().position(|&m| m == self).expect("listed") as u8
    }

    pub fn from_code(code: u8) -> Option<Mode> {
        Mode::ALL.get(code as usize).copied()
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, Mode::HybridFosFop | Mode::HybridFosSos)
    }

    pub fn uses_rate_matrices(self) -> bool {
        !matches!(self, Mode::Cbow | Mode::Cmow)
    }

    /// Components and their dimensions for a total embedding size `dim`.
    /// Hybrids put the FOS half first; it gets the extra unit when `dim` is
    /// odd.
    pub fn components(self, dim: usize) -> Vec<(Composition, usize)> {
        let split = |second| vec![(Composition::Fos, dim - dim / 2), (second, dim / 2)];
        match self {
            Mode::Cbow => vec![(Composition::Cbow, dim)],
            Mode::Cmow => vec![(Composition::Cmow, dim)],
            Mode::Fos => vec![(Composition::Fos, dim)],
            Mode::Fop => vec![(Composition::Fop, dim)],
            Mode::Sos => vec![(Composition::Sos, dim)],
            Mode::HybridFosFop => split(Composition::Fop),
            Mode::HybridFosSos => split(Composition::Sos),
        }
    }

    /// ε per mode: 0.01 for FOS, 0.001 for FOP and SOS, 0.0001 for hybrids.
    /// CBOW and CMOW ignore it.
    pub fn default_epsilon(self) -> f64 {
        match self {
            Mode::Fos | Mode::Cbow | Mode::Cmow => 0.01,
            Mode::Fop | Mode::Sos => 0.001,
            Mode::HybridFosFop | Mode::HybridFosSos => 0.0001,
        }
    }

    pub fn default_dim(self) -> usize {
        if self.is_hybrid() {
            50
        } else {
            25
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown mode {s:?}")))
    }
}

pub(crate) fn cmow_side(dim: usize) -> Option<usize> {
    let side = (dim as f64).sqrt().round() as usize;
    (side * side == dim && side > 0).then_some(side)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dim: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr_split: bool,
    pub seed: u64,
    pub neg_exponent: f64,
    pub min_count: u64,
    pub length_bounds: LengthBounds,
    pub target_policy: TargetPolicy,
    /// Worker threads; results do not depend on it.
    pub threads: usize,
}

impl TrainConfig {
    pub fn for_mode(mode: Mode) -> Self {
        TrainConfig {
            mode,
            dim: mode.default_dim(),
            epsilon: mode.default_epsilon(),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("batch size", self.batch_size),
            ("window", self.window),
            ("negatives", self.negatives),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        for (name, value) in [
            ("epsilon", self.epsilon),
            ("learning rate", self.learning_rate),
            ("negative exponent", self.neg_exponent),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {value}")));
            }
        }
        if self.min_count == 0 {
            return Err(Error::invalid("min_count must be at least 1"));
        }
        for (comp, d) in self.mode.components(self.dim) {
            if d == 0 {
                return Err(Error::invalid("every hybrid component needs a dimension"));
            }
            if comp == Composition::Cmow && cmow_side(d).is_none() {
                return Err(Error::invalid(format!(
                    "CMOW needs a square dimension, got {d}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Fos,
            dim: 25,
            epsilon: 0.01,
            learning_rate: 0.001,
            batch_size: 1000,
            epochs: 10,
            window: 4,
            negatives: 5,
            lr_split: false,
            seed: 0,
            neg_exponent: 0.75,
            min_count: 100,
            length_bounds: LengthBounds::default(),
            target_policy: TargetPolicy::WithReplacement,
            threads: 1,
        }
    }
}
