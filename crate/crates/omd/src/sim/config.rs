//! Scenario descriptions: who transmits with what power and antennas, how
//! strong each link's fading is, which receivers attempt decoding, and the
//! Monte-Carlo and sweep controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_user::MAX_USERS;

/// Largest antenna count accepted per side of a link.
pub const MAX_ANTENNAS: usize = 8;

/// Receiver behavior: treat all interference as noise, or opportunistically
/// decode whichever interferers' rates allow it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Sud,
    Omd,
}

/// Optional one-dimensional parameter grid swept by a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", content = "values")]
pub enum Sweep {
    /// Sets every cross-link variance (j to k, j != k) to the grid value.
    #[serde(rename = "rho")]
    CrossVariance(Vec<f64>),
    /// Multiplies every user's base power by the grid value.
    #[serde(rename = "power")]
    PowerScale(Vec<f64>),
}

impl Sweep {
    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::CrossVariance(v) | Sweep::PowerScale(v) => v,
        }
    }

    /// Column label used for the swept parameter in generic CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Sweep::CrossVariance(_) => "rho",
            Sweep::PowerScale(_) => "power",
        }
    }
}

fn default_realizations() -> usize {
    500
}

fn default_max_rounds() -> usize {
    100
}

fn default_rate_tol() -> f64 {
    1e-6
}

/// Full description of one simulated system. `channel_variances[j][k]` is the
/// per-entry variance of the link from transmitter `j` to receiver `k`
/// (0-based), so row `j` describes where user `j`'s signal lands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub k: usize,
    /// Per-user `(transmit, receive)` antenna counts.
    pub antennas: Vec<(usize, usize)>,
    pub powers: Vec<f64>,
    pub channel_variances: Vec<Vec<f64>>,
    pub decoders: Vec<Decoder>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_rate_tol")]
    pub rate_tol: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > MAX_USERS {
            return Err(Error::TooManyUsers {
                got: self.k,
                max: MAX_USERS,
            });
        }
        if self.antennas.len() != self.k
            || self.powers.len() != self.k
            || self.decoders.len() != self.k
        {
            return Err(Error::InvalidConfig(format!(
                "antennas, powers, and decoders must each list k = {} entries",
                self.k
            )));
        }
        for (i, (n, m)) in self.antennas.iter().enumerate() {
            if *n == 0 || *m == 0 || *n > MAX_ANTENNAS || *m > MAX_ANTENNAS {
                return Err(Error::InvalidConfig(format!(
                    "user {} antenna counts must lie in 1..={MAX_ANTENNAS} (got {n}x{m})",
                    i + 1
                )));
            }
        }
        for (i, p) in self.powers.iter().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "user {} power must be finite and nonnegative (got {p})",
                    i + 1
                )));
            }
        }
        if self.channel_variances.len() != self.k
            || self.channel_variances.iter().any(|row| row.len() != self.k)
        {
            return Err(Error::InvalidConfig(format!(
                "channel_variances must be a {0}x{0} matrix",
                self.k
            )));
        }
        for row in &self.channel_variances {
            for v in row {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "channel variances must be finite and nonnegative (got {v})"
                    )));
                }
            }
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be at least 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if !self.rate_tol.is_finite() || self.rate_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "rate_tol must be finite and positive (got {})",
                self.rate_tol
            )));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values().is_empty() {
                return Err(Error::InvalidConfig("sweep grid must be nonempty".into()));
            }
            if sweep.values().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidConfig(
                    "sweep values must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    /// The scenario specialization at one sweep grid value; identity when the
    /// scenario has no sweep.
    pub fn at_sweep_value(&self, value: f64) -> ScenarioConfig {
        let mut cfg = self.clone();
        match &self.sweep {
            Some(Sweep::CrossVariance(_)) => {
                for j in 0..cfg.k {
                    for k in 0..cfg.k {
                        if j != k {
                            cfg.channel_variances[j][k] = value;
                        }
                    }
                }
            }
            Some(Sweep::PowerScale(_)) => {
                for p in &mut cfg.powers {
                    *p *= value;
                }
            }
            None => {}
        }
        cfg
    }

    /// Grid to iterate: the sweep values, or a single unit point when no
    /// sweep is configured (the identity under both sweep interpretations).
    pub fn sweep_values(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) => s.values().to_vec(),
            None => vec![1.0],
        }
    }

    pub fn with_all_decoders(&self, d: Decoder) -> ScenarioConfig {
        let mut cfg = self.clone();
        cfg.decoders = vec![d; cfg.k];
        cfg
    }
}
