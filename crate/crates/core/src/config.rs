//! Run configuration, loadable from TOML or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentParams;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack allowed when verifying primal and dual SDP certificates.
    pub verify: f64,
    /// SDP weights at or below this are dropped before sparsification.
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            verify: 1e-6,
            support: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub q: f64,
    pub eps: f64,
    pub delta_prime: f64,
    pub k: usize,
    pub seed: u64,
    /// Resistance backend name.
    pub backend: String,
    /// Projection strategy name.
    pub projection: String,
    /// `λ₂` estimator name.
    pub lambda2: String,
    pub use_sketch: bool,
    pub tolerances: Tolerances,
    pub retries: usize,
    pub c_reject: f64,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: 10.0,
            eps: 0.05,
            delta_prime: 0.1,
            k: 1,
            seed: rng::default_seed(),
            backend: "exact".into(),
            projection: "exact".into(),
            lambda2: "exact".into(),
            use_sketch: false,
            tolerances: Tolerances::default(),
            retries: 5,
            c_reject: 1.0,
            output: None,
        }
    }
}

impl RunConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 10.0 && self.q.is_finite()) {
            return Err(Error::Input(format!("q must be at least 10, got {}", self.q)));
        }
        if !(self.eps > 0.0 && self.eps <= 0.05) {
            return Err(Error::Input(format!("ε must lie in (0, 1/20], got {}", self.eps)));
        }
        if !(self.delta_prime > 0.0 && self.delta_prime < 1.0) {
            return Err(Error::Input(format!("δ′ must lie in (0, 1), got {}", self.delta_prime)));
        }
        if self.k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        if self.retries == 0 {
            return Err(Error::Input("the retry budget must be at least 1".into()));
        }
        if !(self.c_reject > 0.0 && self.c_reject.is_finite()) {
            return Err(Error::Input(format!("c_reject must be positive, got {}", self.c_reject)));
        }
        if !(self.tolerances.verify >= 0.0 && self.tolerances.support >= 0.0) {
            return Err(Error::Input("tolerances must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn augment_params(&self) -> AugmentParams {
        AugmentParams {
            k: self.k,
            q: self.q,
            eps: self.eps,
            delta_prime: self.delta_prime,
            seed: self.seed,
            c_reject: self.c_reject,
            retries: self.retries,
            support_threshold: self.tolerances.support,
            use_sketch: self.use_sketch,
        }
    }
}
