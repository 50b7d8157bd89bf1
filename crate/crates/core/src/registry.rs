//! Named strategy registries for the pluggable parts of the pipeline.

use std::collections::BTreeMap;

use crate::augment::{ExactLambda2, IterativeLambda2, Lambda2Estimator};
use crate::error::{Error, Result};
use crate::graph::{CandidateSet, WeightedGraph};
use crate::oracles::{brute_force_opt_binary, weighted_opt_ascent};
use crate::sparsify::{ApproxBackend, ApproxProjection, ExactBackend, ExactProjection, ProjectionStrategy, ResistanceBackend};

/// Maps names to factories producing boxed trait objects.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, fn() -> Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: fn() -> Box<T>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        match self.entries.get(name) {
            Some(factory) => Ok(factory()),
            None => Err(Error::UnknownStrategy {
                name: format!("{} `{name}`", self.kind),
                available: self.names().join(", "),
            }),
        }
    }
}

/// A reference value for the best achievable `λ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptValue {
    pub lambda: f64,
    /// Candidate weights in candidate order.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptOptions {
    pub steps: usize,
    pub seed: u64,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions { steps: 500, seed: 0 }
    }
}

/// A reference solver for the augmentation optimum.
pub trait OptOracle: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, g: &WeightedGraph, w: &CandidateSet, k: usize, opts: &OptOptions) -> Result<OptValue>;
}

/// Exhaustive search over unit-weight subsets.
pub struct BruteOracle;

/// Projected supergradient ascent over fractional weights.
pub struct AscentOracle;

impl OptOracle for BruteOracle {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn solve(&self, g: &WeightedGraph, w: &CandidateSet, k: usize, _opts: &OptOptions) -> Result<OptValue> {
        let best = brute_force_opt_binary(g, w, k)?;
        let weights = w
            .edges()
            .iter()
            .map(|e| if best.subset.contains(e) { 1.0 } else { 0.0 })
            .collect();
        Ok(OptValue {
            lambda: best.lambda,
            weights,
        })
    }
}

impl OptOracle for AscentOracle {
    fn name(&self) -> &'static str {
        "ascent"
    }

    fn solve(&self, g: &WeightedGraph, w: &CandidateSet, k: usize, opts: &OptOptions) -> Result<OptValue> {
        let best = weighted_opt_ascent(g, w, k, opts.steps, opts.seed)?;
        Ok(OptValue {
            lambda: best.lambda,
            weights: best.weights,
        })
    }
}

pub fn resistance_backends() -> Registry<dyn ResistanceBackend> {
    let mut r: Registry<dyn ResistanceBackend> = Registry::new("resistance backend");
    r.register("exact", || Box::new(ExactBackend));
    r.register("approx", || Box::new(ApproxBackend::default()));
    r
}

pub fn projection_strategies() -> Registry<dyn ProjectionStrategy> {
    let mut r: Registry<dyn ProjectionStrategy> = Registry::new("projection");
    r.register("exact", || Box::new(ExactProjection));
    r.register("approx", || Box::new(ApproxProjection::default()));
    r
}

pub fn lambda2_estimators() -> Registry<dyn Lambda2Estimator> {
    let mut r: Registry<dyn Lambda2Estimator> = Registry::new("λ₂ estimator");
    r.register("exact", || Box::new(ExactLambda2));
    r.register("iterative", || Box::new(IterativeLambda2::default()));
    r
}

pub fn opt_oracles() -> Registry<dyn OptOracle> {
    let mut r: Registry<dyn OptOracle> = Registry::new("optimum oracle");
    r.register("brute", || Box::new(BruteOracle));
    r.register("ascent", || Box::new(AscentOracle));
    r
}
