use serde::{Deserialize, Serialize};

use super::{
    approx_extreme_eigs, approx_lower_resistances, approx_upper_resistances, assumption_eta, check_assumption,
    relative_resistances, ProjectionData, Resistances, SparsifyInstance, SparsifyState,
};
use crate::error::Result;

/// Run-level parameters a backend may consult.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleContext {
    pub eps: f64,
    pub q: f64,
    pub seed: u64,
}

/// Computes the sampling resistances and spectral summaries at a state.
pub trait ResistanceBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn resistances(
        &self,
        inst: &SparsifyInstance,
        proj: &ProjectionData,
        state: &SparsifyState,
        ctx: &SampleContext,
    ) -> Result<Resistances>;
}

/// Full eigendecompositions.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactBackend;

/// Trace powers, a Chebyshev inverse square root and sketched lower
/// resistances; states failing the spectral assumption are handled exactly.
#[derive(Debug, Clone, Copy)]
pub struct ApproxBackend {
    pub eps_a: f64,
}

impl Default for ApproxBackend {
    fn default() -> Self {
        ApproxBackend { eps_a: 0.1 }
    }
}

impl ResistanceBackend for ExactBackend {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn resistances(
        &self,
        inst: &SparsifyInstance,
        proj: &ProjectionData,
        state: &SparsifyState,
        _ctx: &SampleContext,
    ) -> Result<Resistances> {
        relative_resistances(inst, proj, state)
    }
}

impl ResistanceBackend for ApproxBackend {
    fn name(&self) -> &'static str {
        "approx"
    }

    fn resistances(
        &self,
        inst: &SparsifyInstance,
        proj: &ProjectionData,
        state: &SparsifyState,
        ctx: &SampleContext,
    ) -> Result<Resistances> {
        let eta = assumption_eta(ctx.eps, ctx.q, inst.n());
        if !check_assumption(state, proj, eta)? {
            return relative_resistances(inst, proj, state);
        }
        let upper = approx_upper_resistances(inst, state, self.eps_a, eta)?;
        let lower = approx_lower_resistances(inst, proj, state, self.eps_a, ctx.seed)?;
        let ee = approx_extreme_eigs(inst, proj, state, self.eps_a)?;
        Ok(Resistances {
            rho_upper: upper.sum(),
            rho_lower: lower.sum(),
            upper,
            lower,
            upper_max: ee.alpha1,
            upper_min: ee.alpha2,
            lower_max: ee.alpha3,
            approximate: true,
        })
    }
}
