//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution literal or piece list violates the CDF invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Two distributions that must share a support interval do not.
    #[error("support mismatch: [{lo_a}, {hi_a}] vs [{lo_b}, {hi_b}]")]
    DomainMismatch {
        lo_a: f64,
        hi_a: f64,
        lo_b: f64,
        hi_b: f64,
    },

    /// Conditional mean requested below the support of the distribution.
    #[error("zero mass at or below {0}")]
    ZeroMassBelow(f64),

    /// The equilibrium-threshold set is empty.
    #[error("no equilibrium threshold exists")]
    NoThreshold,

    /// A revenue query at a point that is not an equilibrium threshold.
    #[error("{0} is not an equilibrium threshold")]
    NotAThreshold(f64),

    /// Designer closed forms need a nondegenerate prior (lo < mean < hi).
    #[error("degenerate problem domain: lo={lo}, mean={mean}, hi={hi}")]
    DomainError { lo: f64, mean: f64, hi: f64 },

    /// Step-exponential-step parameters out of order or out of range.
    #[error("invalid step-exponential-step parameters: {0}")]
    InvalidParams(String),

    /// The optimizer found no feasible validated candidate.
    #[error("no feasible test-fee structure found")]
    Infeasible,

    /// An epsilon shift larger than the room available for it.
    #[error("epsilon {eps} outside (0, {max})")]
    EpsTooLarge { eps: f64, max: f64 },

    /// Low-revenue witness requested for a structure that verifiably has no
    /// equilibrium near full surplus.
    #[error("no equilibrium within {eps} of full surplus (max revenue {max_revenue})")]
    NotNearFullSurplus { eps: f64, max_revenue: f64 },

    /// Low-revenue witness epsilon above the admissible cap.
    #[error("epsilon {eps} exceeds cap {cap}")]
    InvalidEps { eps: f64, cap: f64 },

    /// Scenario file problems other than distribution invariants.
    #[error("invalid scenario: {0}")]
    Scenario(String),

    /// A declared test is not a mean-preserving contraction of the prior.
    #[error("test is not a mean-preserving contraction of the prior (violation {violation:.3e})")]
    NotAContraction { violation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
