//! Solver for pricing and designing tests in a hard-information disclosure
//! game: an intermediary sells an unbiased test of an asset's value plus the
//! right to disclose the score, and the market prices non-disclosure with
//! prejudice. Equilibria are selected adversarially, so the value of a
//! test-fee structure is its worst-case revenue across equilibria.
//!
//! - [`measure`]: exact calculus for mixed discrete/continuous score
//!   distributions (CDFs, integrals, conditional means, contraction checks,
//!   discretization).
//! - [`equilibrium`]: participation, equilibrium disclosure thresholds, and
//!   the adversarial outcome of a given test-fee structure.
//! - [`designer`]: robustly optimal structures -- closed forms for binary
//!   priors, the step-exponential-step family, and a constrained search for
//!   arbitrary priors.
//! - [`oracle`]: brute-force equilibrium enumeration on finite instances,
//!   the ground truth for the engine.
//! - [`demand`]: demand correspondences, robust demand curves, and two-part
//!   tariff sweeps.
//! - [`scenario`]: text-format ingestion for the command-line tool.
//! - [`verify`]: seeded randomized cross-checks of all of the above.

pub mod demand;
pub mod designer;
pub mod equilibrium;
pub mod error;
pub mod measure;
pub mod oracle;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
