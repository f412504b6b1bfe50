//! Demand correspondence and robust demand curve over a fee grid, and the
//! two-part-tariff sweep for a fixed test.
//!
//! For each disclosure fee the correspondence collects the disclosure
//! probabilities of every equilibrium: thresholds from the analytic engine
//! (interval members sampled at their endpoints plus nine interior points),
//! and for finite-support tests the mixed-at-atom equilibria from the
//! brute-force oracle. The robust curve takes the pointwise minimum, and the
//! tariff sweep prices the testing fee at its binding participation level.

use crate::equilibrium::{equilibrium_thresholds, Fees};
use crate::measure::MixedDistribution;
use crate::oracle::{enumerate_equilibria, OracleKind};

/// Interior samples per threshold interval.
const INTERVAL_SAMPLES: usize = 9;

#[derive(Debug, Clone)]
pub struct DemandPoint {
    pub phi_d: f64,
    /// Disclosure probabilities across all equilibria at this fee, sorted
    /// increasing.
    pub disclosure_probs: Vec<f64>,
    pub robust_prob: f64,
    /// `phi_t + phi_d * robust_prob` with the testing fee at its binding
    /// participation level (never negative).
    pub robust_revenue: f64,
}

pub fn demand_correspondence(g: &MixedDistribution, grid: &[f64]) -> Vec<DemandPoint> {
    let pmf = g.as_finite_pmf();
    let mut out = Vec::with_capacity(grid.len());
    for &phi_d in grid {
        let set = equilibrium_thresholds(g, phi_d);
        let mut probs: Vec<f64> = set
            .sample_members(INTERVAL_SAMPLES)
            .iter()
            .map(|&tau| 1.0 - g.cdf(tau))
            .collect();
        if let Some(pmf) = &pmf {
            for e in enumerate_equilibria(pmf, Fees { phi_t: 0.0, phi_d }) {
                if e.kind == OracleKind::MixedAtAtom {
                    probs.push(e.disclosure_prob);
                }
            }
        }
        probs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        let robust_prob = probs.first().copied().unwrap_or(0.0);
        let phi_t = g.option_value(g.mean() + phi_d).max(0.0);
        out.push(DemandPoint {
            phi_d,
            robust_prob,
            robust_revenue: phi_t + phi_d * robust_prob,
            disclosure_probs: probs,
        });
    }
    out
}

/// The robust demand curve: lowest equilibrium disclosure probability at
/// each fee.
pub fn robust_demand(g: &MixedDistribution, grid: &[f64]) -> Vec<(f64, f64)> {
    demand_correspondence(g, grid)
        .into_iter()
        .map(|p| (p.phi_d, p.robust_prob))
        .collect()
}

/// Best two-part tariff for a fixed test over the fee grid: the testing fee
/// sits at its binding participation level and the disclosure fee maximizes
/// robust revenue, ties broken toward the lowest fee. The reported revenue
/// is a supremum; realizing it strictly requires an eps shave of both fees.
pub fn best_two_part_tariff(g: &MixedDistribution, grid: &[f64]) -> (Fees, f64) {
    let points = demand_correspondence(g, grid);
    let mut best: Option<(Fees, f64)> = None;
    for p in &points {
        let phi_t = g.option_value(g.mean() + p.phi_d).max(0.0);
        let fees = Fees {
            phi_t,
            phi_d: p.phi_d,
        };
        // Lowest fee wins ties (within float noise of an exact tie).
        if best.map(|(_, r)| p.robust_revenue > r + 1e-12).unwrap_or(true) {
            best = Some((fees, p.robust_revenue));
        }
    }
    best.unwrap_or((
        Fees {
            phi_t: 0.0,
            phi_d: 0.0,
        },
        0.0,
    ))
}

/// CSV rows `phi_d, robust_prob, robust_revenue, n_equilibria, probs` with
/// nine significant digits; `probs` is semicolon-separated.
pub fn to_csv(points: &[DemandPoint]) -> String {
    let mut out = String::from("phi_d,robust_prob,robust_revenue,n_equilibria,probs\n");
    for p in points {
        let probs: Vec<String> = p.disclosure_probs.iter().map(|&q| sig9(q)).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sig9(p.phi_d),
            sig9(p.robust_prob),
            sig9(p.robust_revenue),
            p.disclosure_probs.len(),
            probs.join(";")
        ));
    }
    out
}

/// Formats with nine significant digits, plain decimal notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.8}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}
