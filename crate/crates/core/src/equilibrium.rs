//! Equilibrium analysis of a test-fee structure.
//!
//! An equilibrium disclosure threshold `tau` solves
//! `tau - phi_d = E[s | s <= tau]`, equivalently `D(tau) = 0` for the defect
//! `D(tau) = I(tau) - phi_d * G(tau)` with `I` the running integral of the
//! CDF. On flat pieces `D` is affine in `tau`, on affine pieces quadratic,
//! and on exponential pieces it is a single exponential -- unless the piece
//! rate equals `phi_d` exactly, in which case `D` is constant and a vanishing
//! constant term yields a whole interval of equilibria. Atoms only ever push
//! `D` down, so every root is found in closed form inside some piece, plus
//! one pooling candidate `tau = mean + phi_d` above the support.
//!
//! The adversarial (intermediary-worst, agent-best) equilibrium conceals at
//! the weak-highest threshold; scanning proceeds from the top piece down so
//! that threshold is located first.

use crate::error::{Error, Result};
use crate::measure::{MixedDistribution, PieceForm, CDF_TOL};

/// Certification tolerance for threshold membership: every reported member
/// satisfies `|phi_d G(tau) - I(tau)| <= ROOT_TOL` (scale-relative).
pub const ROOT_TOL: f64 = 1e-10;

/// Testing fee and disclosure fee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fees {
    pub phi_t: f64,
    pub phi_d: f64,
}

impl Fees {
    pub fn new(phi_t: f64, phi_d: f64) -> Result<Self> {
        if !phi_t.is_finite() || !phi_d.is_finite() {
            return Err(Error::Scenario(format!(
                "fees must be finite, got ({phi_t}, {phi_d})"
            )));
        }
        Ok(Self { phi_t, phi_d })
    }
}

/// A marginal score distribution together with its fees.
#[derive(Debug, Clone)]
pub struct TestFeeStructure {
    pub g: MixedDistribution,
    pub fees: Fees,
}

impl TestFeeStructure {
    pub fn new(g: MixedDistribution, fees: Fees) -> Self {
        Self { g, fees }
    }
}

/// Participation status: with a strictly positive slack the asset is tested
/// with probability 1 in every equilibrium; at zero or negative slack an
/// equilibrium without testing exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participation {
    StrictHold,
    Fail,
}

#[derive(Debug, Clone, Copy)]
pub struct ParticipationReport {
    pub status: Participation,
    /// Option value at `mean + phi_d` minus the testing fee.
    pub slack: f64,
}

/// The participation slack `option_value(G, mean + phi_d) - phi_t`.
pub fn participation(tf: &TestFeeStructure) -> ParticipationReport {
    let cutoff = tf.g.mean() + tf.fees.phi_d;
    let slack = tf.g.option_value(cutoff) - tf.fees.phi_t;
    ParticipationReport {
        status: if slack > 0.0 {
            Participation::StrictHold
        } else {
            Participation::Fail
        },
        slack,
    }
}

/// All equilibrium disclosure thresholds of `(G, phi_d)`: isolated points
/// and closed intervals, both sorted increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub points: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
}

impl ThresholdSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    /// Largest member (right endpoint of the top interval if it is highest).
    pub fn max_member(&self) -> Option<f64> {
        let p = self.points.last().copied();
        let i = self.intervals.last().map(|&(_, hi)| hi);
        match (p, i) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }

    pub fn contains(&self, tau: f64, tol: f64) -> bool {
        self.points.iter().any(|&p| (p - tau).abs() <= tol)
            || self
                .intervals
                .iter()
                .any(|&(lo, hi)| tau >= lo - tol && tau <= hi + tol)
    }

    /// Whether `tau` lies inside (or at the edge of) some interval member.
    pub fn in_interval(&self, tau: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(lo, hi)| tau >= lo - tol && tau <= hi + tol)
    }

    /// Representative members: points, plus each interval's endpoints and
    /// `inner` interior samples.
    pub fn sample_members(&self, inner: usize) -> Vec<f64> {
        let mut out = self.points.clone();
        for &(lo, hi) in &self.intervals {
            for k in 0..=(inner + 1) {
                out.push(lo + (hi - lo) * k as f64 / (inner + 1) as f64);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        out
    }
}

/// Defect function `D(tau) = I(tau) - phi_d * G(tau)`; equilibrium
/// thresholds are exactly its zeros (with positive mass below, or at the
/// support bottom when the disclosure fee is zero).
pub fn defect(g: &MixedDistribution, phi_d: f64, tau: f64) -> f64 {
    if tau >= g.upper() {
        // Above the support the threshold equation reads tau - phi_d = mean.
        return tau - g.mean() - phi_d;
    }
    g.cdf_integral(tau) - phi_d * g.cdf(tau)
}

pub fn equilibrium_thresholds(g: &MixedDistribution, phi_d: f64) -> ThresholdSet {
    let scale = (g.upper() - g.lower()).max(1.0);
    let slack = 1e-9 * scale;
    let mut points: Vec<f64> = Vec::new();
    let mut intervals: Vec<(f64, f64)> = Vec::new();

    let mean = g.mean();
    // Pooling candidate above the support: everyone conceals, the
    // non-disclosure price is the mean.
    if mean + phi_d >= g.upper() - CDF_TOL * scale {
        points.push(mean + phi_d);
    }

    for p in g.pieces().iter().rev() {
        let ia = g.cdf_integral(p.a);
        let width = p.b - p.a;
        match p.form {
            PieceForm::Flat(c) => {
                if c <= CDF_TOL {
                    continue; // below the support
                }
                let t = phi_d - ia / c;
                if t >= -slack && t < width {
                    points.push(p.a + t.max(0.0));
                }
            }
            PieceForm::Affine { start, slope } => {
                if slope <= 0.0 {
                    if start <= CDF_TOL {
                        continue;
                    }
                    let t = phi_d - ia / start;
                    if t >= -slack && t < width {
                        points.push(p.a + t.max(0.0));
                    }
                    continue;
                }
                // (slope/2) t^2 + (start - phi_d slope) t + (ia - phi_d start) = 0
                let a2 = 0.5 * slope;
                let b1 = start - phi_d * slope;
                let c0 = ia - phi_d * start;
                let disc = b1 * b1 - 4.0 * a2 * c0;
                if disc < 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                for t in [(-b1 - sq) / (2.0 * a2), (-b1 + sq) / (2.0 * a2)] {
                    if t >= -slack && t < width {
                        let t = t.max(0.0);
                        let mass_below = start + slope * t;
                        if mass_below <= CDF_TOL && phi_d > 0.0 {
                            continue; // spurious 0 = 0 root below the support
                        }
                        points.push(p.a + t);
                    }
                }
            }
            PieceForm::ExpCdf { coeff, rate } => {
                // D(a + t) = (ia - coeff*rate) + coeff*(rate - phi_d) e^{t/rate}
                if (rate - phi_d).abs() <= 1e-12 {
                    let defect_const = ia - coeff * rate;
                    if defect_const.abs() <= 1e-11 * (1.0 + ia.abs()) {
                        // Equality holds along the whole piece; it extends to
                        // the right endpoint when no atom breaks it there.
                        let top = if defect(g, phi_d, p.b).abs() <= ROOT_TOL * scale {
                            p.b
                        } else {
                            p.b - 1e-12 * scale
                        };
                        intervals.push((p.a, top));
                    }
                    continue;
                }
                let ratio = (coeff * rate - ia) / (coeff * (rate - phi_d));
                if ratio > 0.0 {
                    let t = rate * ratio.ln();
                    if t >= -slack && t < width {
                        points.push(p.a + t.max(0.0));
                    }
                }
            }
        }
    }

    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-11 * scale);
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Drop points swallowed by an interval.
    let tol = 1e-11 * scale;
    points.retain(|&p| {
        !intervals
            .iter()
            .any(|&(lo, hi)| p >= lo - tol && p <= hi + tol)
    });
    ThresholdSet { points, intervals }
}

/// Mode for [`highest_threshold`]: `Weak` returns the maximum member;
/// `Strict` additionally certifies that the defect stays strictly positive
/// above it (which fails exactly when the top member sits in an interval).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy)]
pub struct HighestThreshold {
    pub tau: f64,
    /// `Some(strict)` in `Strict` mode, `None` in `Weak`.
    pub strict: Option<bool>,
}

pub fn highest_threshold(
    g: &MixedDistribution,
    phi_d: f64,
    mode: ThresholdMode,
) -> Result<HighestThreshold> {
    let set = equilibrium_thresholds(g, phi_d);
    let tau = set.max_member().ok_or(Error::NoThreshold)?;
    let strict = match mode {
        ThresholdMode::Weak => None,
        ThresholdMode::Strict => {
            let scale = (g.upper() - g.lower()).max(1.0);
            let hi = g.upper().max(g.mean() + phi_d);
            let mut ok = !set.in_interval(tau, 1e-11 * scale);
            if ok && hi > tau {
                for k in 1..=200 {
                    let t = tau + (hi - tau) * k as f64 / 200.0;
                    if defect(g, phi_d, t) <= 1e-12 * scale {
                        ok = false;
                        break;
                    }
                }
            }
            Some(ok)
        }
    };
    Ok(HighestThreshold { tau, strict })
}

/// Outcome of the adversarial equilibrium.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOutcome {
    pub tau: f64,
    /// Probability the asset is tested; 0 or 1 under the participation
    /// dichotomy.
    pub tested: f64,
    pub disclosure_prob: f64,
    pub nondisclosure_price: f64,
    pub revenue: f64,
}

/// Worst-case equilibrium for the intermediary. If participation fails, the
/// no-testing equilibrium yields zero revenue. Otherwise the asset is tested
/// and the agent conceals at the weak-highest threshold. A negative
/// disclosure fee has no equality root at or above the support bottom; every
/// score discloses and revenue is `phi_t + phi_d`.
pub fn adversarial_outcome(tf: &TestFeeStructure) -> EquilibriumOutcome {
    let g = &tf.g;
    let Fees { phi_t, phi_d } = tf.fees;
    let mean = g.mean();
    let part = participation(tf);

    if phi_d < 0.0 {
        let tested = if part.status == Participation::StrictHold {
            1.0
        } else {
            0.0
        };
        return EquilibriumOutcome {
            tau: g.support_min(),
            tested,
            disclosure_prob: tested,
            nondisclosure_price: if tested > 0.0 { g.lower() } else { mean },
            revenue: tested * (phi_t + phi_d),
        };
    }

    let tau = highest_threshold(g, phi_d, ThresholdMode::Weak)
        .expect("a weak-highest threshold exists for nonnegative disclosure fees")
        .tau;
    if part.status == Participation::Fail {
        return EquilibriumOutcome {
            tau,
            tested: 0.0,
            disclosure_prob: 0.0,
            nondisclosure_price: mean,
            revenue: 0.0,
        };
    }
    let disclosure_prob = 1.0 - g.cdf(tau);
    EquilibriumOutcome {
        tau,
        tested: 1.0,
        disclosure_prob,
        nondisclosure_price: (tau - phi_d).clamp(g.lower(), mean),
        revenue: phi_t + phi_d * disclosure_prob,
    }
}

/// Revenue at a specific equilibrium threshold, `phi_t + phi_d (1 - G(tau))`.
/// `tau` must be a member of the threshold set within tolerance `1e-9`.
pub fn revenue_at(tf: &TestFeeStructure, tau: f64) -> Result<f64> {
    let set = equilibrium_thresholds(&tf.g, tf.fees.phi_d);
    if !set.contains(tau, 1e-9) {
        return Err(Error::NotAThreshold(tau));
    }
    Ok(tf.fees.phi_t + tf.fees.phi_d * (1.0 - tf.g.cdf(tau)))
}
