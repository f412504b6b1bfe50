//! Brute-force equilibrium enumeration for finite-score instances.
//!
//! Candidate non-disclosure prices are exhaustive for finite support because
//! best responses are monotone in the score: any equilibrium conceal set is a
//! prefix of the support, possibly with mixing at its top atom. The oracle
//! enumerates every prefix, every mixed-at-atom solution, and the no-testing
//! equilibrium, certifying each profile score by score. It is the ground
//! truth the analytic engine is tested against.

use crate::equilibrium::{participation, Fees, Participation, TestFeeStructure, ThresholdMode};
use crate::error::{Error, Result};
use crate::measure::FinitePmf;

/// Tolerance for weak best-response checks.
const BR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// The asset is never tested; the market prices non-disclosure at the mean.
    NoTest,
    /// Pure threshold equilibrium: the threshold score conceals.
    Threshold,
    /// The indifferent atom discloses with interior probability `mix_lambda`.
    MixedAtAtom,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleEquilibrium {
    pub kind: OracleKind,
    /// Threshold score or mixing atom; the mean for `NoTest`.
    pub tau_or_atom: f64,
    /// Disclosure probability of the mixing atom (`MixedAtAtom` only).
    pub mix_lambda: Option<f64>,
    pub nondisclosure_price: f64,
    pub disclosure_prob: f64,
    pub revenue: f64,
}

/// Enumerates the outcome-distinct equilibria of `(pmf, fees)`.
///
/// With a negative disclosure fee no score can weakly prefer concealing, so
/// the only tested profile is full disclosure (reported as a `Threshold` at
/// the bottom score with the worst-case off-path price).
pub fn enumerate_equilibria(pmf: &FinitePmf, fees: Fees) -> Vec<OracleEquilibrium> {
    let pts = pmf.points();
    let n = pts.len();
    let mu = pmf.mean();
    let Fees { phi_t, phi_d } = fees;
    let mut out = Vec::new();

    // Prefix sums of mass and of score * mass.
    let mut cum_mass = vec![0.0_f64; n + 1];
    let mut cum_sm = vec![0.0_f64; n + 1];
    for (i, &(s, m)) in pts.iter().enumerate() {
        cum_mass[i + 1] = cum_mass[i] + m;
        cum_sm[i + 1] = cum_sm[i] + s * m;
    }
    // Agent's net gain from testing, given price p_n and threshold index k:
    // every score above the conceal set nets (s - phi_d - p_n).
    let testing_gain = |k: usize, p_n: f64| -> f64 {
        (cum_sm[n] - cum_sm[k]) - (cum_mass[n] - cum_mass[k]) * (phi_d + p_n)
    };

    if phi_t >= pmf.option_value(mu + phi_d) - BR_TOL {
        out.push(OracleEquilibrium {
            kind: OracleKind::NoTest,
            tau_or_atom: mu,
            mix_lambda: None,
            nondisclosure_price: mu,
            disclosure_prob: 0.0,
            revenue: 0.0,
        });
    }

    if phi_d < 0.0 {
        let p_n = pts[0].0;
        if phi_t <= testing_gain(0, p_n) + BR_TOL {
            out.push(OracleEquilibrium {
                kind: OracleKind::Threshold,
                tau_or_atom: pts[0].0,
                mix_lambda: None,
                nondisclosure_price: p_n,
                disclosure_prob: 1.0,
                revenue: phi_t + phi_d,
            });
        }
        return out;
    }

    for k in 1..=n {
        let (s_k, _) = pts[k - 1];
        let p_n = cum_sm[k] / cum_mass[k];
        if s_k - phi_d > p_n + BR_TOL {
            continue; // the top concealer would rather disclose
        }
        if k < n && pts[k].0 - phi_d < p_n - BR_TOL {
            continue; // the bottom discloser would rather conceal
        }
        if phi_t > testing_gain(k, p_n) + BR_TOL {
            continue; // paying the testing fee is not sequentially rational
        }
        let disclosure_prob = 1.0 - cum_mass[k];
        out.push(OracleEquilibrium {
            kind: OracleKind::Threshold,
            tau_or_atom: s_k,
            mix_lambda: None,
            nondisclosure_price: p_n,
            disclosure_prob,
            revenue: phi_t + phi_d * disclosure_prob,
        });
    }

    if phi_d > 0.0 {
        for k in 1..=n {
            let (s_k, m_k) = pts[k - 1];
            let p_n = s_k - phi_d;
            // p_n(lambda) = [cum_sm + (1-lambda) m_k s_k] / [cum_mass + (1-lambda) m_k]
            let conceal_share = (p_n * cum_mass[k - 1] - cum_sm[k - 1]) / (m_k * phi_d);
            if !(conceal_share > BR_TOL && conceal_share < 1.0 - BR_TOL) {
                continue;
            }
            let lambda = 1.0 - conceal_share;
            if phi_t > testing_gain(k, p_n) + BR_TOL {
                continue;
            }
            let disclosure_prob = 1.0 - cum_mass[k - 1] - conceal_share * m_k;
            out.push(OracleEquilibrium {
                kind: OracleKind::MixedAtAtom,
                tau_or_atom: s_k,
                mix_lambda: Some(lambda),
                nondisclosure_price: p_n,
                disclosure_prob,
                revenue: phi_t + phi_d * disclosure_prob,
            });
        }
    }
    out
}

/// Minimum intermediary revenue across all enumerated equilibria.
pub fn adversarial_revenue_bruteforce(pmf: &FinitePmf, fees: Fees) -> f64 {
    enumerate_equilibria(pmf, fees)
        .iter()
        .map(|e| e.revenue)
        .fold(f64::INFINITY, f64::min)
}

/// The low-revenue bound `delta(eps)` for a support `[lo, hi]` with mean `mu`.
pub fn delta_bound(lo: f64, hi: f64, mu: f64, eps: f64) -> f64 {
    (hi - mu) / (mu - lo) * eps + eps.sqrt() * (hi - mu)
}

/// Cap on `eps` below which the low-revenue witness is guaranteed.
pub fn eps_star(lo: f64, hi: f64, mu: f64) -> f64 {
    ((mu - lo) / (1.0 + hi)).powi(2)
}

/// For a structure admitting an equilibrium within `eps` of the full
/// informational surplus `mu - lo`, produces another equilibrium whose
/// revenue is at most `delta(eps)`: the no-testing equilibrium when
/// participation fails, otherwise a threshold equilibrium with threshold at
/// least `lo + phi_d + sqrt(eps)`.
///
/// The near-full-surplus precondition is checked against the oracle's
/// maximum when the score distribution is finite; otherwise the caller
/// asserts it, and a constructed witness above `delta(eps)` certifies the
/// precondition false (no equilibrium can then be near full surplus).
pub fn low_revenue_witness(
    tf: &TestFeeStructure,
    eps: f64,
) -> Result<(OracleEquilibrium, f64)> {
    let lo = tf.g.lower();
    let hi = tf.g.upper();
    let mu = tf.g.mean();
    let cap = eps_star(lo, hi, mu);
    if !(eps > 0.0) || eps > cap {
        return Err(Error::InvalidEps { eps, cap });
    }
    let full_surplus = mu - lo;
    let bound = delta_bound(lo, hi, mu, eps);

    if let Some(pmf) = tf.g.as_finite_pmf() {
        let max_revenue = enumerate_equilibria(&pmf, tf.fees)
            .iter()
            .map(|e| e.revenue)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_revenue < full_surplus - eps - BR_TOL {
            return Err(Error::NotNearFullSurplus { eps, max_revenue });
        }
    }

    if participation(tf).status == Participation::Fail {
        return Ok((
            OracleEquilibrium {
                kind: OracleKind::NoTest,
                tau_or_atom: mu,
                mix_lambda: None,
                nondisclosure_price: mu,
                disclosure_prob: 0.0,
                revenue: 0.0,
            },
            bound,
        ));
    }

    let tau = crate::equilibrium::highest_threshold(&tf.g, tf.fees.phi_d, ThresholdMode::Weak)?
        .tau;
    let disclosure_prob = 1.0 - tf.g.cdf(tau);
    let revenue = tf.fees.phi_t + tf.fees.phi_d * disclosure_prob;
    if tau >= lo + tf.fees.phi_d + eps.sqrt() - BR_TOL && revenue <= bound + BR_TOL {
        return Ok((
            OracleEquilibrium {
                kind: OracleKind::Threshold,
                tau_or_atom: tau,
                mix_lambda: None,
                nondisclosure_price: tau - tf.fees.phi_d,
                disclosure_prob,
                revenue,
            },
            bound,
        ));
    }
    // Even the adversarial equilibrium earns more than delta(eps), so no
    // equilibrium is within eps of full surplus.
    Err(Error::NotNearFullSurplus {
        eps,
        max_revenue: revenue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> FinitePmf {
        FinitePmf::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap()
    }

    fn three_score(p: f64) -> FinitePmf {
        FinitePmf::new(vec![
            (0.0, (1.0 - p) / 2.0),
            (0.75, 2.0 * p),
            (1.0, (1.0 - 3.0 * p) / 2.0),
        ])
        .unwrap()
    }

    #[test]
    fn enumerate_binary_high_fee() {
        // Fee 0.6: conceal-zero threshold, the mixed equilibrium at the top
        // atom with lambda = 1/3, no-disclosure, and the no-testing
        // equilibrium.
        let eqs = enumerate_equilibria(
            &binary(),
            Fees {
                phi_t: 0.0,
                phi_d: 0.6,
            },
        );
        let mut probs: Vec<f64> = eqs.iter().map(|e| e.disclosure_prob).collect();
        probs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(eqs.len(), 4);
        assert!((probs[0] - 0.0).abs() < 1e-12); // NoTest
        assert!((probs[1] - 0.0).abs() < 1e-12); // conceal-everything threshold
        assert!((probs[2] - 1.0 / 6.0).abs() < 1e-12);
        assert!((probs[3] - 0.5).abs() < 1e-12);
        let mixed = eqs
            .iter()
            .find(|e| e.kind == OracleKind::MixedAtAtom)
            .unwrap();
        assert!((mixed.mix_lambda.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((mixed.revenue - 0.1).abs() < 1e-12);
        let mut revs: Vec<f64> = eqs.iter().map(|e| e.revenue).collect();
        revs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((revs[3] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn enumerate_binary_low_fee_unique() {
        let eqs = enumerate_equilibria(
            &binary(),
            Fees {
                phi_t: 0.0,
                phi_d: 0.4,
            },
        );
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].kind, OracleKind::Threshold);
        assert!((eqs[0].disclosure_prob - 0.5).abs() < 1e-12);
    }

    #[test]
    fn three_score_bad_equilibrium_appears_for_large_p() {
        // At p = 0.2 > 1/9 the middle score 3/4 nets 0.26 from disclosing,
        // below the conceal price 3p/(1+3p) = 0.375, so the equilibrium that
        // conceals {0, 3/4} exists with disclosure (1-3p)/2 = 0.2.
        let eqs = enumerate_equilibria(
            &three_score(0.2),
            Fees {
                phi_t: 0.0,
                phi_d: 0.49,
            },
        );
        let bad = eqs
            .iter()
            .find(|e| e.kind == OracleKind::Threshold && (e.tau_or_atom - 0.75).abs() < 1e-12)
            .expect("bad equilibrium concealing score 3/4");
        assert!((bad.disclosure_prob - 0.2).abs() < 1e-12);
        assert!((bad.nondisclosure_price - 0.375).abs() < 1e-12);
        // At p = 1/9 it is ruled out.
        let eqs = enumerate_equilibria(
            &three_score(1.0 / 9.0),
            Fees {
                phi_t: 0.0,
                phi_d: 0.49,
            },
        );
        assert!(eqs
            .iter()
            .all(|e| !(e.kind == OracleKind::Threshold && (e.tau_or_atom - 0.75).abs() < 1e-12)));
    }

    #[test]
    fn bruteforce_examples() {
        assert!(
            (adversarial_revenue_bruteforce(
                &binary(),
                Fees {
                    phi_t: 0.0,
                    phi_d: 0.4
                }
            ) - 0.2)
                .abs()
                < 1e-12
        );
        assert!(
            adversarial_revenue_bruteforce(
                &binary(),
                Fees {
                    phi_t: 0.0,
                    phi_d: 0.6
                }
            )
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn every_equilibrium_is_a_best_response() {
        let fees = [0.1, 0.3, 0.45, 0.5, 0.6, 0.8];
        for pmf in [binary(), three_score(0.2), three_score(1.0 / 9.0)] {
            for &phi_d in &fees {
                let eqs = enumerate_equilibria(&pmf, Fees { phi_t: 0.0, phi_d });
                for e in &eqs {
                    if e.kind == OracleKind::NoTest {
                        continue;
                    }
                    for &(s, _) in pmf.points() {
                        let disclose_payoff = s - phi_d;
                        let conceal_payoff = e.nondisclosure_price;
                        let taken = match e.kind {
                            OracleKind::Threshold => {
                                if s <= e.tau_or_atom {
                                    conceal_payoff
                                } else {
                                    disclose_payoff
                                }
                            }
                            OracleKind::MixedAtAtom => {
                                if (s - e.tau_or_atom).abs() < 1e-15 {
                                    disclose_payoff.max(conceal_payoff)
                                } else if s < e.tau_or_atom {
                                    conceal_payoff
                                } else {
                                    disclose_payoff
                                }
                            }
                            OracleKind::NoTest => unreachable!(),
                        };
                        assert!(
                            disclose_payoff.max(conceal_payoff) - taken <= 1e-12,
                            "score {s} could deviate under fee {phi_d}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn witness_binary_full_surplus_fee() {
        // phi = (0.5, 0): a favorable equilibrium extracts the full surplus
        // 0.5, and the witness is the no-testing equilibrium.
        let tf = TestFeeStructure::new(
            binary().to_mixed(0.0, 1.0).unwrap(),
            Fees {
                phi_t: 0.5,
                phi_d: 0.0,
            },
        );
        let (w, bound) = low_revenue_witness(&tf, 0.04).unwrap();
        assert_eq!(w.kind, OracleKind::NoTest);
        assert_eq!(w.revenue, 0.0);
        assert!((bound - 0.14).abs() < 1e-12);
        assert!((eps_star(0.0, 1.0, 0.5) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn witness_rejects_low_max_revenue() {
        // Max equilibrium revenue 0.2 < 0.5 - 0.01.
        let tf = TestFeeStructure::new(
            binary().to_mixed(0.0, 1.0).unwrap(),
            Fees {
                phi_t: 0.0,
                phi_d: 0.4,
            },
        );
        assert!(matches!(
            low_revenue_witness(&tf, 0.01),
            Err(Error::NotNearFullSurplus { .. })
        ));
    }

    #[test]
    fn witness_rejects_eps_above_cap() {
        let tf = TestFeeStructure::new(
            binary().to_mixed(0.0, 1.0).unwrap(),
            Fees {
                phi_t: 0.5,
                phi_d: 0.0,
            },
        );
        assert!(matches!(
            low_revenue_witness(&tf, 0.1),
            Err(Error::InvalidEps { .. })
        ));
    }
}
