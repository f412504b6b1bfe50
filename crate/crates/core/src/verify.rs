//! Seeded randomized verification suites: engine-vs-oracle agreement and the
//! inequality properties the analytic engine is supposed to satisfy on every
//! instance. Each suite draws its own deterministic stream, so a fixed seed
//! reproduces the report byte for byte. `tol_scale` multiplies every
//! tolerance; shrinking it below the attainable precision makes the suites
//! fail, which exercises the failure path end to end.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::demand::robust_demand;
use crate::designer::{binary_optimal, ses_build, SesParams};
use crate::equilibrium::{
    adversarial_outcome, defect, equilibrium_thresholds, highest_threshold, revenue_at, Fees,
    TestFeeStructure, ThresholdMode,
};
use crate::measure::{discretize, is_mpc, FinitePmf, MixedDistribution, Piece, PieceForm};
use crate::oracle::adversarial_revenue_bruteforce;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

/// Runs every suite. `cases` scales the engine-vs-oracle instance count; the
/// lemma suites run at least 200 cases each regardless.
pub fn run_all(seed: u64, cases: usize, tol_scale: f64) -> VerifyReport {
    let lemma_cases = 200.max(cases / 2);
    VerifyReport {
        suites: vec![
            engine_vs_oracle(seed, cases, tol_scale),
            integration_by_parts(seed ^ 0x11, lemma_cases, tol_scale),
            boundspeed(seed ^ 0x22, lemma_cases, tol_scale),
            weak_highest_grid(seed ^ 0x33, lemma_cases, tol_scale),
            designer_contraction(seed ^ 0x44, lemma_cases, tol_scale),
            revenue_identity(seed ^ 0x55, lemma_cases, tol_scale),
            monotone_robust_demand(seed ^ 0x66, lemma_cases, tol_scale),
        ],
    }
}

pub fn random_pmf(rng: &mut ChaCha8Rng, max_atoms: usize) -> FinitePmf {
    loop {
        let n = rng.gen_range(2..=max_atoms.max(2));
        let mut scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        scores.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        if scores.len() < 2 {
            continue;
        }
        let masses: Vec<f64> = scores.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = masses.iter().sum();
        let points: Vec<(f64, f64)> = scores
            .into_iter()
            .zip(masses.into_iter().map(|m| m / total))
            .collect();
        if let Ok(pmf) = FinitePmf::new(points) {
            return pmf;
        }
    }
}

/// A random mixed distribution on [0, 1]: atoms, affine ramps, and an
/// optional exponential tail.
pub fn random_mixed(rng: &mut ChaCha8Rng) -> MixedDistribution {
    loop {
        let n_cuts = rng.gen_range(1..=3);
        let mut cuts: Vec<f64> = (0..n_cuts).map(|_| rng.gen_range(0.05..0.9)).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 0.05);
        let mut pieces: Vec<Piece> = Vec::new();
        let mut level = 0.0f64;
        let mut cursor = 0.0f64;
        for &c in &cuts {
            let ramp = if rng.gen_bool(0.5) {
                rng.gen_range(0.0..0.25)
            } else {
                0.0
            };
            pieces.push(Piece {
                a: cursor,
                b: c,
                form: if ramp > 0.0 {
                    PieceForm::Affine {
                        start: level,
                        slope: ramp / (c - cursor),
                    }
                } else {
                    PieceForm::Flat(level)
                },
            });
            level += ramp;
            level = (level + rng.gen_range(0.02..0.3)).min(0.97);
            cursor = c;
        }
        let use_exp = rng.gen_bool(0.5) && level > 0.02;
        if use_exp {
            let end_level = rng.gen_range(level.max(0.3)..1.0);
            let rate = (1.0 - cursor) / (end_level / level).ln().max(1e-9);
            pieces.push(Piece {
                a: cursor,
                b: 1.0,
                form: PieceForm::ExpCdf { coeff: level, rate },
            });
        } else {
            pieces.push(Piece {
                a: cursor,
                b: 1.0,
                form: PieceForm::Flat(level),
            });
        }
        if let Ok(d) = MixedDistribution::new(0.0, 1.0, pieces) {
            return d;
        }
    }
}

fn engine_vs_oracle(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let pmf = random_pmf(&mut rng, 12);
        let g = pmf.to_mixed(0.0, 1.0).unwrap();
        for _ in 0..5 {
            let fees = Fees {
                phi_t: rng.gen_range(0.0..0.4),
                phi_d: rng.gen_range(0.0..0.8),
            };
            let engine = adversarial_outcome(&TestFeeStructure::new(g.clone(), fees)).revenue;
            let oracle = adversarial_revenue_bruteforce(&pmf, fees);
            let gap = (engine - oracle).abs();
            worst = worst.max(gap);
            if gap > tol {
                failures += 1;
            }
        }
    }
    SuiteReport {
        name: "engine-vs-oracle adversarial revenue",
        cases: cases * 5,
        failures,
        worst,
    }
}

fn integration_by_parts(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-10 * tol_scale;
    let stieltjes_tol = 1e-3 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for case in 0..cases {
        let d = random_mixed(&mut rng);
        let tau = rng.gen_range(0.0..1.0);
        let g = d.cdf(tau);
        if g <= 1e-9 {
            continue;
        }
        let gap =
            (d.conditional_mean_below(tau).unwrap() * g + d.cdf_integral(tau) - tau * g).abs();
        worst = worst.max(gap);
        if gap > tol {
            failures += 1;
        }
        // Cross-check the partial first moment against summation on a fine
        // discretization every few cases.
        if case % 10 == 0 {
            let pmf = discretize(&d, 10_000).unwrap();
            let summed: f64 = pmf
                .points()
                .iter()
                .filter(|&&(s, _)| s <= tau)
                .map(|&(s, m)| s * m)
                .sum();
            let closed = d.conditional_mean_below(tau).unwrap() * g;
            if (closed - summed).abs() > stieltjes_tol {
                failures += 1;
            }
        }
    }
    SuiteReport {
        name: "integration-by-parts identity",
        cases,
        failures,
        worst,
    }
}

fn boundspeed(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rel_tol = 1e-9 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let d = random_mixed(&mut rng);
        let phi_d = rng.gen_range(0.05..0.6);
        let tau = highest_threshold(&d, phi_d, ThresholdMode::Weak)
            .expect("threshold exists")
            .tau;
        let top = d.upper().max(d.mean() + phi_d);
        if top <= tau {
            continue;
        }
        let mut a = rng.gen_range(tau..=top);
        let mut b = rng.gen_range(tau..=top);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let ia = d.cdf_integral(a);
        let ib = d.cdf_integral(b);
        if ia <= 0.0 {
            continue;
        }
        let excess = ib - ((b - a) / phi_d).exp() * ia * (1.0 + rel_tol);
        worst = worst.max(excess);
        if excess > 0.0 {
            failures += 1;
        }
    }
    SuiteReport {
        name: "integral growth bound above the threshold",
        cases,
        failures,
        worst,
    }
}

fn weak_highest_grid(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-10 * tol_scale;
    let cert_tol = 1e-8 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let d = random_mixed(&mut rng);
        let phi_d = rng.gen_range(0.0..0.8);
        let set = equilibrium_thresholds(&d, phi_d);
        if set.is_empty() {
            failures += 1;
            continue;
        }
        // Every reported member satisfies the threshold equation.
        for tau in set.sample_members(3) {
            if d.cdf(tau) > 1e-12 {
                let cm = if tau >= d.upper() {
                    d.mean()
                } else {
                    d.conditional_mean_below(tau).unwrap()
                };
                let gap = (tau - phi_d - cm).abs();
                worst = worst.max(gap);
                if gap > cert_tol {
                    failures += 1;
                }
            }
        }
        // Above the weak-highest member the defect never goes negative.
        let tau = set.max_member().unwrap();
        let top = d.upper().max(d.mean() + phi_d);
        for k in 1..=200 {
            let t = tau + (top - tau) * k as f64 / 200.0;
            let v = defect(&d, phi_d, t);
            worst = worst.max(-v);
            if v < -tol {
                failures += 1;
                break;
            }
        }
    }
    SuiteReport {
        name: "weak-highest threshold certification",
        cases,
        failures,
        worst,
    }
}

fn designer_contraction(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let lo = rng.gen_range(-0.5..0.5);
        let hi = lo + rng.gen_range(0.5..2.0);
        let mu = rng.gen_range(lo + 0.05 * (hi - lo)..hi - 0.05 * (hi - lo));
        let sol = binary_optimal(lo, hi, mu).expect("valid domain");
        let p_hi = (mu - lo) / (hi - lo);
        let prior = FinitePmf::new(vec![(lo, 1.0 - p_hi), (hi, p_hi)])
            .unwrap()
            .to_mixed(lo, hi)
            .unwrap();
        let rep = is_mpc(&sol.structure.g, &prior, tol).expect("same domain");
        worst = worst.max(rep.max_violation);
        if !rep.is_mpc {
            failures += 1;
        }
        // The implementable structure stays strictly below the relaxed value.
        if !(sol.guaranteed_revenue <= sol.relaxed_revenue + 1e-12) {
            failures += 1;
        }
    }
    SuiteReport {
        name: "designer outputs are contractions",
        cases,
        failures,
        worst,
    }
}

/// Random flat-top step-exponential-step structure whose testing fee binds;
/// used for the revenue identity.
fn random_flat_top_ses(rng: &mut ChaCha8Rng) -> Option<(TestFeeStructure, SesParams)> {
    let phi_d: f64 = rng.gen_range(0.05..0.45);
    let tau1: f64 = rng.gen_range(phi_d..0.7);
    let g: f64 = rng.gen_range(0.1..0.9);
    let max_span = phi_d * (1.0 / g).ln();
    let tau2 = tau1 + rng.gen_range(0.0..1.0) * max_span.min(0.9 - tau1).max(0.0);
    let params = SesParams {
        tau0: tau1 - phi_d,
        tau1,
        tau2,
        tau3: 1.0,
        g,
    };
    let built = ses_build(&params, 0.0, 1.0).ok()?;
    let mu = built.tf.g.mean();
    // The identity needs G flat from mu + phi_d up to the top.
    if !(mu + phi_d >= tau2 && mu + phi_d <= 1.0 && !built.degenerate) {
        return None;
    }
    Some((built.tf, params))
}

fn revenue_identity(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-10 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < cases && attempts < cases * 50 {
        attempts += 1;
        let Some((tf, _)) = random_flat_top_ses(&mut rng) else {
            continue;
        };
        accepted += 1;
        let mu = tf.g.mean();
        let phi_d = tf.fees.phi_d;
        let tau = highest_threshold(&tf.g, phi_d, ThresholdMode::Weak)
            .expect("threshold exists")
            .tau;
        let lhs = revenue_at(&tf, tau).expect("weak-highest is a member");
        let rhs = tf.g.cdf_integral(mu + phi_d) - tf.g.cdf_integral(tau);
        let gap = (lhs - rhs).abs();
        worst = worst.max(gap);
        if gap > tol {
            failures += 1;
        }
    }
    if accepted < cases {
        failures += cases - accepted;
    }
    SuiteReport {
        name: "binding-fee flat-top revenue identity",
        cases,
        failures,
        worst,
    }
}

fn monotone_robust_demand(seed: u64, cases: usize, tol_scale: f64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-12 * tol_scale;
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let d = random_mixed(&mut rng);
        let steps = rng.gen_range(10..30);
        let grid: Vec<f64> = (0..steps)
            .map(|k| 0.7 * k as f64 / (steps - 1) as f64)
            .collect();
        let curve = robust_demand(&d, &grid);
        for w in curve.windows(2) {
            let rise = w[1].1 - w[0].1;
            worst = worst.max(rise);
            if rise > tol {
                failures += 1;
                break;
            }
        }
    }
    SuiteReport {
        name: "robust demand is nonincreasing",
        cases,
        failures,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_at_default_tolerances() {
        let report = run_all(7, 100, 1.0);
        for s in &report.suites {
            assert!(
                s.passed(),
                "suite '{}' failed {}/{} (worst {:.3e})",
                s.name,
                s.failures,
                s.cases,
                s.worst
            );
        }
    }

    #[test]
    fn suites_fail_under_absurd_tolerance() {
        let report = run_all(7, 40, 1e-12);
        assert!(!report.passed());
    }

    #[test]
    fn reports_are_seed_deterministic() {
        let a = run_all(123, 50, 1.0);
        let b = run_all(123, 50, 1.0);
        for (x, y) in a.suites.iter().zip(b.suites.iter()) {
            assert_eq!(x.failures, y.failures);
            assert_eq!(x.worst.to_bits(), y.worst.to_bits());
        }
    }
}
