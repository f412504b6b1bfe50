//! Construction of robustly optimal test-fee structures.
//!
//! The step-exponential-step family: an atom `g` at `tau0`, a flat step to
//! `tau1`, an exponential segment of rate `tau1 - tau0` up to `tau2`, a gap
//! to `tau3`, and a top atom closing the distribution. Fees are tied to the
//! shape: the disclosure fee is the step width `tau1 - tau0`, and the testing
//! fee makes participation exactly binding. For a binary-support prior the
//! optimum is closed form; for everything else a seeded multi-start pattern
//! search over `(phi_d, tau1, tau2, tau3)` maximizes the relaxed revenue with
//! the atom size recovered from mean preservation, followed by exact
//! feasibility validation.
//!
//! Exactly-optimal structures admit an interval of equilibria and guarantee
//! nothing; shaving the disclosure fee by a small `eps` restores a unique
//! strict equilibrium at revenue within `O(eps)` of the relaxed value, which
//! is what [`epsilon_implement`] produces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{adversarial_outcome, Fees, TestFeeStructure};
use crate::error::{Error, Result};
use crate::measure::{is_mpc, is_mpc_with_grid, MixedDistribution, Piece, PieceForm, MPC_TOL};

/// Default epsilon for implementable structures, as a fraction of the value
/// range.
pub const DEFAULT_EPS_FRACTION: f64 = 1e-4;

/// Parameters of a step-exponential-step distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesParams {
    pub tau0: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    /// Mass of the bottom atom at `tau0`.
    pub g: f64,
}

impl SesParams {
    /// Disclosure fee implied by the shape.
    pub fn phi_d(&self) -> f64 {
        self.tau1 - self.tau0
    }
}

/// A built step-exponential-step structure; `degenerate` records that the
/// shape's testing fee came out negative and was clamped to zero, which
/// happens when the top atom sits below `mean + phi_d`.
#[derive(Debug, Clone)]
pub struct SesStructure {
    pub params: SesParams,
    pub tf: TestFeeStructure,
    pub degenerate: bool,
}

/// A solution of the relaxed design problem plus its implementable version.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub params: SesParams,
    /// The exactly-optimal structure (interval-degenerate under adversarial
    /// play).
    pub structure: TestFeeStructure,
    /// The relaxed-problem threshold, `tau1`.
    pub tau: f64,
    pub relaxed_revenue: f64,
    /// The same test with the disclosure fee shaved by the configured eps.
    pub implementable: TestFeeStructure,
    /// Adversarial revenue of `implementable`.
    pub guaranteed_revenue: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeConfig {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub xtol: f64,
    pub penalty_weight: f64,
    /// Epsilon for the implementable structure, as a fraction of the range.
    pub eps: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            starts: 24,
            seed: 7,
            max_iter: 400,
            xtol: 1e-10,
            penalty_weight: 1e4,
            eps: DEFAULT_EPS_FRACTION,
        }
    }
}

/// Tight upper bound on the maximal revenue guarantee:
/// `(hi - mu) * (1 - exp((lo - mu)/(hi - mu)))`.
pub fn upper_bound(theta_lo: f64, theta_hi: f64, mu: f64) -> Result<f64> {
    if !(theta_lo < mu && mu < theta_hi) {
        return Err(Error::DomainError {
            lo: theta_lo,
            mean: mu,
            hi: theta_hi,
        });
    }
    Ok((theta_hi - mu) * (1.0 - ((theta_lo - mu) / (theta_hi - mu)).exp()))
}

/// Closed-form optimum for a binary-support prior: no testing fee, a
/// disclosure fee of `hi - mu`, and a score distribution with an atom
/// `exp((lo - mu)/(hi - mu))` at `lo`, a gap, and an exponential segment up
/// to `hi` with no top atom. Attains [`upper_bound`].
pub fn binary_optimal(theta_lo: f64, theta_hi: f64, mu: f64) -> Result<RelaxedSolution> {
    binary_optimal_with_eps(
        theta_lo,
        theta_hi,
        mu,
        DEFAULT_EPS_FRACTION * (theta_hi - theta_lo),
    )
}

pub fn binary_optimal_with_eps(
    theta_lo: f64,
    theta_hi: f64,
    mu: f64,
    eps: f64,
) -> Result<RelaxedSolution> {
    let bound = upper_bound(theta_lo, theta_hi, mu)?;
    let phi_d = theta_hi - mu;
    let tau = theta_lo + theta_hi - mu;
    let g_star = ((theta_lo - mu) / phi_d).exp();
    let dist = MixedDistribution::new(
        theta_lo,
        theta_hi,
        vec![
            Piece {
                a: theta_lo,
                b: tau,
                form: PieceForm::Flat(g_star),
            },
            Piece {
                a: tau,
                b: theta_hi,
                form: PieceForm::ExpCdf {
                    coeff: g_star,
                    rate: phi_d,
                },
            },
        ],
    )?;
    let params = SesParams {
        tau0: theta_lo,
        tau1: tau,
        tau2: theta_hi,
        tau3: theta_hi,
        g: g_star,
    };
    let structure = TestFeeStructure::new(dist, Fees { phi_t: 0.0, phi_d });
    let sol = RelaxedSolution {
        params,
        structure: structure.clone(),
        tau,
        relaxed_revenue: bound,
        implementable: structure.clone(),
        guaranteed_revenue: 0.0,
    };
    finish_solution(sol, eps)
}

fn finish_solution(mut sol: RelaxedSolution, eps: f64) -> Result<RelaxedSolution> {
    sol.implementable = epsilon_implement(&sol, eps)?;
    sol.guaranteed_revenue = adversarial_outcome(&sol.implementable).revenue;
    Ok(sol)
}

/// Builds the step-exponential-step distribution and its fees on
/// `[theta_lo, theta_hi]`.
pub fn ses_build(p: &SesParams, theta_lo: f64, theta_hi: f64) -> Result<SesStructure> {
    let SesParams {
        tau0,
        tau1,
        tau2,
        tau3,
        g,
    } = *p;
    let phi_d = tau1 - tau0;
    if !(tau0 >= theta_lo - 1e-12
        && tau0 < tau1
        && tau1 <= tau2
        && tau2 <= tau3
        && tau3 <= theta_hi + 1e-12)
    {
        return Err(Error::InvalidParams(format!(
            "need theta_lo <= tau0 < tau1 <= tau2 <= tau3 <= theta_hi, got \
             {tau0}, {tau1}, {tau2}, {tau3} on [{theta_lo}, {theta_hi}]"
        )));
    }
    if !(g > 0.0 && g <= 1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!("atom mass {g} outside (0, 1]")));
    }
    let top_level = g * ((tau2 - tau1) / phi_d).exp();
    if top_level > 1.0 + 1e-9 {
        return Err(Error::InvalidParams(format!(
            "exponential segment overshoots: g e^((tau2-tau1)/phi_d) = {top_level}"
        )));
    }
    let top_level = top_level.min(1.0);
    let tau3 = tau3.min(theta_hi);

    let mut pieces = Vec::new();
    let mut push = |a: f64, b: f64, form: PieceForm| {
        if b > a {
            pieces.push(Piece { a, b, form });
        }
    };
    push(theta_lo, tau0, PieceForm::Flat(0.0));
    push(tau0, tau1, PieceForm::Flat(g));
    push(
        tau1,
        tau2,
        PieceForm::ExpCdf {
            coeff: g,
            rate: phi_d,
        },
    );
    push(tau2, tau3, PieceForm::Flat(top_level));
    push(tau3, theta_hi, PieceForm::Flat(1.0));
    let dist = MixedDistribution::new(theta_lo, theta_hi, pieces)?;

    let mu = dist.mean();
    let phi_t_raw = (1.0 - top_level) * (tau3 - (mu + phi_d));
    let degenerate = phi_t_raw < 0.0;
    let fees = Fees {
        phi_t: phi_t_raw.max(0.0),
        phi_d,
    };
    Ok(SesStructure {
        params: *p,
        tf: TestFeeStructure::new(dist, fees),
        degenerate,
    })
}

/// Fully revealing benchmark when disclosure cannot be priced: the test is
/// the prior itself, the disclosure fee is zero, and the testing fee is the
/// whole option value at the mean (its supremum; realizing it strictly needs
/// an eps shave).
pub fn zero_disclosure_benchmark(prior: &MixedDistribution) -> TestFeeStructure {
    let phi_t = prior.option_value(prior.mean());
    TestFeeStructure::new(
        prior.clone(),
        Fees {
            phi_t,
            phi_d: 0.0,
        },
    )
}

/// Shaves the disclosure fee by `eps`, turning the interval of equilibria of
/// an exactly-optimal structure into a unique strict threshold at
/// `tau1 - eps`. When the testing fee binds exactly at the new cutoff it is
/// shaved as well.
pub fn epsilon_implement(sol: &RelaxedSolution, eps: f64) -> Result<TestFeeStructure> {
    let phi_d = sol.structure.fees.phi_d;
    if !(eps > 0.0 && eps < phi_d) {
        return Err(Error::EpsTooLarge { eps, max: phi_d });
    }
    let g = &sol.structure.g;
    let mut fees = Fees {
        phi_t: sol.structure.fees.phi_t,
        phi_d: phi_d - eps,
    };
    if g.option_value(g.mean() + fees.phi_d) <= fees.phi_t {
        fees.phi_t -= eps;
    }
    Ok(TestFeeStructure::new(g.clone(), fees))
}

// ---------------------------------------------------------------------------
// Search for arbitrary priors
// ---------------------------------------------------------------------------

/// Search point: `(phi_d, tau1, tau2, tau3)`. The bottom atom `g` is pinned
/// by mean preservation,
/// `g = (tau3 - mu) e^{-(tau2-tau1)/phi_d} / (phi_d + tau3 - tau2)`,
/// so every point in the box automatically matches the prior mean; the
/// remaining constraints (ordering, `G <= 1`, the weak-highest-threshold
/// inequality `tau3 >= mu + phi_d`, and mean-preserving contraction) are
/// enforced by penalty and then exactly.
#[derive(Debug, Clone, Copy)]
struct SearchPoint {
    x: [f64; 4],
}

struct Problem<'a> {
    prior: &'a MixedDistribution,
    lo: f64,
    hi: f64,
    mu: f64,
    penalty_weight: f64,
    /// MPC refinement grid used inside the search.
    grid: usize,
    /// Require the exact contraction certificate rather than penalizing.
    hard: bool,
}

struct Eval {
    score: f64,
    violation: f64,
    candidate: Option<SesParams>,
}

impl Problem<'_> {
    fn evaluate(&self, pt: &SearchPoint) -> Eval {
        let [phi_d, tau1, tau2, tau3] = pt.x;
        let range = self.hi - self.lo;
        let infeasible = |v: f64| Eval {
            score: -self.penalty_weight * (v / range + 1.0),
            violation: v,
            candidate: None,
        };
        let mut v_order = 0.0_f64;
        v_order += (self.lo - (tau1 - phi_d)).max(0.0);
        v_order += (tau1 - tau2).max(0.0);
        v_order += (tau2 - tau3).max(0.0);
        v_order += (tau3 - self.hi).max(0.0);
        v_order += (self.mu + phi_d - tau3).max(0.0);
        v_order += (tau2 - (self.mu + phi_d)).max(0.0);
        if v_order > 0.0 {
            return infeasible(v_order);
        }
        let top_level = (tau3 - self.mu) / (phi_d + tau3 - tau2);
        let g = top_level * (-(tau2 - tau1) / phi_d).exp();
        if !(g > 1e-300 && top_level <= 1.0 + 1e-12) {
            return infeasible(1.0);
        }
        let params = SesParams {
            tau0: tau1 - phi_d,
            tau1,
            tau2,
            tau3,
            g,
        };
        let built = match ses_build(&params, self.lo, self.hi) {
            Ok(b) => b,
            Err(_) => return infeasible(1.0),
        };
        let mpc = match is_mpc_with_grid(&built.tf.g, self.prior, 0.0, self.grid) {
            Ok(r) => r,
            Err(_) => return infeasible(1.0),
        };
        let violation = mpc.max_violation.max(0.0);
        let revenue = built.tf.fees.phi_t + built.tf.fees.phi_d * (1.0 - g);
        let score = if self.hard {
            if violation > 1e-12 * range {
                -self.penalty_weight * (1.0 + violation / range)
            } else {
                revenue
            }
        } else {
            revenue - self.penalty_weight * violation / range
        };
        Eval {
            score,
            violation,
            candidate: Some(params),
        }
    }
}

fn clamp_point(pt: &mut SearchPoint, lo: f64, hi: f64, mu: f64) {
    let range = hi - lo;
    pt.x[0] = pt.x[0].clamp(1e-4 * range, hi - mu);
    for i in 1..4 {
        pt.x[i] = pt.x[i].clamp(lo, hi);
    }
}

/// Compass pattern search with per-coordinate scaling; moves to the best
/// improving neighbor, halving the step when none improves.
fn pattern_search(problem: &Problem, start: SearchPoint, max_iter: usize, xtol: f64) -> SearchPoint {
    let range = problem.hi - problem.lo;
    let scales = [problem.hi - problem.mu, range, range, range];
    let mut current = start;
    clamp_point(&mut current, problem.lo, problem.hi, problem.mu);
    let mut best_score = problem.evaluate(&current).score;
    let mut step = 0.25;
    for _ in 0..max_iter {
        if step < xtol {
            break;
        }
        let mut best_neighbor: Option<(f64, SearchPoint)> = None;
        for i in 0..4 {
            for dir in [-1.0, 1.0] {
                let mut cand = current;
                cand.x[i] += dir * step * scales[i];
                clamp_point(&mut cand, problem.lo, problem.hi, problem.mu);
                let e = problem.evaluate(&cand);
                if best_neighbor
                    .as_ref()
                    .map(|(s, _)| e.score > *s)
                    .unwrap_or(true)
                {
                    best_neighbor = Some((e.score, cand));
                }
            }
        }
        match best_neighbor {
            Some((s, cand)) if s > best_score + 1e-15 => {
                best_score = s;
                current = cand;
            }
            _ => step *= 0.5,
        }
    }
    current
}

/// Pulls an infeasible point back toward full pooling (a single atom at the
/// mean, feasible for every prior) until the exact contraction check passes.
fn pull_feasible(problem: &Problem, pt: SearchPoint) -> SearchPoint {
    let feasible = |p: &SearchPoint| {
        let e = problem.evaluate(p);
        e.candidate.is_some() && e.violation <= 1e-12 * (problem.hi - problem.lo)
    };
    if feasible(&pt) {
        return pt;
    }
    let phi_d = pt.x[0];
    let pool = SearchPoint {
        x: [
            phi_d,
            problem.mu + phi_d,
            problem.mu + phi_d,
            problem.mu + phi_d,
        ],
    };
    let blend = |t: f64| {
        let mut q = pt;
        for i in 0..4 {
            q.x[i] = pt.x[i] + t * (pool.x[i] - pt.x[i]);
        }
        clamp_point(&mut q, problem.lo, problem.hi, problem.mu);
        q
    };
    if !feasible(&pool) {
        return pool; // degenerate prior ranges only; the caller re-validates
    }
    let (mut t_lo, mut t_hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (t_lo + t_hi);
        if feasible(&blend(mid)) {
            t_hi = mid;
        } else {
            t_lo = mid;
        }
    }
    blend(t_hi)
}

/// Maximizes `phi_t + phi_d (1 - G(tau1))` over the step-exponential-step
/// family subject to mean preservation, the contraction constraints, and the
/// weak-highest-threshold inequalities, with `tau = tau1` the relaxed
/// threshold. Deterministic for a fixed `cfg.seed`.
pub fn optimize(prior: &MixedDistribution, cfg: &OptimizeConfig) -> Result<RelaxedSolution> {
    let lo = prior.lower();
    let hi = prior.upper();
    let mu = prior.mean();
    if !(lo < mu && mu < hi) {
        return Err(Error::DomainError { lo, mean: mu, hi });
    }
    let range = hi - lo;

    let soft = Problem {
        prior,
        lo,
        hi,
        mu,
        penalty_weight: cfg.penalty_weight,
        grid: 256,
        hard: false,
    };
    let hard = Problem {
        prior,
        lo,
        hi,
        mu,
        penalty_weight: cfg.penalty_weight,
        grid: 512,
        hard: true,
    };

    let mut starts: Vec<SearchPoint> = Vec::new();
    // The binary-prior optimum; exact for binary supports, a corner probe
    // otherwise.
    starts.push(SearchPoint {
        x: [hi - mu, lo + (hi - mu), hi, hi],
    });
    // A mid-range interior shape.
    starts.push(SearchPoint {
        x: [
            0.5 * (hi - mu),
            lo + 0.5 * (mu - lo) + 0.5 * (hi - mu),
            mu + 0.25 * (hi - mu),
            0.5 * (mu + 0.5 * (hi - mu) + hi),
        ],
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while starts.len() < cfg.starts.max(2) {
        let phi_d = (hi - mu) * rng.gen_range(0.1..1.0);
        let tau1 = lo + phi_d + rng.gen_range(0.0..1.0) * (mu - lo);
        let tau2 = tau1 + rng.gen_range(0.0..1.0) * (mu + phi_d - tau1).max(0.0);
        let tau3 = (mu + phi_d) + rng.gen_range(0.0..1.0) * (hi - (mu + phi_d)).max(0.0);
        starts.push(SearchPoint {
            x: [phi_d, tau1, tau2, tau3],
        });
    }

    // Phase 1: penalty search from every start.
    let mut phase1: Vec<(f64, SearchPoint)> = starts
        .iter()
        .map(|s| {
            let p = pattern_search(&soft, *s, cfg.max_iter, cfg.xtol);
            (soft.evaluate(&p).score, p)
        })
        .collect();
    phase1.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| lex_cmp(&a.1.x, &b.1.x))
    });

    // Phase 2: exact-feasibility polish of the leading candidates.
    let mut best: Option<(f64, SesParams)> = None;
    for (_, pt) in phase1.iter().take(6) {
        let start = pull_feasible(&hard, *pt);
        let polished = pattern_search(&hard, start, cfg.max_iter, cfg.xtol);
        let e = hard.evaluate(&polished);
        let Some(params) = e.candidate else { continue };
        if e.violation > 1e-12 * range {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((s, p)) => {
                e.score > *s + 1e-15
                    || ((e.score - *s).abs() <= 1e-15
                        && lex_cmp(
                            &[params.tau0, params.tau1, params.tau2, params.tau3, params.g],
                            &[p.tau0, p.tau1, p.tau2, p.tau3, p.g],
                        ) == std::cmp::Ordering::Less)
            }
        };
        if replace {
            best = Some((e.score, params));
        }
    }
    let (_, params) = best.ok_or(Error::Infeasible)?;

    // Exact validation of the winner.
    let built = ses_build(&params, lo, hi)?;
    let mpc = is_mpc(&built.tf.g, prior, MPC_TOL)?;
    if !mpc.is_mpc || built.degenerate {
        return Err(Error::Infeasible);
    }
    let relaxed_revenue = built.tf.fees.phi_t + built.tf.fees.phi_d * (1.0 - params.g);
    let sol = RelaxedSolution {
        params,
        structure: built.tf.clone(),
        tau: params.tau1,
        relaxed_revenue,
        implementable: built.tf,
        guaranteed_revenue: 0.0,
    };
    let eps = (cfg.eps * range).min(0.5 * params.phi_d());
    finish_solution(sol, eps)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}
