//! Exact calculus for mixed discrete/continuous score distributions.
//!
//! A [`MixedDistribution`] stores a CDF on `[lower, upper]` as an ordered
//! list of pieces, each flat, affine, or exponential. Atoms are CDF jumps at
//! piece boundaries (including the endpoints), never a separate list, so
//! right-continuity has a single source of truth. Every integral used by the
//! equilibrium engine -- `G(x)`, `I(x) = integral of G up to x`, conditional
//! means, option values -- evaluates in closed form, which keeps root finding
//! free of quadrature error.

use crate::error::{Error, Result};

/// Absolute tolerance for CDF-level bookkeeping (jumps, total mass).
pub const CDF_TOL: f64 = 1e-12;

/// Default tolerance for mean-preserving-contraction certification.
pub const MPC_TOL: f64 = 1e-9;

/// Default refinement grid for MPC certification.
pub const MPC_GRID: usize = 2048;

/// Closed form of the CDF on one piece `[a, b)`, anchored at the piece start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceForm {
    /// `G(x) = c`.
    Flat(f64),
    /// `G(x) = start + slope * (x - a)` with `slope >= 0`.
    Affine { start: f64, slope: f64 },
    /// `G(x) = coeff * exp((x - a) / rate)` with `coeff > 0`, `rate > 0`.
    ExpCdf { coeff: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub form: PieceForm,
}

impl Piece {
    /// CDF value at `x` in `[a, b]`.
    fn value(&self, x: f64) -> f64 {
        let t = x - self.a;
        match self.form {
            PieceForm::Flat(c) => c,
            PieceForm::Affine { start, slope } => start + slope * t,
            PieceForm::ExpCdf { coeff, rate } => coeff * (t / rate).exp(),
        }
    }

    /// Integral of the CDF from `a` to `x`, for `x` in `[a, b]`.
    fn integral(&self, x: f64) -> f64 {
        let t = x - self.a;
        match self.form {
            PieceForm::Flat(c) => c * t,
            PieceForm::Affine { start, slope } => start * t + 0.5 * slope * t * t,
            PieceForm::ExpCdf { coeff, rate } => coeff * rate * ((t / rate).exp() - 1.0),
        }
    }

    fn value_at_start(&self) -> f64 {
        match self.form {
            PieceForm::Flat(c) => c,
            PieceForm::Affine { start, .. } => start,
            PieceForm::ExpCdf { coeff, .. } => coeff,
        }
    }
}

/// A CDF on `[lower, upper]` made of flat/affine/exponential pieces.
///
/// Invariants enforced at construction: pieces tile `[lower, upper)` with no
/// gaps or overlaps, the CDF is nondecreasing and right-continuous, every
/// jump is nonnegative, and the left limit at `upper` does not exceed 1. The
/// value at `upper` is 1 by definition; any deficit is the atom at `upper`.
#[derive(Debug, Clone)]
pub struct MixedDistribution {
    lower: f64,
    upper: f64,
    pieces: Vec<Piece>,
    /// `cum[i]` is the integral of the CDF from `lower` to `pieces[i].a`;
    /// the final entry is the integral up to `upper`.
    cum: Vec<f64>,
}

impl MixedDistribution {
    pub fn new(lower: f64, upper: f64, pieces: Vec<Piece>) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidDistribution(format!(
                "support bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidDistribution("no pieces".into()));
        }
        let scale = (upper - lower).max(1.0);
        let first = pieces.first().unwrap();
        let last = pieces.last().unwrap();
        if (first.a - lower).abs() > CDF_TOL * scale || (last.b - upper).abs() > CDF_TOL * scale {
            return Err(Error::InvalidDistribution(
                "pieces must tile [lower, upper)".into(),
            ));
        }
        for w in pieces.windows(2) {
            if (w[0].b - w[1].a).abs() > CDF_TOL * scale {
                return Err(Error::InvalidDistribution(format!(
                    "gap or overlap between pieces at {} vs {}",
                    w[0].b, w[1].a
                )));
            }
        }
        let mut prev_right = 0.0_f64;
        for p in &pieces {
            if !(p.a < p.b) {
                return Err(Error::InvalidDistribution(format!(
                    "piece [{}, {}) is empty or reversed",
                    p.a, p.b
                )));
            }
            match p.form {
                PieceForm::Flat(c) => {
                    if !(0.0..=1.0 + CDF_TOL).contains(&c) {
                        return Err(Error::InvalidDistribution(format!(
                            "flat level {c} outside [0, 1]"
                        )));
                    }
                }
                PieceForm::Affine { start, slope } => {
                    if start < -CDF_TOL || slope < 0.0 {
                        return Err(Error::InvalidDistribution(format!(
                            "affine piece start {start}, slope {slope} not a CDF"
                        )));
                    }
                }
                PieceForm::ExpCdf { coeff, rate } => {
                    if !(coeff > 0.0 && rate > 0.0) {
                        return Err(Error::InvalidDistribution(format!(
                            "exponential piece needs coeff > 0 and rate > 0, got {coeff}, {rate}"
                        )));
                    }
                    if (p.b - p.a) / rate > 700.0 {
                        return Err(Error::InvalidDistribution(
                            "exponential piece exponent overflows".into(),
                        ));
                    }
                }
            }
            // Atom at the piece start: right value minus left limit.
            let jump = p.value_at_start() - prev_right;
            if jump < -CDF_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "negative atom mass {jump} at {}",
                    p.a
                )));
            }
            prev_right = p.value(p.b);
            if prev_right > 1.0 + CDF_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "CDF exceeds 1 ({prev_right}) before {}",
                    p.b
                )));
            }
        }
        let mut cum = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0_f64;
        for p in &pieces {
            cum.push(acc);
            acc += p.integral(p.b);
        }
        cum.push(acc);
        Ok(Self {
            lower,
            upper,
            pieces,
            cum,
        })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece whose `[a, b)` contains `x`; assumes `lower <= x < upper`.
    fn piece_index(&self, x: f64) -> usize {
        match self
            .pieces
            .binary_search_by(|p| p.a.partial_cmp(&x).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Right-continuous CDF. 0 below `lower`, 1 at and above `upper`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let p = &self.pieces[self.piece_index(x)];
        p.value(x).clamp(0.0, 1.0)
    }

    /// Left limit of the CDF at `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x > self.upper {
            return 1.0;
        }
        let i = if x >= self.upper {
            self.pieces.len() - 1
        } else {
            let i = self.piece_index(x);
            if self.pieces[i].a == x && i > 0 {
                i - 1
            } else {
                i
            }
        };
        // x == pieces[i].a only for i == 0; the left limit there is 0.
        if self.pieces[i].a == x {
            return 0.0;
        }
        self.pieces[i].value(x).clamp(0.0, 1.0)
    }

    /// Atom mass at `x` (zero away from jump points).
    pub fn atom_mass(&self, x: f64) -> f64 {
        (self.cdf(x) - self.cdf_left(x)).max(0.0)
    }

    /// All atoms as `(location, mass)` pairs, in increasing order.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut prev_right = 0.0;
        for p in &self.pieces {
            let jump = p.value_at_start() - prev_right;
            if jump > CDF_TOL {
                out.push((p.a, jump));
            }
            prev_right = p.value(p.b);
        }
        let top = 1.0 - prev_right;
        if top > CDF_TOL {
            out.push((self.upper, top));
        }
        out
    }

    /// `I(x)`, the integral of the CDF from `lower` to `x`. Above `upper`
    /// the integrand extends as 1.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return self.cum[self.pieces.len()] + (x - self.upper);
        }
        let i = self.piece_index(x);
        self.cum[i] + self.pieces[i].integral(x)
    }

    /// Total integral `I(upper)`; the mean is `upper - I(upper)`.
    pub fn total_integral(&self) -> f64 {
        self.cum[self.pieces.len()]
    }

    pub fn mean(&self) -> f64 {
        self.upper - self.total_integral()
    }

    /// Lowest score in the support.
    pub fn support_min(&self) -> f64 {
        for p in &self.pieces {
            if p.value_at_start() > CDF_TOL {
                return p.a;
            }
            if p.value(p.b) > CDF_TOL {
                // Mass starts inside this piece (affine from zero).
                return match p.form {
                    PieceForm::Flat(_) => p.b,
                    PieceForm::Affine { .. } | PieceForm::ExpCdf { .. } => p.a,
                };
            }
        }
        self.upper
    }

    /// `E[s | s <= tau]`, the atom at `tau` included.
    pub fn conditional_mean_below(&self, tau: f64) -> Result<f64> {
        let g = self.cdf(tau);
        if g <= 0.0 {
            return Err(Error::ZeroMassBelow(tau));
        }
        if tau >= self.upper {
            return Ok(self.mean());
        }
        Ok(tau - self.cdf_integral(tau) / g)
    }

    /// `integral over [cutoff, upper] of (s - cutoff) dG`, equal to the area
    /// above the CDF from `cutoff` to `upper`. Zero once `cutoff >= upper`.
    pub fn option_value(&self, cutoff: f64) -> f64 {
        ((self.upper - cutoff) - (self.total_integral() - self.cdf_integral(cutoff))).max(0.0)
    }

    /// The distribution as a finite pmf, when its pieces carry no continuous
    /// mass (every piece is flat): atoms are then the whole story.
    pub fn as_finite_pmf(&self) -> Option<FinitePmf> {
        let all_flat = self
            .pieces
            .iter()
            .all(|p| matches!(p.form, PieceForm::Flat(_)));
        if !all_flat {
            return None;
        }
        FinitePmf::new(self.atoms()).ok()
    }
}

/// Outcome of a mean-preserving-contraction check.
#[derive(Debug, Clone, Copy)]
pub struct MpcReport {
    pub is_mpc: bool,
    /// Largest observed value of `I_candidate - I_prior` across checkpoints,
    /// combined with the absolute mean deviation; at most `tol` when `is_mpc`.
    pub max_violation: f64,
}

/// Certifies `candidate` as a mean-preserving contraction of `prior`:
/// `I_candidate(x) <= I_prior(x) + tol` everywhere and equal means within
/// `tol`. Checkpoints are the piece breakpoints of both distributions, the
/// interior crossings of the two CDFs on every overlapping piece pair (the
/// stationary points of the difference of integrals), and a uniform
/// refinement grid.
pub fn is_mpc(
    candidate: &MixedDistribution,
    prior: &MixedDistribution,
    tol: f64,
) -> Result<MpcReport> {
    is_mpc_with_grid(candidate, prior, tol, MPC_GRID)
}

pub fn is_mpc_with_grid(
    candidate: &MixedDistribution,
    prior: &MixedDistribution,
    tol: f64,
    grid: usize,
) -> Result<MpcReport> {
    let scale = (candidate.upper - candidate.lower).max(1.0);
    if (candidate.lower - prior.lower).abs() > CDF_TOL * scale
        || (candidate.upper - prior.upper).abs() > CDF_TOL * scale
    {
        return Err(Error::DomainMismatch {
            lo_a: candidate.lower,
            hi_a: candidate.upper,
            lo_b: prior.lower,
            hi_b: prior.upper,
        });
    }
    let lo = candidate.lower;
    let hi = candidate.upper;
    let mut checkpoints: Vec<f64> = Vec::new();
    for p in candidate.pieces.iter().chain(prior.pieces.iter()) {
        checkpoints.push(p.a);
        checkpoints.push(p.b);
    }
    for i in 0..=grid {
        checkpoints.push(lo + (hi - lo) * (i as f64) / (grid as f64));
    }
    // Stationary points of x -> I_c(x) - I_p(x) are where the CDFs cross.
    for pc in &candidate.pieces {
        for pp in &prior.pieces {
            let a = pc.a.max(pp.a);
            let b = pc.b.min(pp.b);
            if a < b {
                piece_crossings(pc, pp, a, b, &mut checkpoints);
            }
        }
    }
    let mut max_violation = f64::NEG_INFINITY;
    for &x in &checkpoints {
        if !(lo..=hi).contains(&x) {
            continue;
        }
        let d = candidate.cdf_integral(x) - prior.cdf_integral(x);
        if d > max_violation {
            max_violation = d;
        }
    }
    let mean_dev = (candidate.total_integral() - prior.total_integral()).abs();
    let report = MpcReport {
        is_mpc: max_violation <= tol && mean_dev <= tol,
        max_violation: max_violation.max(mean_dev),
    };
    Ok(report)
}

/// Pushes the solutions of `value_c(x) = value_p(x)` on `[a, b]` onto `out`.
fn piece_crossings(pc: &Piece, pp: &Piece, a: f64, b: f64, out: &mut Vec<f64>) {
    use PieceForm::*;
    // Reduce both to (kind, params) with the exponential case kept symbolic.
    let lin = |p: &Piece| -> Option<(f64, f64)> {
        match p.form {
            Flat(c) => Some((c, 0.0)),
            Affine { start, slope } => Some((start - slope * p.a, slope)),
            ExpCdf { .. } => None,
        }
    };
    match (lin(pc), lin(pp)) {
        (Some((c0, c1)), Some((d0, d1))) => {
            // Linear vs linear.
            if (c1 - d1).abs() > 0.0 {
                let x = (d0 - c0) / (c1 - d1);
                if x.is_finite() && x >= a && x <= b {
                    out.push(x);
                }
            }
        }
        (Some((c0, c1)), None) => exp_vs_linear(pp, c0, c1, a, b, out),
        (None, Some((d0, d1))) => exp_vs_linear(pc, d0, d1, a, b, out),
        (None, None) => {
            // exp vs exp: coeff_1 e^{(x-a1)/r1} = coeff_2 e^{(x-a2)/r2}.
            if let (
                ExpCdf {
                    coeff: c1,
                    rate: r1,
                },
                ExpCdf {
                    coeff: c2,
                    rate: r2,
                },
            ) = (pc.form, pp.form)
            {
                let alpha = 1.0 / r1 - 1.0 / r2;
                let beta = (c2.ln() - pp.a / r2) - (c1.ln() - pc.a / r1);
                if alpha.abs() > 1e-300 {
                    let x = beta / alpha;
                    if x.is_finite() && x >= a && x <= b {
                        out.push(x);
                    }
                }
                // Equal rates: either no crossing or identical; endpoints cover it.
            }
        }
    }
}

/// Crossings of an exponential piece with the line `c0 + c1 x` on `[a, b]`.
/// The difference is convex, so there are at most two roots, isolated by the
/// stationary point of the difference and pinned down by bisection.
fn exp_vs_linear(pe: &Piece, c0: f64, c1: f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let (coeff, rate) = match pe.form {
        PieceForm::ExpCdf { coeff, rate } => (coeff, rate),
        _ => unreachable!(),
    };
    let h = |x: f64| coeff * ((x - pe.a) / rate).exp() - (c0 + c1 * x);
    if c1 <= 0.0 {
        // h is strictly increasing: at most one root.
        bisect_root(&h, a, b, out);
        return;
    }
    // Stationary point of h: (coeff/rate) e^{(x-a)/rate} = c1.
    let xs = pe.a + rate * (c1 * rate / coeff).ln();
    if xs > a && xs < b {
        bisect_root(&h, a, xs, out);
        bisect_root(&h, xs, b, out);
    } else {
        bisect_root(&h, a, b, out);
    }
}

/// One root of a monotone `h` on `[a, b]` by bisection, if the sign changes.
fn bisect_root(h: &dyn Fn(f64) -> f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let (ha, hb) = (h(a), h(b));
    if ha == 0.0 {
        out.push(a);
        return;
    }
    if hb == 0.0 {
        out.push(b);
        return;
    }
    if ha.signum() == hb.signum() {
        return;
    }
    let (mut lo, mut hi) = (a, b);
    let mut flo = ha;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = h(mid);
        if fm == 0.0 {
            lo = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    out.push(0.5 * (lo + hi));
}

/// A finite probability mass function with strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    points: Vec<(f64, f64)>,
}

impl FinitePmf {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        let mut total = 0.0;
        for (i, &(s, m)) in points.iter().enumerate() {
            if !s.is_finite() || m <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "pmf point ({s}, {m}) invalid"
                )));
            }
            if i > 0 && s <= points[i - 1].0 {
                return Err(Error::InvalidDistribution(
                    "pmf scores must be strictly increasing".into(),
                ));
            }
            total += m;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "pmf masses sum to {total}, not 1"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|&(s, m)| s * m).sum()
    }

    pub fn option_value(&self, cutoff: f64) -> f64 {
        self.points
            .iter()
            .map(|&(s, m)| m * (s - cutoff).max(0.0))
            .sum()
    }

    /// Wraps the pmf as a piecewise-flat [`MixedDistribution`] on
    /// `[lower, upper]`, which must contain the support.
    pub fn to_mixed(&self, lower: f64, upper: f64) -> Result<MixedDistribution> {
        let first = self.points.first().unwrap().0;
        let last = self.points.last().unwrap().0;
        if first < lower - CDF_TOL || last > upper + CDF_TOL {
            return Err(Error::InvalidDistribution(format!(
                "pmf support [{first}, {last}] outside [{lower}, {upper}]"
            )));
        }
        let mut pieces = Vec::new();
        let mut level = 0.0_f64;
        let mut cursor = lower;
        for &(s, m) in &self.points {
            if s > cursor {
                pieces.push(Piece {
                    a: cursor,
                    b: s,
                    form: PieceForm::Flat(level),
                });
                cursor = s;
            }
            level += m;
        }
        if cursor < upper {
            pieces.push(Piece {
                a: cursor,
                b: upper,
                form: PieceForm::Flat(level.min(1.0)),
            });
        }
        MixedDistribution::new(lower, upper, pieces)
    }
}

/// Splits every continuous piece of `d` into `n` cells, placing each cell's
/// mass at its conditional mean so the result is itself a mean-preserving
/// contraction of `d`. Atoms pass through exactly.
pub fn discretize(d: &MixedDistribution, n: usize) -> Result<FinitePmf> {
    assert!(n >= 2, "discretize needs n >= 2");
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (x, m) in d.atoms() {
        pts.push((x, m));
    }
    for p in d.pieces() {
        let mass = p.value(p.b) - p.value_at_start();
        if mass <= CDF_TOL {
            continue;
        }
        let width = (p.b - p.a) / n as f64;
        for i in 0..n {
            let x0 = p.a + width * i as f64;
            let x1 = if i + 1 == n { p.b } else { p.a + width * (i + 1) as f64 };
            let m = p.value(x1) - p.value(x0);
            if m <= 1e-15 {
                continue;
            }
            // integral of s dG over the cell, by parts (no atoms inside a piece)
            let s_int = x1 * p.value(x1) - x0 * p.value(x0) - (p.integral(x1) - p.integral(x0));
            pts.push((s_int / m, m));
        }
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Merge coincident points (an atom can sit exactly at a cell mean).
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (s, m) in pts {
        match merged.last_mut() {
            Some(last) if (s - last.0).abs() <= 1e-12 => {
                let w = last.1 + m;
                last.0 = (last.0 * last.1 + s * m) / w;
                last.1 = w;
            }
            _ => merged.push((s, m)),
        }
    }
    FinitePmf::new(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Marginal score distribution of the robustly optimal binary test on
    /// [0, 1] with mean 1/2: atom 1/e at 0, flat to 1/2, then exponential.
    pub(crate) fn binary_optimal_star() -> MixedDistribution {
        let g = (-1.0_f64).exp();
        MixedDistribution::new(
            0.0,
            1.0,
            vec![
                Piece {
                    a: 0.0,
                    b: 0.5,
                    form: PieceForm::Flat(g),
                },
                Piece {
                    a: 0.5,
                    b: 1.0,
                    form: PieceForm::ExpCdf {
                        coeff: g,
                        rate: 0.5,
                    },
                },
            ],
        )
        .unwrap()
    }

    pub(crate) fn fully_revealing_binary() -> MixedDistribution {
        FinitePmf::new(vec![(0.0, 0.5), (1.0, 0.5)])
            .unwrap()
            .to_mixed(0.0, 1.0)
            .unwrap()
    }

    pub(crate) fn uniform01() -> MixedDistribution {
        MixedDistribution::new(
            0.0,
            1.0,
            vec![Piece {
                a: 0.0,
                b: 1.0,
                form: PieceForm::Affine {
                    start: 0.0,
                    slope: 1.0,
                },
            }],
        )
        .unwrap()
    }

    #[test]
    fn cdf_examples() {
        let g = binary_optimal_star();
        assert!((g.cdf(0.3) - (-1.0_f64).exp()).abs() < 1e-12);
        assert!((g.cdf(1.0) - 1.0).abs() < 1e-15);
        assert!((g.cdf(0.75) - (-0.5_f64).exp()).abs() < 1e-12);
        assert_eq!(g.cdf(-0.1), 0.0);
        assert_eq!(g.cdf(2.0), 1.0);
    }

    #[test]
    fn cdf_integral_examples() {
        let u = uniform01();
        assert!((u.cdf_integral(1.0) - 0.5).abs() < 1e-15);
        let g = binary_optimal_star();
        assert!((g.cdf_integral(0.75) - 0.5 * (-0.5_f64).exp()).abs() < 1e-12);
        let f = fully_revealing_binary();
        assert!((f.cdf_integral(0.9) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn mean_examples() {
        assert!((fully_revealing_binary().mean() - 0.5).abs() < 1e-15);
        // Point mass at the top of the support.
        let top = FinitePmf::new(vec![(1.0, 1.0)])
            .unwrap()
            .to_mixed(0.0, 1.0)
            .unwrap();
        assert!((top.mean() - 1.0).abs() < 1e-15);
        assert!((binary_optimal_star().mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conditional_mean_examples() {
        let f = fully_revealing_binary();
        assert!((f.conditional_mean_below(0.4).unwrap() - 0.0).abs() < 1e-15);
        let g = binary_optimal_star();
        assert!((g.conditional_mean_below(0.75).unwrap() - 0.25).abs() < 1e-12);
        assert!((g.conditional_mean_below(5.0).unwrap() - g.mean()).abs() < 1e-12);
        // No mass strictly below the support.
        let u = uniform01();
        assert!(matches!(
            u.conditional_mean_below(-0.5),
            Err(Error::ZeroMassBelow(_))
        ));
    }

    #[test]
    fn option_value_examples() {
        let f = fully_revealing_binary();
        assert!((f.option_value(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(f.option_value(1.0), 0.0);
        let g = binary_optimal_star();
        assert!(g.option_value(1.0).abs() < 1e-12);
    }

    #[test]
    fn mpc_examples() {
        let f = fully_revealing_binary();
        let g = binary_optimal_star();
        assert!(is_mpc(&g, &f, MPC_TOL).unwrap().is_mpc);
        assert!(is_mpc(&f, &f, MPC_TOL).unwrap().is_mpc);
        // A strict contraction cannot be reversed: at x = 0.3 the prior
        // integral is 0.15 while the contraction's is 0.3/e ~ 0.1104.
        let rev = is_mpc(&f, &g, MPC_TOL).unwrap();
        assert!(!rev.is_mpc);
        assert!(rev.max_violation > 0.15 - 0.3 * (-1.0_f64).exp() - 1e-9);
    }

    #[test]
    fn mpc_domain_mismatch() {
        let f = fully_revealing_binary();
        let wide = FinitePmf::new(vec![(0.0, 0.5), (1.0, 0.5)])
            .unwrap()
            .to_mixed(0.0, 2.0)
            .unwrap();
        assert!(matches!(
            is_mpc(&wide, &f, MPC_TOL),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn discretize_examples() {
        let f = fully_revealing_binary();
        let pmf = discretize(&f, 10).unwrap();
        assert_eq!(pmf.points(), &[(0.0, 0.5), (1.0, 0.5)]);

        let g = binary_optimal_star();
        let pmf = discretize(&g, 4).unwrap();
        assert_eq!(pmf.len(), 5);
        assert!((pmf.points()[0].0 - 0.0).abs() < 1e-15);
        assert!((pmf.points()[0].1 - (-1.0_f64).exp()).abs() < 1e-12);
        assert!((pmf.mean() - 0.5).abs() < 1e-10);

        let u = uniform01();
        let pmf = discretize(&u, 2).unwrap();
        assert!((pmf.points()[0].0 - 0.25).abs() < 1e-12);
        assert!((pmf.points()[0].1 - 0.5).abs() < 1e-12);
        assert!((pmf.points()[1].0 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn discretize_is_mpc_of_source() {
        for d in [binary_optimal_star(), uniform01(), fully_revealing_binary()] {
            let pmf = discretize(&d, 16).unwrap();
            let wrapped = pmf.to_mixed(d.lower(), d.upper()).unwrap();
            let rep = is_mpc(&wrapped, &d, MPC_TOL).unwrap();
            assert!(rep.is_mpc, "violation {}", rep.max_violation);
        }
    }

    /// Random mixed distribution built from a few atoms and segments.
    pub(crate) fn arb_mixed() -> impl Strategy<Value = MixedDistribution> {
        (
            proptest::collection::vec(0.01f64..0.99, 1..4),
            proptest::collection::vec(0.05f64..0.95, 1..3),
            0.05f64..0.9,
            any::<bool>(),
        )
            .prop_map(|(mut cuts, weights, rate, exp_tail)| {
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.dedup_by(|a, b| (*a - *b).abs() < 0.02);
                build_random(&cuts, &weights, rate, exp_tail)
            })
    }

    /// Deterministic helper shared with the seeded verify suites: distributes
    /// mass over atoms at `cuts` and affine/exponential segments between them.
    fn build_random(cuts: &[f64], weights: &[f64], rate: f64, exp_tail: bool) -> MixedDistribution {
        let mut pieces = Vec::new();
        let mut level = 0.0f64;
        let mut cursor = 0.0f64;
        let n = cuts.len();
        for (i, &c) in cuts.iter().enumerate() {
            let w = weights[i % weights.len()] / (n as f64 + 1.0);
            if c > cursor {
                pieces.push(Piece {
                    a: cursor,
                    b: c,
                    form: PieceForm::Affine {
                        start: level,
                        slope: 0.3 * w / (c - cursor),
                    },
                });
                level += 0.3 * w;
                cursor = c;
            }
            level = (level + w).min(0.98);
        }
        if cursor < 1.0 {
            if exp_tail && level > 0.01 {
                pieces.push(Piece {
                    a: cursor,
                    b: 1.0,
                    form: PieceForm::ExpCdf {
                        coeff: level,
                        rate: rate.max((1.0 - cursor) / (0.98f64 / level).ln().max(1e-6)),
                    },
                });
            } else {
                pieces.push(Piece {
                    a: cursor,
                    b: 1.0,
                    form: PieceForm::Flat(level),
                });
            }
        }
        MixedDistribution::new(0.0, 1.0, pieces).unwrap()
    }

    proptest! {
        #[test]
        fn integration_by_parts_identity(d in arb_mixed(), tau in 0.0f64..1.0) {
            let g = d.cdf(tau);
            prop_assume!(g > 1e-9);
            let lhs = d.conditional_mean_below(tau).unwrap() * g + d.cdf_integral(tau);
            prop_assert!((lhs - tau * g).abs() <= 1e-10);
        }

        #[test]
        fn cdf_integral_is_convex(d in arb_mixed(), x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
            let mut v = [x, y, z];
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (x, y, z) = (v[0], v[1], v[2]);
            prop_assume!(z - x > 1e-9);
            let chord = ((z - y) * d.cdf_integral(x) + (y - x) * d.cdf_integral(z)) / (z - x);
            prop_assert!(d.cdf_integral(y) <= chord + 1e-12);
        }

        #[test]
        fn option_value_identity(d in arb_mixed(), c in -0.5f64..1.5) {
            let direct = d.option_value(c);
            let viaintegral = (d.upper() - c) - (d.total_integral() - d.cdf_integral(c));
            prop_assert!((direct - viaintegral.max(0.0)).abs() <= 1e-12);
        }

        #[test]
        fn discretize_preserves_mean_and_contracts(d in arb_mixed(), n in 2usize..20) {
            let pmf = discretize(&d, n).unwrap();
            prop_assert!((pmf.mean() - d.mean()).abs() <= 1e-10);
            let wrapped = pmf.to_mixed(d.lower(), d.upper()).unwrap();
            prop_assert!(is_mpc(&wrapped, &d, MPC_TOL).unwrap().is_mpc);
        }

        #[test]
        fn stieltjes_agreement(d in arb_mixed(), tau in 0.05f64..0.95) {
            // Closed-form partial first moment vs summation on a fine grid.
            let pmf = discretize(&d, 10_000).unwrap();
            let g = d.cdf(tau);
            prop_assume!(g > 1e-6);
            let closed = d.conditional_mean_below(tau).unwrap() * g;
            let summed: f64 = pmf.points().iter()
                .filter(|&&(s, _)| s <= tau)
                .map(|&(s, m)| s * m)
                .sum();
            prop_assert!((closed - summed).abs() <= 1e-3);
        }
    }
}
