//! Scenario ingestion: distribution literals and solver inputs.
//!
//! A distribution literal lists atoms and CDF segments; the loader walks the
//! support from left to right, accumulating the CDF level, and emits the
//! piece representation. Segment parameters are shapes only (`slope` for
//! affine, `rate` for exponential); levels follow from continuity, so a
//! literal cannot contradict itself. Declared mass must account for the whole
//! unit of probability: atoms plus segment gains must reach 1 at the top.

use serde::Deserialize;

use crate::designer::OptimizeConfig;
use crate::equilibrium::Fees;
use crate::error::{Error, Result};
use crate::measure::{is_mpc, MixedDistribution, Piece, PieceForm, MPC_TOL};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionLiteral {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub atoms: Vec<AtomLiteral>,
    #[serde(default)]
    pub segments: Vec<SegmentLiteral>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomLiteral {
    pub x: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentLiteral {
    pub a: f64,
    pub b: f64,
    pub form: SegmentForm,
    #[serde(default)]
    pub params: SegmentParams,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum SegmentForm {
    Flat,
    Affine,
    Expcdf,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentParams {
    pub slope: Option<f64>,
    pub rate: Option<f64>,
}

impl DistributionLiteral {
    /// Converts the literal into the validated piece representation.
    pub fn build(&self) -> Result<MixedDistribution> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::InvalidDistribution(format!(
                "bounds [{}, {}] invalid",
                self.lower, self.upper
            )));
        }
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|p, q| p.x.partial_cmp(&q.x).unwrap());
        let mut segments = self.segments.clone();
        segments.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
        for a in &atoms {
            if a.mass <= 0.0 || !a.mass.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "atom mass {} at {} invalid",
                    a.mass, a.x
                )));
            }
            if a.x < self.lower || a.x > self.upper {
                return Err(Error::InvalidDistribution(format!(
                    "atom at {} outside [{}, {}]",
                    a.x, self.lower, self.upper
                )));
            }
            for s in &segments {
                if a.x > s.a && a.x < s.b {
                    return Err(Error::InvalidDistribution(format!(
                        "atom at {} falls inside segment [{}, {}]; split the segment",
                        a.x, s.a, s.b
                    )));
                }
            }
        }
        for w in segments.windows(2) {
            if w[1].a < w[0].b - 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "segments [{}, {}] and [{}, {}] overlap",
                    w[0].a, w[0].b, w[1].a, w[1].b
                )));
            }
        }
        for s in &segments {
            if !(s.a >= self.lower - 1e-12 && s.b <= self.upper + 1e-12 && s.a < s.b) {
                return Err(Error::InvalidDistribution(format!(
                    "segment [{}, {}] outside bounds or empty",
                    s.a, s.b
                )));
            }
        }

        let mut pieces: Vec<Piece> = Vec::new();
        let mut level = 0.0_f64;
        let mut cursor = self.lower;
        let mut atom_iter = atoms.iter().peekable();
        let push_flat_to = |pieces: &mut Vec<Piece>, level: f64, from: f64, to: f64| {
            if to > from {
                pieces.push(Piece {
                    a: from,
                    b: to,
                    form: PieceForm::Flat(level),
                });
            }
        };
        for seg in &segments {
            // Atoms strictly before this segment, then any atom at its start.
            while let Some(a) = atom_iter.peek() {
                if a.x > seg.a {
                    break;
                }
                push_flat_to(&mut pieces, level, cursor, a.x);
                cursor = cursor.max(a.x);
                level += a.mass;
                atom_iter.next();
            }
            push_flat_to(&mut pieces, level, cursor, seg.a);
            let width = seg.b - seg.a;
            match seg.form {
                SegmentForm::Flat => {
                    pieces.push(Piece {
                        a: seg.a,
                        b: seg.b,
                        form: PieceForm::Flat(level),
                    });
                }
                SegmentForm::Affine => {
                    let slope = seg.params.slope.ok_or_else(|| {
                        Error::InvalidDistribution("affine segment needs params.slope".into())
                    })?;
                    if slope < 0.0 {
                        return Err(Error::InvalidDistribution("negative slope".into()));
                    }
                    pieces.push(Piece {
                        a: seg.a,
                        b: seg.b,
                        form: PieceForm::Affine {
                            start: level,
                            slope,
                        },
                    });
                    level += slope * width;
                }
                SegmentForm::Expcdf => {
                    let rate = seg.params.rate.ok_or_else(|| {
                        Error::InvalidDistribution("expcdf segment needs params.rate".into())
                    })?;
                    if rate <= 0.0 {
                        return Err(Error::InvalidDistribution("rate must be positive".into()));
                    }
                    if level <= 0.0 {
                        return Err(Error::InvalidDistribution(
                            "expcdf segment starts at zero mass; add an atom first".into(),
                        ));
                    }
                    pieces.push(Piece {
                        a: seg.a,
                        b: seg.b,
                        form: PieceForm::ExpCdf { coeff: level, rate },
                    });
                    level *= (width / rate).exp();
                }
            }
            cursor = seg.b;
        }
        let mut top_atom = 0.0;
        for a in atom_iter {
            if a.x < self.upper {
                push_flat_to(&mut pieces, level, cursor, a.x);
                cursor = cursor.max(a.x);
                level += a.mass;
            } else {
                top_atom = a.mass;
            }
        }
        push_flat_to(&mut pieces, level, cursor, self.upper);
        if (level + top_atom - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "declared mass totals {}, not 1",
                level + top_atom
            )));
        }
        MixedDistribution::new(self.lower, self.upper, pieces)
    }
}

/// Solver input: a prior, optionally a test with fees, optionally search
/// settings. The test, when present, must be a mean-preserving contraction
/// of the prior; anything else is not inducible by any unbiased test.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub prior: DistributionLiteral,
    #[serde(default)]
    pub test: Option<DistributionLiteral>,
    #[serde(default)]
    pub fees: Option<FeesLiteral>,
    #[serde(default)]
    pub optimizer: Option<OptimizerLiteral>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeesLiteral {
    pub phi_t: f64,
    pub phi_d: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerLiteral {
    pub starts: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub xtol: Option<f64>,
    pub penalty_weight: Option<f64>,
    pub eps: Option<f64>,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub prior: MixedDistribution,
    pub test: Option<MixedDistribution>,
    pub fees: Option<Fees>,
    pub optimizer: OptimizeConfig,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        let prior = file.prior.build()?;
        let test = match &file.test {
            Some(t) => {
                let test = t.build()?;
                let rep = is_mpc(&test, &prior, MPC_TOL)?;
                if !rep.is_mpc {
                    return Err(Error::NotAContraction {
                        violation: rep.max_violation,
                    });
                }
                Some(test)
            }
            None => None,
        };
        let fees = file.fees.map(|f| {
            if !f.phi_t.is_finite() || !f.phi_d.is_finite() {
                return Err(Error::Scenario("fees must be finite".into()));
            }
            Ok(Fees {
                phi_t: f.phi_t,
                phi_d: f.phi_d,
            })
        });
        let fees = match fees {
            Some(r) => Some(r?),
            None => None,
        };
        let mut cfg = OptimizeConfig::default();
        if let Some(o) = file.optimizer {
            if let Some(v) = o.starts {
                cfg.starts = v;
            }
            if let Some(v) = o.seed {
                cfg.seed = v;
            }
            if let Some(v) = o.max_iter {
                cfg.max_iter = v;
            }
            if let Some(v) = o.xtol {
                cfg.xtol = v;
            }
            if let Some(v) = o.penalty_weight {
                cfg.penalty_weight = v;
            }
            if let Some(v) = o.eps {
                cfg.eps = v;
            }
        }
        Ok(Scenario {
            prior,
            test,
            fees,
            optimizer: cfg,
        })
    }
}
