//! Closed-form extremal indices, Birkhoff sums of the potential along periodic
//! orbits, and the limiting hitting/return time laws.

use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::process::{ProcessKind, ProcessSpec};
use crate::symbolic::{primitive_root, SymbolicWord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Derivation {
    /// `1 − 1/|(f^p)'(ζ)|`
    Derivative,
    /// `1 − e^{S_pφ(ζ)}`
    Potential {
        s_p: f64,
    },
    /// `1 − α^k (1−α)^{p−k}` for the binary Bernoulli shift.
    BernoulliWord {
        k: usize,
        p: usize,
    },
    ProcessClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryResult {
    pub theta: f64,
    pub derivation: Derivation,
    pub period: usize,
    /// Escape offsets that carry the clustering (`[p]`, or `[1, 3]` for MMA13).
    pub offsets: Vec<usize>,
}

/// Which point the extremal index refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ZetaDescriptor {
    /// Periodic point with itinerary `word^∞`.
    Periodic { word: String },
    /// A finite prefix of an aperiodic itinerary.
    Aperiodic { word: String },
    /// The endpoint `−1` of the Chebyshev map.
    ChebyshevEndpoint,
    /// The upper end of the marginal of a non-map process.
    UpperEndpoint,
}

fn word_for(spec: &ProcessSpec, text: &str) -> Result<SymbolicWord> {
    let base = spec
        .digit_base()
        .ok_or_else(|| EvlError::Mismatch(format!("{} has no coding", spec.label)))?;
    Ok(primitive_root(&SymbolicWord::parse(text, base)?))
}

pub fn analytic_ei(spec: &ProcessSpec, zeta: &ZetaDescriptor) -> Result<TheoryResult> {
    let closed = |theta: f64, period: usize, offsets: Vec<usize>| TheoryResult {
        theta,
        derivation: Derivation::ProcessClosedForm,
        period,
        offsets,
    };
    match (&spec.kind, zeta) {
        (_, ZetaDescriptor::Aperiodic { word }) => Err(EvlError::NotPeriodic(word.clone())),
        (ProcessKind::MAryMap { m, .. }, ZetaDescriptor::Periodic { word }) => {
            let root = word_for(spec, word)?;
            let p = root.len();
            let s_p = potential_sum(spec, word)?;
            let theta = 1.0 - s_p.exp();
            let derivation = if *m == 2 {
                let k = root.symbols.iter().filter(|&&d| d == 0).count();
                Derivation::BernoulliWord { k, p }
            } else {
                Derivation::Potential { s_p }
            };
            Ok(TheoryResult {
                theta,
                derivation,
                period: p,
                offsets: vec![p],
            })
        }
        (ProcessKind::DyadicJump, ZetaDescriptor::Periodic { word }) => {
            let root = word_for(spec, word)?;
            if root.symbols.last() != Some(&1) {
                return Err(EvlError::InvalidArgument(format!(
                    "{word} is not a dyadic-jump itinerary (must end in 1)"
                )));
            }
            // (f^p)' = Π 2^{k_i} over the blocks 0^{k_i−1}1, i.e. 2^{|word|}.
            let period = root.symbols.iter().filter(|&&d| d == 1).count();
            Ok(TheoryResult {
                theta: 1.0 - 2f64.powi(-(root.len() as i32)),
                derivation: Derivation::Derivative,
                period,
                offsets: vec![period],
            })
        }
        (ProcessKind::ChebyshevQuadratic, ZetaDescriptor::ChebyshevEndpoint) => {
            // f(−1) = −1 and |f'(−1)| = 4.
            Ok(TheoryResult {
                theta: 1.0 - 1.0 / 4.0,
                derivation: Derivation::Derivative,
                period: 1,
                offsets: vec![1],
            })
        }
        (ProcessKind::ChernickAr1 { r }, ZetaDescriptor::UpperEndpoint) => {
            Ok(closed(1.0 - 1.0 / *r as f64, 1, vec![1]))
        }
        (ProcessKind::Mma2, ZetaDescriptor::UpperEndpoint) => Ok(closed(0.5, 2, vec![2])),
        (ProcessKind::Mma13, ZetaDescriptor::UpperEndpoint) => Ok(closed((2.0 / 3.0) * 0.5, 3, vec![1, 3])),
        (ProcessKind::IidUniform, ZetaDescriptor::UpperEndpoint) => Ok(closed(1.0, 1, vec![1])),
        _ => Err(EvlError::Mismatch(format!(
            "no closed form for {} at {zeta:?}",
            spec.label
        ))),
    }
}

/// `S_pφ(ζ)` along the periodic orbit `word^∞` (over its primitive root).
pub fn potential_sum(spec: &ProcessSpec, word: &str) -> Result<f64> {
    match &spec.kind {
        ProcessKind::MAryMap { weights, .. } => {
            let root = word_for(spec, word)?;
            Ok(root.symbols.iter().map(|&d| weights[d as usize].ln()).sum())
        }
        ProcessKind::DyadicJump => {
            // φ = −k log 2 on branch k; the branches of one period cover |word| symbols.
            let root = word_for(spec, word)?;
            Ok(-(root.len() as f64) * 2f64.ln())
        }
        _ => Err(EvlError::Undefined(format!("no potential for {}", spec.label))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Hts,
    Rts,
    /// Survival value `e^{−θτ}` of the maximum.
    MaxLaw,
}

pub fn theoretical_cdf(kind: LawKind, theta: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| match kind {
        LawKind::Hts => {
            if t <= 0.0 {
                0.0
            } else {
                1.0 - (-theta * t).exp()
            }
        }
        LawKind::Rts => {
            if t < 0.0 {
                0.0
            } else {
                (1.0 - theta) + theta * (1.0 - (-theta * t).exp())
            }
        }
        LawKind::MaxLaw => (-theta * t).exp(),
    }
}
