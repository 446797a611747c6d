//! Hitting and return times to shrinking targets, their goodness of fit, and
//! the relation between the two laws.

use serde::{Deserialize, Serialize};

use crate::ensemble::fold_trials;
use crate::error::{EvlError, Result};
use crate::observables::{ExceedanceTest, Level, Observer};
use crate::process::{ProcessSpec, ProcessState};
use crate::symbolic::{cylinder_measure, SymbolicWord};

/// Return-time trials use the upper half of the stream space so that HTS and
/// RTS runs sharing a seed never share random bits.
const RTS_STREAM_OFFSET: u64 = 1 << 62;

/// Maximum rejection attempts for conditioned starts of non-digit processes.
pub const REJECTION_CAP: u64 = 1_000_000;

pub const DEFAULT_HORIZON_FACTOR: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetKind {
    Ball { zeta: f64, radius: f64 },
    Cylinder { word: String },
    LevelSet { u: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub kind: TargetKind,
    pub test: ExceedanceTest,
    pub measure: f64,
}

impl TargetSet {
    pub fn ball(observer: &Observer, radius: f64) -> Result<Self> {
        let measure = observer.ball_measure(radius);
        if measure <= 0.0 {
            return Err(EvlError::InvalidArgument("ball has zero measure".into()));
        }
        Ok(Self {
            kind: TargetKind::Ball {
                zeta: observer.zeta(),
                radius,
            },
            test: ExceedanceTest::Pieces(observer.ball_pieces(radius)),
            measure,
        })
    }

    /// Ball around ζ whose measure is `q`.
    pub fn ball_with_measure(observer: &Observer, q: f64) -> Result<Self> {
        Self::ball(observer, observer.radius_for_measure(q))
    }

    pub fn cylinder(spec: &ProcessSpec, word: &SymbolicWord) -> Result<Self> {
        let weights = spec
            .digit_weights()
            .filter(|_| spec.digit_base() == Some(word.base))
            .ok_or_else(|| EvlError::Mismatch(format!("no base-{} coding for {}", word.base, spec.label)))?;
        Ok(Self {
            kind: TargetKind::Cylinder { word: word.to_string() },
            test: ExceedanceTest::Pieces(vec![word.interval()]),
            measure: cylinder_measure(&word.symbols, &weights),
        })
    }

    /// `{X_0 > u}` for a computed level.
    pub fn level_set(level: &Level) -> Self {
        Self {
            kind: TargetKind::LevelSet { u: level.u },
            test: level.test.clone(),
            measure: level.tail,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            TargetKind::Ball { zeta, radius } => format!("ball(zeta={zeta};r={radius:e})"),
            TargetKind::Cylinder { word } => format!("cylinder({word})"),
            TargetKind::LevelSet { u } => format!("level-set(u={u})"),
        }
    }

    fn horizon(&self, factor: f64) -> u64 {
        (factor / self.measure).ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    Hts,
    Rts,
}

/// Normalized times `r·μ(U)`; censored entries sit at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSampleSet {
    pub mode: TimeMode,
    pub times: Vec<f64>,
    pub censored: Vec<bool>,
    pub horizon: f64,
    /// Cluster labels (e.g. the path a Palm sample came from) for robust errors.
    pub groups: Option<Vec<u64>>,
}

impl TimeSampleSet {
    pub fn new(mode: TimeMode, horizon: f64) -> Self {
        Self {
            mode,
            times: Vec::new(),
            censored: Vec::new(),
            horizon,
            groups: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored.iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }

    /// Fraction of samples with normalized time `≤ eps`.
    pub fn atom_mass(&self, eps: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.censored)
            .filter(|(&t, &c)| !c && t <= eps)
            .count() as f64
            / self.len() as f64
    }

    /// Empirical `P(T ≤ t)`, censored entries counted as above the horizon.
    pub fn ecdf(&self, t: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.censored)
            .filter(|(&x, &c)| !c && x <= t)
            .count() as f64
            / self.len() as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("t_normalized\tcensored\n");
        for (t, c) in self.times.iter().zip(&self.censored) {
            out.push_str(&format!("{t}\t{}\n", *c as u8));
        }
        out
    }

    /// `(t, F_empirical, F_theory)` on `points` equally spaced times up to `t_max`.
    pub fn plot_rows(&self, cdf: impl Fn(f64) -> f64, t_max: f64, points: usize) -> Vec<(f64, f64, f64)> {
        let mut sorted: Vec<f64> = self
            .times
            .iter()
            .zip(&self.censored)
            .filter(|(_, &c)| !c)
            .map(|(&t, _)| t)
            .collect();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = self.len() as f64;
        (0..=points)
            .map(|i| {
                let t = t_max * i as f64 / points as f64;
                let k = sorted.partition_point(|&x| x <= t);
                (t, k as f64 / n, cdf(t))
            })
            .collect()
    }
}

/// First `j ∈ 1..=horizon` with the process in the target; `None` if censored.
pub fn hitting_time(state: &mut ProcessState, target: &TargetSet, horizon: u64) -> Option<u64> {
    state.first_hit(&target.test, horizon)
}

fn collect_times(
    trials: u64,
    mode: TimeMode,
    target: &TargetSet,
    horizon_factor: f64,
    start: impl Fn(u64) -> Result<ProcessState> + Sync + Send,
) -> Result<TimeSampleSet> {
    if horizon_factor < 10.0 {
        return Err(EvlError::InvalidArgument(format!(
            "horizon_factor {horizon_factor} < 10"
        )));
    }
    let horizon = target.horizon(horizon_factor);
    let mu = target.measure;
    let raw: Vec<Result<Option<u64>>> = fold_trials(
        trials,
        || (),
        Vec::new,
        |t, _, acc| {
            acc.push(start(t).map(|mut s| hitting_time(&mut s, target, horizon)));
        },
        |a, b| a.extend(b),
    );
    let mut set = TimeSampleSet::new(mode, horizon as f64 * mu);
    for r in raw {
        match r? {
            Some(j) => {
                set.times.push(j as f64 * mu);
                set.censored.push(false);
            }
            None => {
                set.times.push(horizon as f64 * mu);
                set.censored.push(true);
            }
        }
    }
    Ok(set)
}

/// Normalized hitting times from stationary starts.
pub fn sample_hts(
    spec: &ProcessSpec,
    target: &TargetSet,
    trials: u64,
    seed: u64,
    horizon_factor: f64,
) -> Result<TimeSampleSet> {
    collect_times(trials, TimeMode::Hts, target, horizon_factor, |t| {
        Ok(ProcessState::stationary(spec, seed, t))
    })
}

/// Normalized return times from starts distributed as `μ` conditioned on the target.
pub fn sample_rts(
    spec: &ProcessSpec,
    target: &TargetSet,
    trials: u64,
    seed: u64,
    horizon_factor: f64,
) -> Result<TimeSampleSet> {
    let pieces = target.test.intervals();
    let test = target.test.clone();
    collect_times(trials, TimeMode::Rts, target, horizon_factor, |t| {
        ProcessState::conditioned(
            spec,
            &pieces,
            |c| test.contains(c),
            seed,
            RTS_STREAM_OFFSET + t,
            REJECTION_CAP,
        )
    })
}

/// `sup |F̂ − F|` over the uncensored sample points; the empirical CDF keeps the
/// censored mass in its denominator.
pub fn ks_distance(samples: &TimeSampleSet, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let mut xs: Vec<f64> = samples
        .times
        .iter()
        .zip(&samples.censored)
        .filter(|(_, &c)| !c)
        .map(|(&t, _)| t)
        .collect();
    if xs.is_empty() {
        return Err(EvlError::EmptySamples);
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == x {
            k += 1;
        }
        let f = cdf(x);
        d = d.max((k as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = k;
    }
    Ok(d)
}

/// KS distance of the samples above `eps` against `1 − e^{−θt}` restricted to `t > eps`.
pub fn ks_continuous_part(rts: &TimeSampleSet, theta: f64, eps: f64) -> Result<f64> {
    let mut part = TimeSampleSet::new(rts.mode, rts.horizon);
    for (&t, &c) in rts.times.iter().zip(&rts.censored) {
        if c || t > eps {
            part.times.push(t);
            part.censored.push(c);
        }
    }
    let base = 1.0 - (-theta * eps).exp();
    ks_distance(&part, |t| ((1.0 - (-theta * t).exp()) - base) / (1.0 - base))
}

/// `sup_t |Ĝ(t) − ∫_0^t (1 − G̃̂(s)) ds|` on `grid`.
///
/// The empirical survival is a step function, so the integral is computed
/// exactly as the sample mean of `min(R_i, t)`.
pub fn check_integral_relation(hts: &TimeSampleSet, rts: &TimeSampleSet, grid: &[f64]) -> Result<f64> {
    if hts.is_empty() || rts.is_empty() {
        return Err(EvlError::EmptySamples);
    }
    let limit = hts.horizon.min(rts.horizon);
    if let Some(t) = grid.iter().find(|&&t| t < 0.0 || t > limit) {
        return Err(EvlError::InvalidArgument(format!(
            "grid point {t} outside [0, {limit}]"
        )));
    }
    let m = rts.len() as f64;
    Ok(grid
        .iter()
        .map(|&t| {
            let integral = rts.times.iter().map(|&r| r.min(t)).sum::<f64>() / m;
            (hts.ecdf(t) - integral).abs()
        })
        .fold(0.0, f64::max))
}

/// One goodness-of-fit row: target, mode, theta_theory, ks, n_samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofRow {
    pub target: String,
    pub mode: TimeMode,
    pub theta_theory: f64,
    pub ks: f64,
    pub n_samples: usize,
}

pub fn gof_csv(rows: &[GofRow]) -> String {
    let mut out = String::from("target,mode,theta_theory,ks,n_samples\n");
    for r in rows {
        let mode = match r.mode {
            TimeMode::Hts => "hts",
            TimeMode::Rts => "rts",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.target, mode, r.theta_theory, r.ks, r.n_samples
        ));
    }
    out
}
