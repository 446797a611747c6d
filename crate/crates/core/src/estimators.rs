//! Four estimators of the extremal index: the law of the maximum, the law of
//! the escape-free window, the runs (escape/exceedance) ratio, and the atom of
//! the return-time law.

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{EvlError, Result};
use crate::escapes::{escape_at, EscapeOffsets};
use crate::hts::{TimeMode, TimeSampleSet};
use crate::observables::{Level, ObservableSpec, Observer};
use crate::process::ProcessSpec;
use crate::stats::{binomial_stderr, MeanAcc, RatioAcc};

pub const DEFAULT_ATOM_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaxLaw,
    Runs,
    EscapeLaw,
    RtsAtom,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MaxLaw, Method::Runs, Method::EscapeLaw, Method::RtsAtom];

    pub fn name(&self) -> &'static str {
        match self {
            Method::MaxLaw => "max_law",
            Method::Runs => "runs",
            Method::EscapeLaw => "escape_law",
            Method::RtsAtom => "rts_atom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EIEstimate {
    pub theta: f64,
    pub stderr: f64,
    pub method: Method,
    pub trials: u64,
    pub n: u64,
    pub tau: f64,
    /// The raw estimate left `[0, 1]` and was clamped.
    pub clamped: bool,
}

impl EIEstimate {
    fn new(raw: f64, stderr: f64, method: Method) -> Self {
        let theta = raw.clamp(0.0, 1.0);
        Self {
            theta,
            stderr,
            method,
            trials: 0,
            n: 0,
            tau: 0.0,
            clamped: theta != raw,
        }
    }

    pub fn with_run(mut self, trials: u64, n: u64, tau: f64) -> Self {
        self.trials = trials;
        self.n = n;
        self.tau = tau;
        self
    }
}

/// A Monte Carlo probability with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    pub p: f64,
    pub stderr: f64,
}

impl Probability {
    fn from_mean(acc: &MeanAcc) -> Self {
        Self {
            p: acc.mean(),
            stderr: acc.stderr(),
        }
    }
}

/// `θ̂ = −ln(P̂)/τ`, delta-method error `se(P̂)/(P̂τ)`.
pub fn ei_from_max(p: f64, p_stderr: f64, tau: f64) -> Result<EIEstimate> {
    if !(tau > 0.0) {
        return Err(EvlError::InvalidArgument(format!("tau = {tau}")));
    }
    if p <= 0.0 || p > 1.0 || p.is_nan() {
        return Err(EvlError::Undefined(format!("P(M_n ≤ u_n) = {p}")));
    }
    Ok(EIEstimate::new(-p.ln() / tau, p_stderr / (p * tau), Method::MaxLaw))
}

/// Fraction of stationary paths of length `level.n` without an exceedance.
pub fn max_law_probability(spec: &ProcessSpec, level: &Level, trials: u64, seed: u64) -> Probability {
    let n = level.n;
    let ens = Ensemble::new(spec, level.test.clone(), n, trials, seed);
    let acc = ens.fold(
        MeanAcc::default,
        |_, idx, acc| acc.push(idx.first().map_or(true, |&j| j >= n) as u8 as f64),
        |a, b| a.merge(&b),
    );
    Probability::from_mean(&acc)
}

/// Fraction of stationary paths without an order-`i` escape in `[0, level.n)`.
pub fn escape_law_probability(
    spec: &ProcessSpec,
    level: &Level,
    offsets: &EscapeOffsets,
    trials: u64,
    seed: u64,
) -> Probability {
    let n = level.n;
    let ens = Ensemble::new(spec, level.test.clone(), n + offsets.span() as u64, trials, seed);
    let acc = ens.fold(
        MeanAcc::default,
        |_, idx, acc| {
            let clean = !idx.iter().take_while(|&&j| j < n).any(|&j| escape_at(idx, j, offsets));
            acc.push(clean as u8 as f64)
        },
        |a, b| a.merge(&b),
    );
    Probability::from_mean(&acc)
}

pub fn estimate_max_law(
    spec: &ProcessSpec,
    obs: &ObservableSpec,
    tau: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<Probability> {
    let level = Observer::new(spec, obs)?.level_for_tau(n, tau)?;
    Ok(max_law_probability(spec, &level, trials, seed))
}

/// `τ = 0` puts the level above the essential supremum: no escapes, probability 1.
pub fn estimate_escape_law(
    spec: &ProcessSpec,
    obs: &ObservableSpec,
    offsets: &EscapeOffsets,
    tau: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<Probability> {
    let observer = Observer::new(spec, obs)?;
    if tau == 0.0 {
        return Ok(Probability { p: 1.0, stderr: 0.0 });
    }
    let level = observer.level_for_tau(n, tau)?;
    Ok(escape_law_probability(spec, &level, offsets, trials, seed))
}

/// `θ̂ = P̂(Q_{p,0}(u)) / P̂(X_0 > u)`, conditioning on every exceedance whose
/// escape is decidable inside the path.
pub fn ei_runs(ens: &Ensemble, offsets: &EscapeOffsets) -> Result<EIEstimate> {
    let limit = ens.path_len.saturating_sub(offsets.span() as u64);
    let acc = ens.fold(
        RatioAcc::default,
        |_, idx, acc| {
            let starts: Vec<u64> = idx.iter().copied().take_while(|&j| j < limit).collect();
            let esc = starts.iter().filter(|&&j| escape_at(idx, j, offsets)).count();
            acc.push(esc as f64, starts.len() as f64);
        },
        |a, b| a.merge(&b),
    );
    if acc.denominator() == 0.0 {
        return Err(EvlError::Undefined("no exceedances".into()));
    }
    Ok(EIEstimate::new(acc.ratio(), acc.stderr(), Method::Runs).with_run(ens.trials, ens.path_len, f64::NAN))
}

/// `θ̂ = 1 − F̂(ε)` corrected once by the continuous part `θ(1 − e^{−θε})`.
pub fn ei_rts_atom(samples: &TimeSampleSet, eps: f64) -> Result<EIEstimate> {
    if samples.is_empty() {
        return Err(EvlError::EmptySamples);
    }
    if !(eps > 0.0) {
        return Err(EvlError::InvalidArgument(format!("eps = {eps}")));
    }
    let in_atom = |i: usize| (!samples.censored[i] && samples.times[i] <= eps) as u8 as f64;
    let (frac, frac_se) = match &samples.groups {
        Some(groups) => {
            let mut acc = RatioAcc::default();
            let mut i = 0;
            while i < groups.len() {
                let (mut x, mut y) = (0.0, 0.0);
                let g = groups[i];
                while i < groups.len() && groups[i] == g {
                    x += in_atom(i);
                    y += 1.0;
                    i += 1;
                }
                acc.push(x, y);
            }
            (acc.ratio(), acc.stderr())
        }
        None => {
            let f = samples.atom_mass(eps);
            (f, binomial_stderr(f, samples.len() as u64))
        }
    };
    let theta0 = 1.0 - frac;
    let raw = 1.0 - frac + theta0 * (1.0 - (-theta0 * eps).exp());
    let slope = 1.0 - (1.0 - (-theta0 * eps).exp()) - theta0 * eps * (-theta0 * eps).exp();
    Ok(EIEstimate::new(raw, frac_se / slope.abs().max(1e-12), Method::RtsAtom))
}

/// All estimators computed on one set of shared trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub level: Level,
    pub offsets: EscapeOffsets,
    pub trials: u64,
    pub seed: u64,
    pub max_law: Probability,
    pub escape_law: Probability,
    /// `P̂(M_n ≤ u_n) − P̂(no escape in [0,n))` on shared paths.
    pub ball_annulus: Probability,
    /// `n·P̂(Q_0(u_n))`, the mean number of escapes per path.
    pub annulus_rate: Probability,
    pub max_law_ei: EIEstimate,
    pub escape_law_ei: EIEstimate,
    pub runs: EIEstimate,
    pub rts_atom: EIEstimate,
    /// `θ̂_k = P̂(Q^{(k)}) / P̂(Q^{(k−1)})` for `k = 1..=order`.
    pub order_thetas: Vec<EIEstimate>,
    pub exceedances: u64,
}

impl Estimates {
    pub fn by_method(&self, m: Method) -> &EIEstimate {
        match m {
            Method::MaxLaw => &self.max_law_ei,
            Method::Runs => &self.runs,
            Method::EscapeLaw => &self.escape_law_ei,
            Method::RtsAtom => &self.rts_atom,
        }
    }

    pub fn all(&self) -> [&EIEstimate; 4] {
        Method::ALL.map(|m| self.by_method(m))
    }
}

#[derive(Clone, Default)]
struct OnePassAcc {
    max_ok: MeanAcc,
    esc_ok: MeanAcc,
    diff: MeanAcc,
    rate: MeanAcc,
    orders: Vec<RatioAcc>,
    runs: RatioAcc,
    exceedances: u64,
    palm: Vec<(u64, f64, bool)>,
}

/// Stationary paths of length `n + max(Σp, ⌈ε/μ⌉)` are simulated once. Every
/// exceedance in `[0, n)` contributes a Palm return-time sample, so the atom
/// estimator needs no separate conditioned runs.
pub fn estimate_all(
    spec: &ProcessSpec,
    level: &Level,
    offsets: &EscapeOffsets,
    trials: u64,
    seed: u64,
    eps: f64,
) -> Result<Estimates> {
    if trials < 2 {
        return Err(EvlError::InvalidArgument("need at least 2 trials".into()));
    }
    let n = level.n;
    let mu = level.tail;
    let order = offsets.order();
    let extension = (offsets.span() as u64).max((eps / mu).ceil() as u64);
    let path_len = n + extension;
    let ens = Ensemble::new(spec, level.test.clone(), path_len, trials, seed);
    let prefixes: Vec<EscapeOffsets> = (1..=order).map(|k| offsets.truncated(k)).collect();
    let acc = ens.fold(
        || OnePassAcc {
            orders: vec![RatioAcc::default(); order],
            ..Default::default()
        },
        |t, idx, acc| {
            let head = idx.partition_point(|&j| j < n);
            let starts = &idx[..head];
            let mut counts = vec![starts.len() as u64; order + 1];
            for &j in starts {
                for (k, pre) in prefixes.iter().enumerate() {
                    if escape_at(idx, j, pre) {
                        counts[k + 1] += 1;
                    } else {
                        break;
                    }
                }
            }
            for c in counts.iter_mut().skip(1) {
                *c -= starts.len() as u64;
            }
            let no_exc = starts.is_empty();
            let no_esc = counts[order] == 0;
            acc.max_ok.push(no_exc as u8 as f64);
            acc.esc_ok.push(no_esc as u8 as f64);
            acc.diff.push(no_exc as u8 as f64 - no_esc as u8 as f64);
            acc.rate.push(counts[order] as f64);
            acc.runs.push(counts[order] as f64, counts[0] as f64);
            for k in 0..order {
                acc.orders[k].push(counts[k + 1] as f64, counts[k] as f64);
            }
            acc.exceedances += starts.len() as u64;
            for (a, &j) in starts.iter().enumerate() {
                match idx.get(a + 1) {
                    Some(&next) => acc.palm.push((t, (next - j) as f64 * mu, false)),
                    None => acc.palm.push((t, (path_len - 1 - j) as f64 * mu, true)),
                }
            }
        },
        |a, b| {
            a.max_ok.merge(&b.max_ok);
            a.esc_ok.merge(&b.esc_ok);
            a.diff.merge(&b.diff);
            a.rate.merge(&b.rate);
            a.runs.merge(&b.runs);
            for (x, y) in a.orders.iter_mut().zip(&b.orders) {
                x.merge(y);
            }
            a.exceedances += b.exceedances;
            a.palm.extend(b.palm);
        },
    );
    let tau = level.tau;
    let max_law = Probability::from_mean(&acc.max_ok);
    let escape_law = Probability::from_mean(&acc.esc_ok);
    let max_law_ei = ei_from_max(max_law.p, max_law.stderr, tau)?.with_run(trials, n, tau);
    let mut escape_law_ei = ei_from_max(escape_law.p, escape_law.stderr, tau)?.with_run(trials, n, tau);
    escape_law_ei.method = Method::EscapeLaw;
    if acc.exceedances == 0 {
        return Err(EvlError::Undefined("no exceedances in any path".into()));
    }
    let order_thetas: Vec<EIEstimate> = acc
        .orders
        .iter()
        .map(|o| EIEstimate::new(o.ratio(), o.stderr(), Method::Runs).with_run(trials, n, tau))
        .collect();
    let runs = EIEstimate::new(acc.runs.ratio(), acc.runs.stderr(), Method::Runs).with_run(trials, n, tau);
    let mut palm = TimeSampleSet::new(TimeMode::Rts, extension as f64 * mu);
    let mut groups = Vec::with_capacity(acc.palm.len());
    for (t, x, c) in acc.palm {
        groups.push(t);
        palm.times.push(x);
        palm.censored.push(c);
    }
    palm.groups = Some(groups);
    let rts_atom = ei_rts_atom(&palm, eps)?.with_run(trials, n, tau);
    Ok(Estimates {
        level: level.clone(),
        offsets: offsets.clone(),
        trials,
        seed,
        max_law,
        escape_law,
        ball_annulus: Probability::from_mean(&acc.diff),
        annulus_rate: Probability::from_mean(&acc.rate),
        max_law_ei,
        escape_law_ei,
        runs,
        rts_atom,
        order_thetas,
        exceedances: acc.exceedances,
    })
}
