//! Observables `φ = g(dist(·, ζ))` and their variants, tail probabilities, and
//! the thresholds `u_n` with `n·P(X_0 > u_n) = τ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::process::{ProcessKind, ProcessSpec, ProcessState};
use crate::symbolic::{cylinder_measure, periodic_point_from_word, SymbolicWord};

/// The set `{X > u}` expressed on the fast coordinate of a process state
/// (see [`ProcessState::coordinate`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExceedanceTest {
    /// Coordinate strictly above the level.
    Above(f64),
    /// Union of half-open intervals `[lo, hi)`.
    Pieces(Vec<(f64, f64)>),
}

impl ExceedanceTest {
    #[inline]
    pub fn contains(&self, c: f64) -> bool {
        match self {
            ExceedanceTest::Above(u) => c > *u,
            ExceedanceTest::Pieces(p) => p.iter().any(|&(lo, hi)| c >= lo && c < hi),
        }
    }

    /// The target as intervals of `[0,1)`, used for conditioned starts.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match self {
            ExceedanceTest::Above(u) => vec![(u.max(0.0), 1.0)],
            ExceedanceTest::Pieces(p) => p.clone(),
        }
    }
}

/// Decreasing profile `g` applied to a distance or a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GForm {
    /// `−ln x`
    G1,
    /// `x^{−1/β}`, so that `g^{−1}(sy)/g^{−1}(s) = y^{−β}`
    G2 { beta: f64 },
    /// `D − x^{1/γ}`, so that `g^{−1}(D−sy)/g^{−1}(D−s) = y^γ`
    G3 { d: f64, gamma: f64 },
}

impl GForm {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            GForm::G1 => -x.ln(),
            GForm::G2 { beta } => x.powf(-1.0 / beta),
            GForm::G3 { d, gamma } => d - x.powf(1.0 / gamma),
        }
    }

    /// `g^{−1}(u)`, the radius below which `g` exceeds `u`; 0 at or above the
    /// supremum of `g`.
    pub fn inverse(&self, u: f64) -> f64 {
        match *self {
            GForm::G1 => (-u).exp(),
            GForm::G2 { beta } => {
                if u <= 0.0 {
                    f64::INFINITY
                } else {
                    u.powf(-beta)
                }
            }
            GForm::G3 { d, gamma } => {
                if u >= d {
                    0.0
                } else {
                    (d - u).powf(gamma)
                }
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            GForm::G1 | GForm::G2 { .. } => f64::INFINITY,
            GForm::G3 { d, .. } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GForm::G2 { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return Err(EvlError::InvalidObservable(format!("beta = {beta}")))
            }
            GForm::G3 { d, gamma } if !(gamma > 0.0 && gamma.is_finite() && d.is_finite()) => {
                return Err(EvlError::InvalidObservable(format!("d = {d}, gamma = {gamma}")))
            }
            _ => {}
        }
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 1e-3).collect();
        if grid.windows(2).any(|w| self.apply(w[1]) >= self.apply(w[0])) {
            return Err(EvlError::InvalidObservable(
                "g is not strictly decreasing near 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObservableForm {
    /// `g(dist(x, ζ))`
    Distance { g: GForm },
    /// `g(μ(B_{dist(x,ζ)}(ζ)))`
    MeasureBall { g: GForm },
    /// `g(μ(Z_k[ζ]))` with `k` the length of the common itinerary prefix.
    Cylinder { g: GForm },
    /// The process value itself.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Anchor {
    Point {
        value: f64,
    },
    /// ζ is the periodic point with itinerary `word^∞`.
    PeriodicWord {
        word: String,
    },
    /// ζ is given by a finite itinerary prefix.
    PrefixWord {
        word: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub form: ObservableForm,
    #[serde(default)]
    pub anchor: Option<Anchor>,
}

impl ObservableSpec {
    pub fn distance(g: GForm, anchor: Anchor) -> Self {
        Self {
            form: ObservableForm::Distance { g },
            anchor: Some(anchor),
        }
    }

    pub fn measure_ball(g: GForm, anchor: Anchor) -> Self {
        Self {
            form: ObservableForm::MeasureBall { g },
            anchor: Some(anchor),
        }
    }

    pub fn cylinder(g: GForm, word: &str) -> Self {
        Self {
            form: ObservableForm::Cylinder { g },
            anchor: Some(Anchor::PrefixWord { word: word.into() }),
        }
    }

    pub fn identity() -> Self {
        Self {
            form: ObservableForm::Identity,
            anchor: None,
        }
    }

    /// `φ(x) = −x`, written as `1 − dist(x, −1)`.
    pub fn chebyshev_default() -> Self {
        Self::distance(GForm::G3 { d: 1.0, gamma: 1.0 }, Anchor::Point { value: -1.0 })
    }

    pub fn g(&self) -> Option<GForm> {
        match &self.form {
            ObservableForm::Distance { g } | ObservableForm::MeasureBall { g } | ObservableForm::Cylinder { g } => {
                Some(*g)
            }
            ObservableForm::Identity => None,
        }
    }

    /// Short label for reports.
    pub fn label(&self) -> String {
        let g = |g: &GForm| match g {
            GForm::G1 => "g1".to_string(),
            GForm::G2 { beta } => format!("g2(beta={beta})"),
            GForm::G3 { d, gamma } => format!("g3(d={d};gamma={gamma})"),
        };
        match &self.form {
            ObservableForm::Distance { g: gf } => format!("distance-{}", g(gf)),
            ObservableForm::MeasureBall { g: gf } => format!("measure-ball-{}", g(gf)),
            ObservableForm::Cylinder { g: gf } => format!("cylinder-{}", g(gf)),
            ObservableForm::Identity => "identity".into(),
        }
    }

    pub fn anchor_label(&self) -> String {
        match &self.anchor {
            None => "none".into(),
            Some(Anchor::Point { value }) => format!("{value}"),
            Some(Anchor::PeriodicWord { word }) => format!("({word})^inf"),
            Some(Anchor::PrefixWord { word }) if word.len() > 24 => {
                format!("{}...[{}]", &word[..24], word.len())
            }
            Some(Anchor::PrefixWord { word }) => word.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Geometry {
    /// `[0,1)` with the circle distance.
    Circle,
    /// `[0,1]` with the ordinary distance.
    Segment,
    /// `[−1,1]` seen through `x = −cos(2πz)`.
    Chebyshev,
    /// Real-valued process without a map structure.
    Line,
}

/// `P(X_0 > u)` and whether `u` was at or above the essential supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub probability: f64,
    pub above_sup: bool,
}

/// A threshold together with its exceedance set and its stationary mass.
/// For cylinder targets `n` is the horizon `ω_n` and `tau` is `ω_n·μ(Z_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: u64,
    pub tau: f64,
    pub u: f64,
    pub tail: f64,
    pub test: ExceedanceTest,
}

/// An observable resolved against a process: the geometry of balls around ζ
/// and their measures.
#[derive(Debug, Clone)]
pub struct Observer {
    pub spec: ProcessSpec,
    pub obs: ObservableSpec,
    geometry: Geometry,
    zeta: f64,
    word: Option<SymbolicWord>,
}

impl Observer {
    pub fn new(spec: &ProcessSpec, obs: &ObservableSpec) -> Result<Self> {
        spec.validate()?;
        if let Some(g) = obs.g() {
            g.validate()?;
        }
        let geometry = match spec.kind {
            ProcessKind::MAryMap { .. } => Geometry::Circle,
            ProcessKind::DyadicJump => Geometry::Segment,
            ProcessKind::ChebyshevQuadratic => Geometry::Chebyshev,
            _ => Geometry::Line,
        };
        if geometry == Geometry::Line && obs.form != ObservableForm::Identity {
            return Err(EvlError::Mismatch(format!(
                "{} only supports the identity observable",
                spec.label
            )));
        }
        let mut word = None;
        let zeta = match (&obs.anchor, geometry) {
            (_, Geometry::Line) | (None, _) if obs.form == ObservableForm::Identity => 0.0,
            (None, _) => return Err(EvlError::InvalidObservable("missing anchor".into())),
            (Some(Anchor::Point { value }), g) => {
                let ok = match g {
                    Geometry::Circle => (0.0..1.0).contains(value),
                    Geometry::Segment => (0.0..=1.0).contains(value),
                    Geometry::Chebyshev => (-1.0..=1.0).contains(value),
                    Geometry::Line => true,
                };
                if !ok {
                    return Err(EvlError::Mismatch(format!(
                        "anchor {value} outside the state space of {}",
                        spec.label
                    )));
                }
                *value
            }
            (Some(Anchor::PeriodicWord { word: text }), g) => {
                let w = SymbolicWord::parse(text, spec.digit_base().unwrap())?;
                let z = periodic_point_from_word(&w)?.value;
                word = Some(w);
                coding_to_point(g, z)
            }
            (Some(Anchor::PrefixWord { word: text }), g) => {
                let w = SymbolicWord::parse(text, spec.digit_base().unwrap())?;
                let z = w.value();
                word = Some(w);
                coding_to_point(g, z)
            }
        };
        if matches!(obs.form, ObservableForm::Cylinder { .. }) && word.is_none() {
            return Err(EvlError::InvalidObservable(
                "cylinder observables need a word anchor".into(),
            ));
        }
        Ok(Self {
            spec: spec.clone(),
            obs: obs.clone(),
            geometry,
            zeta,
            word,
        })
    }

    /// The anchor ζ in state-space coordinates.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn word(&self) -> Option<&SymbolicWord> {
        self.word.as_ref()
    }

    /// Itinerary of ζ used for cylinder targets: the anchor word, repeated if periodic.
    pub fn zeta_word(&self, len: usize) -> Option<SymbolicWord> {
        let w = self.word.as_ref()?;
        match &self.obs.anchor {
            Some(Anchor::PeriodicWord { .. }) => Some(SymbolicWord {
                symbols: w.symbols.iter().cycle().take(len).copied().collect(),
                base: w.base,
            }),
            _ => Some(w.prefix(len)),
        }
    }

    fn coordinate_mass(&self, pieces: &[(f64, f64)]) -> f64 {
        pieces
            .iter()
            .map(|&(lo, hi)| match self.geometry {
                Geometry::Chebyshev => (hi - lo).max(0.0),
                _ => self.spec.coordinate_measure(lo, hi).unwrap_or(0.0),
            })
            .sum::<f64>()
            .min(1.0)
    }

    /// Coordinate pieces of the ball `B_r(ζ)`.
    pub fn ball_pieces(&self, r: f64) -> Vec<(f64, f64)> {
        let z = self.zeta;
        match self.geometry {
            Geometry::Circle => {
                if r >= 0.5 {
                    return vec![(0.0, 1.0)];
                }
                let (lo, hi) = (z - r, z + r);
                if lo < 0.0 {
                    vec![(0.0, hi), (1.0 + lo, 1.0)]
                } else if hi > 1.0 {
                    vec![(lo, 1.0), (0.0, hi - 1.0)]
                } else {
                    vec![(lo, hi)]
                }
            }
            Geometry::Segment => vec![((z - r).max(0.0), (z + r).min(1.0))],
            Geometry::Chebyshev => chebyshev_pieces((z - r).max(-1.0), (z + r).min(1.0)),
            Geometry::Line => vec![],
        }
    }

    /// `ħ(r) = μ(B_r(ζ))`.
    pub fn ball_measure(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.coordinate_mass(&self.ball_pieces(r))
    }

    fn max_radius(&self) -> f64 {
        match self.geometry {
            Geometry::Circle => 0.5,
            Geometry::Segment => 1.0,
            _ => 2.0,
        }
    }

    /// `ħ^{−1}(q)`: radius of the ball around ζ with mass `q`.
    pub fn radius_for_measure(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return self.max_radius();
        }
        let uniform = self.spec.coordinate_cdf(0.25) == Some(0.25);
        match self.geometry {
            Geometry::Circle if uniform => return q / 2.0,
            Geometry::Chebyshev if self.zeta == -1.0 => return 1.0 - (PI * q).cos(),
            _ => {}
        }
        let (mut lo, mut hi) = (0.0, self.max_radius());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ball_measure(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn distance(&self, c: f64) -> f64 {
        match self.geometry {
            Geometry::Circle => {
                let d = (c - self.zeta).abs();
                d.min(1.0 - d)
            }
            Geometry::Segment => (c - self.zeta).abs(),
            Geometry::Chebyshev => (-(2.0 * PI * c).cos() - self.zeta).abs(),
            Geometry::Line => (c - self.zeta).abs(),
        }
    }

    /// Observable value at a state with fast coordinate `c`.
    pub fn value(&self, c: f64) -> f64 {
        match &self.obs.form {
            ObservableForm::Identity => match self.geometry {
                Geometry::Chebyshev => -(2.0 * PI * c).cos(),
                _ => c,
            },
            ObservableForm::Distance { g } => g.apply(self.distance(c)),
            ObservableForm::MeasureBall { g } => g.apply(self.ball_measure(self.distance(c))),
            ObservableForm::Cylinder { g } => {
                let w = self.word.as_ref().unwrap();
                let k = common_prefix(c, w);
                g.apply(self.cylinder_mass(k))
            }
        }
    }

    fn cylinder_mass(&self, k: usize) -> f64 {
        let w = self.word.as_ref().unwrap();
        let weights = self.spec.digit_weights().unwrap();
        cylinder_measure(&w.symbols[..k], &weights)
    }

    /// `P(X_0 > u)` in closed form.
    pub fn tail_probability(&self, u: f64) -> Tail {
        let probability = match &self.obs.form {
            ObservableForm::Identity => self.identity_tail(u),
            ObservableForm::Distance { g } => self.ball_measure(g.inverse(u)),
            ObservableForm::MeasureBall { g } => g.inverse(u).clamp(0.0, 1.0),
            ObservableForm::Cylinder { g } => {
                let q = g.inverse(u);
                let len = self.word.as_ref().unwrap().len();
                (0..=len).map(|k| self.cylinder_mass(k)).find(|&m| m < q).unwrap_or(0.0)
            }
        };
        let sup = self.obs.g().map_or(f64::INFINITY, |g| g.sup());
        let above_sup = u >= sup || probability <= 0.0;
        Tail {
            probability: if above_sup { 0.0 } else { probability },
            above_sup,
        }
    }

    fn identity_tail(&self, u: f64) -> f64 {
        match self.spec.kind {
            ProcessKind::Mma2 => 1.0 - u.clamp(0.0, 1.0).powi(2),
            ProcessKind::Mma13 => 1.0 - u.clamp(0.0, 1.0).powi(3),
            ProcessKind::ChebyshevQuadratic => 0.5 - u.clamp(-1.0, 1.0).asin() / PI,
            _ => 1.0 - self.spec.coordinate_cdf(u.clamp(0.0, 1.0)).unwrap_or(u.clamp(0.0, 1.0)),
        }
    }

    /// Exceedance set of the threshold `u`.
    pub fn test_for_level(&self, u: f64) -> ExceedanceTest {
        match &self.obs.form {
            ObservableForm::Identity => match self.geometry {
                Geometry::Chebyshev => ExceedanceTest::Pieces(chebyshev_pieces(u.clamp(-1.0, 1.0), 1.0)),
                _ => ExceedanceTest::Above(u),
            },
            ObservableForm::Distance { g } => ExceedanceTest::Pieces(self.ball_pieces(g.inverse(u))),
            ObservableForm::MeasureBall { g } => {
                ExceedanceTest::Pieces(self.ball_pieces(self.radius_for_measure(g.inverse(u).clamp(0.0, 1.0))))
            }
            ObservableForm::Cylinder { g } => {
                let q = g.inverse(u);
                let len = self.word.as_ref().unwrap().len();
                let k = (0..=len).find(|&k| self.cylinder_mass(k) < q).unwrap_or(len);
                ExceedanceTest::Pieces(self.cylinder_pieces(k))
            }
        }
    }

    fn cylinder_pieces(&self, k: usize) -> Vec<(f64, f64)> {
        let w = self.zeta_word(k).unwrap();
        if k == 0 {
            return vec![(0.0, 1.0)];
        }
        vec![w.interval()]
    }

    fn identity_level(&self, q: f64) -> f64 {
        match self.spec.kind {
            ProcessKind::Mma2 => (1.0 - q).sqrt(),
            ProcessKind::Mma13 => (1.0 - q).cbrt(),
            ProcessKind::ChebyshevQuadratic => (PI * q).cos(),
            ProcessKind::MAryMap { .. } if self.spec.coordinate_cdf(0.25) != Some(0.25) => {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if 1.0 - self.spec.coordinate_cdf(mid).unwrap() > q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            _ => 1.0 - q,
        }
    }

    /// Analytic level with `n·P(X_0 > u_n) = τ`.
    pub fn level_for_tau(&self, n: u64, tau: f64) -> Result<Level> {
        if !(tau > 0.0) || n == 0 {
            return Err(EvlError::InvalidArgument(format!("n = {n}, tau = {tau}")));
        }
        let q = tau / n as f64;
        if q > 1.0 {
            return Err(EvlError::NoValidLevel { ratio: q });
        }
        let (u, test, tail) = match &self.obs.form {
            ObservableForm::Identity => {
                let u = self.identity_level(q);
                (u, self.test_for_level(u), self.identity_tail(u))
            }
            ObservableForm::Distance { g } => {
                let r = self.radius_for_measure(q);
                let pieces = self.ball_pieces(r);
                let tail = self.coordinate_mass(&pieces);
                (g.apply(r), ExceedanceTest::Pieces(pieces), tail)
            }
            ObservableForm::MeasureBall { g } => {
                let pieces = self.ball_pieces(self.radius_for_measure(q));
                let tail = self.coordinate_mass(&pieces);
                (g.apply(q), ExceedanceTest::Pieces(pieces), tail)
            }
            ObservableForm::Cylinder { g } => {
                let len = self.word.as_ref().unwrap().len();
                let k = (0..=len)
                    .find(|&k| self.cylinder_mass(k) <= q)
                    .ok_or(EvlError::NoValidLevel { ratio: q })?;
                let u = if k == 0 {
                    f64::NEG_INFINITY
                } else {
                    g.apply(self.cylinder_mass(k - 1))
                };
                (
                    u,
                    ExceedanceTest::Pieces(self.cylinder_pieces(k)),
                    self.cylinder_mass(k),
                )
            }
        };
        let balls = matches!(
            self.obs.form,
            ObservableForm::Distance { .. } | ObservableForm::MeasureBall { .. }
        );
        if balls && (tail - q).abs() > 1e-6 * q {
            // The ball edge is finer than the 53-bit coordinates can resolve.
            return Err(EvlError::Undefined(format!(
                "ball of mass {q:e} around {} is below coordinate resolution (got {tail:e})",
                self.zeta
            )));
        }
        Ok(Level { n, tau, u, tail, test })
    }

    /// Cylinder target `Z_depth[ζ]` observed over `ω = ⌊τ/μ(Z_depth[ζ])⌋` steps.
    pub fn cylinder_level(&self, depth: usize, tau: f64) -> Result<Level> {
        let word = self
            .zeta_word(depth)
            .filter(|w| w.len() == depth && depth > 0)
            .ok_or_else(|| EvlError::InvalidArgument(format!("no ζ-word of length {depth}")))?;
        let weights = self.spec.digit_weights().unwrap();
        let mass = cylinder_measure(&word.symbols, &weights);
        let omega = omega_for_cylinder(&word, &weights, tau)?;
        let (lo, hi) = word.interval();
        let pieces = match self.geometry {
            // A z-cylinder of the doubling coding is still a z-interval.
            Geometry::Chebyshev | Geometry::Circle | Geometry::Segment => vec![(lo, hi)],
            Geometry::Line => unreachable!(),
        };
        Ok(Level {
            n: omega,
            tau: omega as f64 * mass,
            u: self.obs.g().map_or(f64::NAN, |g| g.apply(mass)),
            tail: mass,
            test: ExceedanceTest::Pieces(pieces),
        })
    }

    /// Observable series `X_0 … X_{len−1}` along one stationary path.
    pub fn observe_from(&self, state: &mut ProcessState, len: usize) -> Vec<f64> {
        let mut coords = Vec::with_capacity(len);
        state.fill_coordinates(&mut coords, len);
        coords.into_iter().map(|c| self.value(c)).collect()
    }
}

fn coding_to_point(geometry: Geometry, z: f64) -> f64 {
    match geometry {
        Geometry::Chebyshev => -(2.0 * PI * z).cos(),
        _ => z,
    }
}

/// `z`-pieces of the `x`-interval `[a, b)` under `x = −cos(2πz)`.
fn chebyshev_pieces(a: f64, b: f64) -> Vec<(f64, f64)> {
    let w = |x: f64| (-x).clamp(-1.0, 1.0).acos() / (2.0 * PI);
    let (wa, wb) = (w(a), w(b));
    if wb <= wa {
        return vec![];
    }
    vec![(wa, wb), (1.0 - wb, 1.0 - wa)]
}

fn common_prefix(c: f64, word: &SymbolicWord) -> usize {
    let m = word.base as f64;
    let mut rest = c;
    for (i, &d) in word.symbols.iter().enumerate() {
        let scaled = rest * m;
        let digit = (scaled.floor() as u32).min(word.base - 1);
        if digit != d as u32 {
            return i;
        }
        rest = scaled - digit as f64;
    }
    word.len()
}

pub fn tail_probability(spec: &ProcessSpec, obs: &ObservableSpec, u: f64) -> Result<Tail> {
    Ok(Observer::new(spec, obs)?.tail_probability(u))
}

pub fn level_for_tau(spec: &ProcessSpec, obs: &ObservableSpec, n: u64, tau: f64) -> Result<f64> {
    Ok(Observer::new(spec, obs)?.level_for_tau(n, tau)?.u)
}

/// `ω = ⌊τ / μ(Z[word])⌋`.
pub fn omega_for_cylinder(word: &SymbolicWord, weights: &[f64], tau: f64) -> Result<u64> {
    if word.is_empty() {
        return Err(EvlError::InvalidArgument("empty word".into()));
    }
    Ok((tau / cylinder_measure(&word.symbols, weights)).floor() as u64)
}

/// Observable series of trial 0 for `seed`.
pub fn observe_path(spec: &ProcessSpec, obs: &ObservableSpec, seed: u64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(EvlError::InvalidArgument("path length 0".into()));
    }
    let observer = Observer::new(spec, obs)?;
    let mut state = ProcessState::stationary(spec, seed, 0);
    Ok(observer.observe_from(&mut state, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LevelSource {
    Analytic,
    /// Quantile of this many stationary draws, midpoint interpolated.
    Empirical {
        samples: u64,
        seed: u64,
    },
}

/// Write-once cache of levels `u_n` for a fixed `τ`.
#[derive(Debug)]
pub struct LevelSchedule {
    pub observer: Observer,
    pub tau: f64,
    pub source: LevelSource,
    cache: Mutex<BTreeMap<u64, Level>>,
    sorted: Mutex<Option<Vec<f64>>>,
}

impl LevelSchedule {
    pub fn new(observer: Observer, tau: f64, source: LevelSource) -> Self {
        Self {
            observer,
            tau,
            source,
            cache: Mutex::new(BTreeMap::new()),
            sorted: Mutex::new(None),
        }
    }

    pub fn level(&self, n: u64) -> Result<Level> {
        if let Some(l) = self.cache.lock().unwrap().get(&n) {
            return Ok(l.clone());
        }
        let level = match self.source {
            LevelSource::Analytic => self.observer.level_for_tau(n, self.tau)?,
            LevelSource::Empirical { samples, seed } => self.empirical(n, samples, seed)?,
        };
        self.cache.lock().unwrap().entry(n).or_insert(level.clone());
        Ok(level)
    }

    fn empirical(&self, n: u64, samples: u64, seed: u64) -> Result<Level> {
        let q = self.tau / n as f64;
        if q > 1.0 {
            return Err(EvlError::NoValidLevel { ratio: q });
        }
        let mut guard = self.sorted.lock().unwrap();
        let sorted = guard.get_or_insert_with(|| {
            let mut xs: Vec<f64> = (0..samples)
                .map(|t| {
                    let s = ProcessState::stationary(&self.observer.spec, seed, t);
                    self.observer.value(s.coordinate())
                })
                .collect();
            xs.sort_by(|a, b| a.total_cmp(b));
            xs
        });
        let k = ((1.0 - q) * sorted.len() as f64).floor() as usize;
        let k = k.clamp(1, sorted.len() - 1);
        let u = 0.5 * (sorted[k - 1] + sorted[k]);
        let tail = self.observer.tail_probability(u).probability;
        Ok(Level {
            n,
            tau: self.tau,
            u,
            tail,
            test: self.observer.test_for_level(u),
        })
    }
}
