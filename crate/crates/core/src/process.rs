//! Exact simulation of the built-in stationary processes.
//!
//! Interval maps are never iterated in floating point. Each orbit is a lazily
//! generated digit stream and one application of the map is a shift of that
//! stream, so orbits of any length keep the invariant measure. Floating point
//! only appears when a digit window is read out as a number.
//!
//! The Chebyshev map `x ↦ 1 − 2x²` is simulated on the doubling coordinate
//! `z` with `x = −cos(2πz)`; `f(−cos 2πz) = −cos 4πz`, so shifting the bits
//! of `z` is one step of the map, and uniform `z` gives the arcsine law.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::observables::ExceedanceTest;
use crate::rng::TrialRng;

/// Number of leading digits read when a state is evaluated.
pub const DEFAULT_PRECISION: usize = 64;

const MAX_DESCENT_DEPTH: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    /// `x ↦ mx mod 1` with the Bernoulli measure given by `weights`.
    MAryMap { m: u32, weights: Vec<f64> },
    /// `x ↦ 2^k (x − 2^{−k})` on `(2^{−k}, 2^{−k+1}]`, Lebesgue measure.
    DyadicJump,
    /// `x ↦ 1 − 2x²` on `[−1, 1]` with the arcsine measure.
    ChebyshevQuadratic,
    /// Uniform AR(1): `X_n = X_{n−1}/r + ε_n`, `ε_n` uniform on `{0, 1/r, …, (r−1)/r}`.
    ChernickAr1 { r: u32 },
    /// `X_n = max{Y_{n−2}, Y_n}` with i.i.d. uniform innovations.
    Mma2,
    /// `X_n = max{Y_{n−3}, Y_{n−2}, Y_n}` with i.i.d. uniform innovations.
    Mma13,
    /// Independent uniform draws; the no-clustering control.
    IidUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    #[serde(default)]
    pub label: String,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind) -> Result<Self> {
        let label = default_label(&kind);
        let spec = Self { kind, label };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn doubling() -> Self {
        Self::m_ary(2)
    }

    pub fn m_ary(m: u32) -> Self {
        let weights = vec![1.0 / m as f64; m as usize];
        Self::new(ProcessKind::MAryMap { m, weights }).expect("uniform weights are valid")
    }

    /// Doubling map with the `(α, 1−α)` Bernoulli measure; digit 0 has weight `α`.
    pub fn bernoulli(alpha: f64) -> Result<Self> {
        Self::new(ProcessKind::MAryMap {
            m: 2,
            weights: vec![alpha, 1.0 - alpha],
        })
    }

    pub fn dyadic_jump() -> Self {
        Self::new(ProcessKind::DyadicJump).unwrap()
    }

    pub fn chebyshev() -> Self {
        Self::new(ProcessKind::ChebyshevQuadratic).unwrap()
    }

    pub fn ar1(r: u32) -> Result<Self> {
        Self::new(ProcessKind::ChernickAr1 { r })
    }

    pub fn mma2() -> Self {
        Self::new(ProcessKind::Mma2).unwrap()
    }

    pub fn mma13() -> Self {
        Self::new(ProcessKind::Mma13).unwrap()
    }

    pub fn iid_uniform() -> Self {
        Self::new(ProcessKind::IidUniform).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProcessKind::MAryMap { m, weights } => {
                if *m < 2 {
                    return Err(EvlError::InvalidProcess(format!("m = {m} < 2")));
                }
                if weights.len() != *m as usize {
                    return Err(EvlError::InvalidProcess(format!(
                        "{} weights for m = {m}",
                        weights.len()
                    )));
                }
                if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
                    return Err(EvlError::InvalidProcess(format!("weight {w} outside (0,1)")));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(EvlError::InvalidProcess(format!("weights sum to {total}")));
                }
                Ok(())
            }
            ProcessKind::ChernickAr1 { r } if *r < 2 => Err(EvlError::InvalidProcess(format!("r = {r} < 2"))),
            _ => Ok(()),
        }
    }

    pub fn is_map(&self) -> bool {
        matches!(
            self.kind,
            ProcessKind::MAryMap { .. } | ProcessKind::DyadicJump | ProcessKind::ChebyshevQuadratic
        )
    }

    /// Base of the digit coding, for kinds whose state is a digit sequence.
    pub fn digit_base(&self) -> Option<u32> {
        match &self.kind {
            ProcessKind::MAryMap { m, .. } => Some(*m),
            ProcessKind::DyadicJump | ProcessKind::ChebyshevQuadratic => Some(2),
            ProcessKind::ChernickAr1 { r } => Some(*r),
            _ => None,
        }
    }

    /// Per-symbol weights of the digit coding (i.i.d. digits under the invariant law).
    pub fn digit_weights(&self) -> Option<Vec<f64>> {
        match &self.kind {
            ProcessKind::MAryMap { weights, .. } => Some(weights.clone()),
            _ => self.digit_base().map(|b| vec![1.0 / b as f64; b as usize]),
        }
    }

    fn uniform_digits(&self) -> bool {
        match &self.kind {
            ProcessKind::MAryMap { m, weights } => weights.iter().all(|w| (w - 1.0 / *m as f64).abs() < 1e-15),
            _ => true,
        }
    }

    /// Distribution function of the coordinate (see [`ProcessState::coordinate`])
    /// under the stationary law, for digit-coded kinds.
    pub fn coordinate_cdf(&self, x: f64) -> Option<f64> {
        let base = self.digit_base()?;
        if self.uniform_digits() {
            return Some(x.clamp(0.0, 1.0));
        }
        let weights = self.digit_weights()?;
        Some(bernoulli_cdf(base, &weights, x))
    }

    /// Stationary mass of the coordinate interval `[lo, hi)`, `0 ≤ lo ≤ hi ≤ 1`.
    pub fn coordinate_measure(&self, lo: f64, hi: f64) -> Option<f64> {
        Some((self.coordinate_cdf(hi)? - self.coordinate_cdf(lo)?).max(0.0))
    }
}

fn default_label(kind: &ProcessKind) -> String {
    match kind {
        ProcessKind::MAryMap { m, weights } => {
            let uniform = weights.iter().all(|w| (w - 1.0 / *m as f64).abs() < 1e-15);
            if uniform {
                format!("m-ary(m={m})")
            } else {
                let w: Vec<String> = weights.iter().map(|w| format!("{w}")).collect();
                format!("m-ary(m={m};w={})", w.join("/"))
            }
        }
        ProcessKind::DyadicJump => "dyadic-jump".into(),
        ProcessKind::ChebyshevQuadratic => "chebyshev".into(),
        ProcessKind::ChernickAr1 { r } => format!("ar1(r={r})"),
        ProcessKind::Mma2 => "mma2".into(),
        ProcessKind::Mma13 => "mma13".into(),
        ProcessKind::IidUniform => "iid-uniform".into(),
    }
}

/// Distribution function of the Bernoulli (product) measure on base-`m` expansions.
pub fn bernoulli_cdf(base: u32, weights: &[f64], x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let m = base as f64;
    let mut rest = x;
    let mut acc = 0.0;
    let mut mass = 1.0;
    for _ in 0..1100 {
        let scaled = rest * m;
        let d = (scaled.floor() as usize).min(base as usize - 1);
        let below: f64 = weights[..d].iter().sum();
        acc += mass * below;
        mass *= weights[d];
        rest = scaled - d as f64;
        if mass < 1e-300 || rest <= 0.0 {
            break;
        }
    }
    acc
}

#[derive(Debug, Clone)]
enum DigitSampler {
    Uniform(u32),
    /// Cumulative thresholds on the 32-bit scale; digit `d` is drawn when
    /// `thresholds[d-1] <= u < thresholds[d]`.
    Weighted(Vec<u64>),
}

impl DigitSampler {
    fn new(base: u32, weights: &[f64], uniform: bool) -> Self {
        if uniform {
            return DigitSampler::Uniform(base);
        }
        let mut acc = 0.0;
        let mut thresholds = Vec::with_capacity(weights.len());
        for w in &weights[..weights.len() - 1] {
            acc += w;
            thresholds.push((acc * 4_294_967_296.0).round() as u64);
        }
        DigitSampler::Weighted(thresholds)
    }

    #[inline]
    fn draw(&self, rng: &mut TrialRng) -> u8 {
        match self {
            DigitSampler::Uniform(b) => rng.next_below(*b) as u8,
            DigitSampler::Weighted(t) => {
                let u = rng.next_u32() as u64;
                if t.len() == 1 {
                    (u >= t[0]) as u8
                } else {
                    t.iter().take_while(|&&c| u >= c).count() as u8
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum DigitSource {
    Random { sampler: DigitSampler, rng: TrialRng },
    Periodic { word: Vec<u8>, next: usize },
}

/// Lazily extended symbol sequence over `{0..m−1}`.
///
/// Digits at or after the cursor are fixed the first time they are read and
/// never change afterwards. Digits before the cursor have been shifted out.
#[derive(Debug, Clone)]
pub struct DigitStream {
    base: u32,
    forced: VecDeque<u8>,
    source: DigitSource,
    buffer: VecDeque<u8>,
    cursor: u64,
}

impl DigitStream {
    /// I.i.d. digits with the given weights, preceded by `prefix`.
    pub fn random(base: u32, weights: &[f64], prefix: Vec<u8>, rng: TrialRng) -> Self {
        let uniform = weights.iter().all(|w| (w - 1.0 / base as f64).abs() < 1e-15);
        Self {
            base,
            forced: prefix.into(),
            source: DigitSource::Random {
                sampler: DigitSampler::new(base, weights, uniform),
                rng,
            },
            buffer: VecDeque::with_capacity(128),
            cursor: 0,
        }
    }

    /// The eventually periodic sequence `word word word …`.
    pub fn periodic(base: u32, word: Vec<u8>) -> Self {
        assert!(!word.is_empty());
        Self {
            base,
            forced: VecDeque::new(),
            source: DigitSource::Periodic { word, next: 0 },
            buffer: VecDeque::with_capacity(128),
            cursor: 0,
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Absolute index of the first unread digit.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    #[inline]
    fn generate(&mut self) -> u8 {
        if let Some(d) = self.forced.pop_front() {
            return d;
        }
        match &mut self.source {
            DigitSource::Random { sampler, rng } => sampler.draw(rng),
            DigitSource::Periodic { word, next } => {
                let d = word[*next];
                *next = (*next + 1) % word.len();
                d
            }
        }
    }

    #[inline]
    fn ensure(&mut self, len: usize) {
        while self.buffer.len() < len {
            let d = self.generate();
            self.buffer.push_back(d);
        }
    }

    /// Digit at absolute index `index`, or `None` if it was already shifted out.
    pub fn digit(&mut self, index: u64) -> Option<u8> {
        if index < self.cursor {
            return None;
        }
        let offset = (index - self.cursor) as usize;
        self.ensure(offset + 1);
        Some(self.buffer[offset])
    }

    /// Digit `offset` places after the cursor.
    #[inline]
    pub fn peek(&mut self, offset: usize) -> u8 {
        self.ensure(offset + 1);
        self.buffer[offset]
    }

    /// Consumes and returns the digit at the cursor.
    #[inline]
    pub fn advance(&mut self) -> u8 {
        self.ensure(1);
        self.cursor += 1;
        self.buffer.pop_front().unwrap()
    }

    /// The next `n` digits after the cursor.
    pub fn prefix(&mut self, n: usize) -> Vec<u8> {
        self.ensure(n);
        self.buffer.iter().take(n).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftFlavor {
    MAry,
    DyadicJump,
    Chebyshev,
}

/// Digit stream plus a packed K-digit window at the cursor.
#[derive(Debug, Clone)]
pub struct ShiftState {
    flavor: ShiftFlavor,
    stream: DigitStream,
    width: usize,
    packed: u128,
    lead: u128,
    scale: f64,
    binary: bool,
}

impl ShiftState {
    fn new(flavor: ShiftFlavor, mut stream: DigitStream) -> Self {
        let base = stream.base() as u128;
        let width = window_width(stream.base());
        let mut packed = 0u128;
        for i in 0..width {
            packed = packed * base + stream.peek(i) as u128;
        }
        let lead = base.pow(width as u32 - 1);
        let scale = (stream.base() as f64).powi(-(width as i32));
        let binary = stream.base() == 2;
        Self {
            flavor,
            stream,
            width,
            packed,
            lead,
            scale,
            binary,
        }
    }

    #[inline]
    fn shift_one(&mut self) -> u8 {
        let d0 = self.stream.advance();
        let incoming = self.stream.peek(self.width - 1);
        self.packed = (self.packed - d0 as u128 * self.lead) * self.stream.base() as u128 + incoming as u128;
        d0
    }

    #[inline]
    fn step(&mut self) {
        match self.flavor {
            ShiftFlavor::MAry | ShiftFlavor::Chebyshev => {
                self.shift_one();
            }
            ShiftFlavor::DyadicJump => while self.shift_one() == 0 {},
        }
    }

    #[inline]
    fn coordinate(&self) -> f64 {
        if self.binary {
            truncated_unit(self.packed)
        } else {
            self.packed as f64 * self.scale
        }
    }

    pub fn stream(&mut self) -> &mut DigitStream {
        &mut self.stream
    }
}

/// 64-bit binary fraction truncated (not rounded) to 53 bits, so dyadic
/// cylinder boundaries of depth ≤ 53 are respected exactly.
#[inline]
fn truncated_unit(packed: u128) -> f64 {
    ((packed as u64) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Largest digit count K ≤ 64 with `base^K` representable in a u128.
fn window_width(base: u32) -> usize {
    let mut k = 0usize;
    let mut acc: u128 = 1;
    while k < DEFAULT_PRECISION {
        match acc.checked_mul(base as u128) {
            Some(next) => {
                acc = next;
                k += 1;
            }
            None => break,
        }
    }
    k
}

/// Uniform AR(1) state: the base-`r` digits of `X_n`, most significant first,
/// truncated to `width` digits and packed into a u128.
#[derive(Debug, Clone)]
pub struct Ar1State {
    r: u32,
    width: usize,
    packed: u128,
    lead: u128,
    scale: f64,
    ring: [u8; 64],
    head: usize,
    shift: u32,
    inv_odd: u128,
    rng: TrialRng,
}

impl Ar1State {
    fn new(r: u32, digits: &[u8], rng: TrialRng) -> Self {
        let width = window_width(r);
        assert!(digits.len() >= width);
        let mut ring = [0u8; 64];
        let mut packed = 0u128;
        for (i, &d) in digits.iter().take(width).enumerate() {
            ring[i] = d;
            packed = packed * r as u128 + d as u128;
        }
        let shift = r.trailing_zeros();
        let odd = (r >> shift) as u128;
        // Newton iteration for the inverse of an odd number modulo 2^128.
        let mut inv = odd;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(odd.wrapping_mul(inv)));
        }
        Self {
            r,
            width,
            packed,
            lead: (r as u128).pow(width as u32 - 1),
            scale: (r as f64).powi(-(width as i32)),
            ring,
            head: 0,
            shift,
            inv_odd: inv,
            rng,
        }
    }

    /// Prepends the innovation digit `r·ε_n`, dropping the least significant digit.
    #[inline]
    pub fn prepend_digit(&mut self, d: u8) {
        let slot = (self.head + self.width - 1) % self.width;
        let last = self.ring[slot] as u128;
        let quotient = ((self.packed - last) >> self.shift).wrapping_mul(self.inv_odd);
        self.packed = d as u128 * self.lead + quotient;
        self.ring[slot] = d;
        self.head = slot;
    }

    #[inline]
    fn step(&mut self) {
        let d = self.rng.next_below(self.r) as u8;
        self.prepend_digit(d);
    }

    /// Digits of the current value, most significant first.
    pub fn digits(&self) -> Vec<u8> {
        (0..self.width)
            .map(|i| self.ring[(self.head + i) % self.width])
            .collect()
    }

    #[inline]
    fn value(&self) -> f64 {
        if self.r == 2 {
            truncated_unit(self.packed)
        } else {
            self.packed as f64 * self.scale
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovingMaxLags {
    /// `max{Y_{n−2}, Y_n}`
    Two,
    /// `max{Y_{n−3}, Y_{n−2}, Y_n}`
    OneThree,
}

/// Innovations buffer: `window[i]` holds `Y_{n−i}`.
#[derive(Debug, Clone)]
pub struct MovingMaxState {
    lags: MovingMaxLags,
    window: [f64; 4],
    rng: TrialRng,
}

impl MovingMaxState {
    pub fn from_innovations(lags: MovingMaxLags, window: [f64; 4], rng: TrialRng) -> Self {
        Self { lags, window, rng }
    }

    fn redraw(&mut self) {
        for i in (0..4).rev() {
            self.window[i] = self.rng.next_open01();
        }
    }

    #[inline]
    fn step(&mut self) {
        self.window = [self.rng.next_open01(), self.window[0], self.window[1], self.window[2]];
    }

    #[inline]
    fn value(&self) -> f64 {
        match self.lags {
            MovingMaxLags::Two => self.window[0].max(self.window[2]),
            MovingMaxLags::OneThree => self.window[0].max(self.window[2]).max(self.window[3]),
        }
    }

    pub fn innovations(&self) -> [f64; 4] {
        self.window
    }
}

#[derive(Debug, Clone)]
pub struct IidState {
    value: f64,
    rng: TrialRng,
}

/// Current state of a simulated process; owns its random source.
#[derive(Debug, Clone)]
pub enum ProcessState {
    Shift(ShiftState),
    Ar1(Ar1State),
    MovingMax(MovingMaxState),
    Iid(IidState),
}

/// Stationary initial state for trial 0 of `seed`.
pub fn sample_initial(spec: &ProcessSpec, seed: u64) -> ProcessState {
    ProcessState::stationary(spec, seed, 0)
}

impl ProcessState {
    /// A state distributed according to the stationary law, for trial `trial`.
    pub fn stationary(spec: &ProcessSpec, seed: u64, trial: u64) -> Self {
        Self::with_prefix(spec, Vec::new(), TrialRng::new(seed, trial)).expect("digit-coded or rejection-free kinds")
    }

    /// Stationary law conditioned on the leading digits equal to `prefix`.
    /// Non-digit kinds ignore the prefix.
    pub fn with_prefix(spec: &ProcessSpec, prefix: Vec<u8>, mut rng: TrialRng) -> Result<Self> {
        if let Some(base) = spec.digit_base() {
            if prefix.iter().any(|&d| d as u32 >= base) {
                return Err(EvlError::InvalidArgument("digit outside alphabet".into()));
            }
        }
        Ok(match &spec.kind {
            ProcessKind::MAryMap { m, weights } => ProcessState::Shift(ShiftState::new(
                ShiftFlavor::MAry,
                DigitStream::random(*m, weights, prefix, rng),
            )),
            ProcessKind::DyadicJump => ProcessState::Shift(ShiftState::new(
                ShiftFlavor::DyadicJump,
                DigitStream::random(2, &[0.5, 0.5], prefix, rng),
            )),
            ProcessKind::ChebyshevQuadratic => ProcessState::Shift(ShiftState::new(
                ShiftFlavor::Chebyshev,
                DigitStream::random(2, &[0.5, 0.5], prefix, rng),
            )),
            ProcessKind::ChernickAr1 { r } => {
                let width = window_width(*r);
                let mut digits = prefix;
                digits.truncate(width);
                while digits.len() < width {
                    digits.push(rng.next_below(*r) as u8);
                }
                ProcessState::Ar1(Ar1State::new(*r, &digits, rng))
            }
            ProcessKind::Mma2 | ProcessKind::Mma13 => {
                let lags = if spec.kind == ProcessKind::Mma2 {
                    MovingMaxLags::Two
                } else {
                    MovingMaxLags::OneThree
                };
                let mut s = MovingMaxState::from_innovations(lags, [0.0; 4], rng);
                s.redraw();
                ProcessState::MovingMax(s)
            }
            ProcessKind::IidUniform => {
                let value = rng.next_open01();
                ProcessState::Iid(IidState { value, rng })
            }
        })
    }

    /// A map state sitting on the periodic orbit with itinerary `word^∞`.
    pub fn periodic(spec: &ProcessSpec, word: &[u8]) -> Result<Self> {
        let flavor = match spec.kind {
            ProcessKind::MAryMap { .. } => ShiftFlavor::MAry,
            ProcessKind::DyadicJump => ShiftFlavor::DyadicJump,
            ProcessKind::ChebyshevQuadratic => ShiftFlavor::Chebyshev,
            _ => return Err(EvlError::Mismatch(format!("{} has no symbolic orbit", spec.label))),
        };
        let base = spec.digit_base().unwrap();
        if word.is_empty() || word.iter().any(|&d| d as u32 >= base) {
            return Err(EvlError::InvalidArgument("bad periodic word".into()));
        }
        Ok(ProcessState::Shift(ShiftState::new(
            flavor,
            DigitStream::periodic(base, word.to_vec()),
        )))
    }

    /// Stationary law conditioned on the coordinate lying in the union of
    /// `pieces` (half-open intervals of `[0,1)`). Digit-coded kinds fix the
    /// leading digits exactly by descending through cylinders; other kinds
    /// fall back to rejection sampling against `accept`.
    pub fn conditioned(
        spec: &ProcessSpec,
        pieces: &[(f64, f64)],
        accept: impl Fn(f64) -> bool,
        seed: u64,
        trial: u64,
        max_attempts: u64,
    ) -> Result<Self> {
        let mut rng = TrialRng::new(seed, trial);
        if let (Some(base), Some(weights)) = (spec.digit_base(), spec.digit_weights()) {
            let masses: Vec<f64> = pieces
                .iter()
                .map(|&(lo, hi)| spec.coordinate_measure(lo, hi).unwrap_or(0.0))
                .collect();
            let total: f64 = masses.iter().sum();
            if total <= 0.0 {
                return Err(EvlError::InvalidArgument("target has zero mass".into()));
            }
            let mut pick = rng.next_f64() * total;
            let mut chosen = pieces[pieces.len() - 1];
            for (piece, mass) in pieces.iter().zip(&masses) {
                if pick < *mass {
                    chosen = *piece;
                    break;
                }
                pick -= mass;
            }
            let prefix = descend_into(base, &weights, chosen, &mut rng);
            return Self::with_prefix(spec, prefix, rng);
        }
        let mut state = Self::with_prefix(spec, Vec::new(), rng)?;
        for _ in 0..max_attempts {
            if accept(state.coordinate()) {
                return Ok(state);
            }
            state.redraw();
        }
        Err(EvlError::RejectionCap { attempts: max_attempts })
    }

    fn redraw(&mut self) {
        match self {
            ProcessState::MovingMax(s) => s.redraw(),
            ProcessState::Iid(s) => s.value = s.rng.next_open01(),
            _ => unreachable!("digit-coded states are conditioned exactly"),
        }
    }

    /// One time step of the process.
    #[inline]
    pub fn step(&mut self) {
        match self {
            ProcessState::Shift(s) => s.step(),
            ProcessState::Ar1(s) => s.step(),
            ProcessState::MovingMax(s) => s.step(),
            ProcessState::Iid(s) => s.value = s.rng.next_open01(),
        }
    }

    /// Fast read-out used by exceedance tests: the point in `[0,1)` for m-ary
    /// and dyadic-jump maps, the doubling coordinate `z` for Chebyshev, and the
    /// process value `X_n` otherwise.
    #[inline]
    pub fn coordinate(&self) -> f64 {
        match self {
            ProcessState::Shift(s) => s.coordinate(),
            ProcessState::Ar1(s) => s.value(),
            ProcessState::MovingMax(s) => s.value(),
            ProcessState::Iid(s) => s.value,
        }
    }

    /// Point of the state space: `x ∈ [0,1)` or `[−1,1]` for maps, `X_n` otherwise.
    pub fn point(&mut self) -> f64 {
        self.evaluate_point(DEFAULT_PRECISION)
    }

    /// Σ of the first `precision` digits weighted by `m^{−(i+1)}` (then
    /// `−cos 2π·` for Chebyshev); the moving-max value for MMA kinds.
    pub fn evaluate_point(&mut self, precision: usize) -> f64 {
        let precision = precision.max(1);
        match self {
            ProcessState::Shift(s) => {
                let base = s.stream.base() as f64;
                let digits = s.stream.prefix(precision);
                let z = digits.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / base);
                match s.flavor {
                    ShiftFlavor::Chebyshev => -(2.0 * std::f64::consts::PI * z).cos(),
                    _ => z,
                }
            }
            ProcessState::Ar1(s) => {
                let base = s.r as f64;
                s.digits()
                    .iter()
                    .take(precision)
                    .rev()
                    .fold(0.0, |acc, &d| (acc + d as f64) / base)
            }
            ProcessState::MovingMax(s) => s.value(),
            ProcessState::Iid(s) => s.value,
        }
    }

    /// Leading `n` symbols of the itinerary (map kinds) or of the base-r
    /// expansion (AR1).
    pub fn leading_digits(&mut self, n: usize) -> Option<Vec<u8>> {
        match self {
            ProcessState::Shift(s) => Some(s.stream.prefix(n)),
            ProcessState::Ar1(s) => Some(s.digits().into_iter().take(n).collect()),
            _ => None,
        }
    }

    /// Visits the coordinates at times `0..len`, stepping after each visit.
    /// Stops early when `visit` returns `false`.
    #[inline]
    pub fn drive<F: FnMut(u64, f64) -> bool>(&mut self, len: u64, mut visit: F) {
        match self {
            ProcessState::Shift(s) => {
                for i in 0..len {
                    if !visit(i, s.coordinate()) {
                        return;
                    }
                    s.step();
                }
            }
            ProcessState::Ar1(s) => {
                for i in 0..len {
                    if !visit(i, s.value()) {
                        return;
                    }
                    s.step();
                }
            }
            ProcessState::MovingMax(s) => {
                for i in 0..len {
                    if !visit(i, s.value()) {
                        return;
                    }
                    s.step();
                }
            }
            ProcessState::Iid(s) => {
                for i in 0..len {
                    if !visit(i, s.value) {
                        return;
                    }
                    s.value = s.rng.next_open01();
                }
            }
        }
    }

    /// Appends `len` successive coordinates.
    pub fn fill_coordinates(&mut self, out: &mut Vec<f64>, len: usize) {
        out.reserve(len);
        self.drive(len as u64, |_, c| {
            out.push(c);
            true
        });
    }

    /// Indices in `0..len` at which the coordinate satisfies `test`.
    pub fn collect_exceedances(&mut self, test: &ExceedanceTest, len: u64, out: &mut Vec<u64>) {
        out.clear();
        match test {
            ExceedanceTest::Above(u) => {
                let u = *u;
                self.drive(len, |i, c| {
                    if c > u {
                        out.push(i);
                    }
                    true
                })
            }
            ExceedanceTest::Pieces(p) if p.len() == 1 => {
                let (lo, hi) = p[0];
                self.drive(len, |i, c| {
                    if c >= lo && c < hi {
                        out.push(i);
                    }
                    true
                })
            }
            _ => self.drive(len, |i, c| {
                if test.contains(c) {
                    out.push(i);
                }
                true
            }),
        }
    }

    /// First time `j ∈ 1..=horizon` with the process inside the target, if any.
    pub fn first_hit(&mut self, test: &ExceedanceTest, horizon: u64) -> Option<u64> {
        let mut hit = None;
        self.drive(horizon + 1, |i, c| {
            if i > 0 && test.contains(c) {
                hit = Some(i);
                false
            } else {
                true
            }
        });
        hit
    }
}

/// Chooses leading digits of a point drawn from the Bernoulli measure
/// restricted to `[lo, hi)`. Stops once the current cylinder lies inside the
/// interval; the remaining digits are then unconstrained.
fn descend_into(base: u32, weights: &[f64], piece: (f64, f64), rng: &mut TrialRng) -> Vec<u8> {
    let m = base as f64;
    let (mut lo, mut hi) = piece;
    let mut digits = Vec::new();
    let local =
        |a: f64, b: f64| -> f64 { (bernoulli_cdf(base, weights, b) - bernoulli_cdf(base, weights, a)).max(0.0) };
    while digits.len() < MAX_DESCENT_DEPTH {
        if lo <= 0.0 && hi >= 1.0 {
            break;
        }
        let masses: Vec<f64> = (0..base)
            .map(|k| {
                let a = ((lo - k as f64 / m) * m).clamp(0.0, 1.0);
                let b = ((hi - k as f64 / m) * m).clamp(0.0, 1.0);
                weights[k as usize] * local(a, b)
            })
            .collect();
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut pick = rng.next_f64() * total;
        let mut d = base as usize - 1;
        for (k, mass) in masses.iter().enumerate() {
            if pick < *mass {
                d = k;
                break;
            }
            pick -= mass;
        }
        while masses[d] <= 0.0 {
            d -= 1;
        }
        digits.push(d as u8);
        lo = (lo - d as f64 / m) * m;
        hi = (hi - d as f64 / m) * m;
    }
    digits
}
