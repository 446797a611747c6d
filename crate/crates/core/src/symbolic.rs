//! Symbolic coding: words, cylinders, the first-return period sequence and
//! the structure of early returns of a cylinder to itself.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{EvlError, Result};
use crate::process::{ProcessSpec, ProcessState};

/// Finite word over `{0..base−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicWord {
    pub symbols: Vec<u8>,
    pub base: u32,
}

impl SymbolicWord {
    pub fn new(symbols: Vec<u8>, base: u32) -> Result<Self> {
        if base < 2 || base > 10 {
            return Err(EvlError::InvalidArgument(format!("base {base} not in 2..=10")));
        }
        if symbols.is_empty() {
            return Err(EvlError::InvalidArgument("empty word".into()));
        }
        if let Some(d) = symbols.iter().find(|&&d| d as u32 >= base) {
            return Err(EvlError::InvalidArgument(format!("symbol {d} ≥ base {base}")));
        }
        Ok(Self { symbols, base })
    }

    /// Parses an ASCII digit string such as `"0110"`.
    pub fn parse(text: &str, base: u32) -> Result<Self> {
        let symbols = text
            .trim()
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| EvlError::InvalidArgument(format!("bad symbol {c:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(symbols, base)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `Σ s_i m^{−(i+1)}`: left endpoint of the cylinder.
    pub fn value(&self) -> f64 {
        let m = self.base as f64;
        self.symbols.iter().rev().fold(0.0, |acc, &d| (acc + d as f64) / m)
    }

    /// Half-open coordinate interval of the cylinder `[word]`.
    pub fn interval(&self) -> (f64, f64) {
        let lo = self.value();
        (lo, lo + (self.base as f64).powi(-(self.len() as i32)))
    }

    /// Value of the periodic expansion `word^∞`.
    pub fn periodic_value(&self) -> f64 {
        let p = self.len() as i32;
        let m = self.base as f64;
        self.value() * m.powi(p) / (m.powi(p) - 1.0)
    }

    pub fn prefix(&self, n: usize) -> Self {
        Self {
            symbols: self.symbols[..n.min(self.len())].to_vec(),
            base: self.base,
        }
    }
}

impl fmt::Display for SymbolicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.symbols {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// First `n` symbols of the base-`m` expansion of `x ∈ [0,1)`.
pub fn encode_point(x: f64, base: u32, n: usize) -> Result<SymbolicWord> {
    if !(0.0..1.0).contains(&x) {
        return Err(EvlError::InvalidArgument(format!("{x} outside [0,1)")));
    }
    let m = base as f64;
    let mut rest = x;
    let mut symbols = Vec::with_capacity(n);
    for _ in 0..n {
        let scaled = rest * m;
        let d = (scaled.floor() as u32).min(base - 1);
        symbols.push(d as u8);
        rest = scaled - d as f64;
    }
    SymbolicWord::new(symbols, base)
}

/// First `n` symbols of the itinerary of a digit-coded state (a direct read).
pub fn encode_state(state: &mut ProcessState, spec: &ProcessSpec, n: usize) -> Result<SymbolicWord> {
    let base = spec
        .digit_base()
        .ok_or_else(|| EvlError::Mismatch(format!("{} has no coding", spec.label)))?;
    let digits = state
        .leading_digits(n)
        .ok_or_else(|| EvlError::Mismatch("state has no digit representation".into()))?;
    SymbolicWord::new(digits, base)
}

/// Bernoulli measure of the cylinder `[word]`.
pub fn cylinder_measure(word: &[u8], weights: &[f64]) -> f64 {
    word.iter().map(|&d| weights[d as usize]).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnStatus {
    /// Every comparison `k < n` was available.
    Decided,
    /// Some comparisons run past the end of the word; `r` is the best guess.
    Undecided,
    /// No shift shorter than the word matches; `r` is the word length, a lower bound.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub n: usize,
    pub r: usize,
    pub i_n: usize,
    pub a_n: usize,
    pub q_n: usize,
    pub status: ReturnStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSequence {
    /// Distinct first-return times `p_0 < p_1 < …`.
    pub values: Vec<usize>,
    /// One row per prefix length `n = 1..=len`.
    pub rows: Vec<PeriodRow>,
}

impl PeriodSequence {
    pub fn row(&self, n: usize) -> Option<&PeriodRow> {
        self.rows.get(n.checked_sub(1)?)
    }

    /// `p_{i_n}`, the first return time of the `n`-cylinder.
    pub fn period_at(&self, n: usize) -> Option<usize> {
        self.row(n).map(|r| r.r)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,r_n,i_n,a_n,q_n,status\n");
        for r in &self.rows {
            let status = match r.status {
                ReturnStatus::Decided => "decided",
                ReturnStatus::Undecided => "undecided",
                ReturnStatus::LowerBound => "lower_bound",
            };
            out.push_str(&format!("{},{},{},{},{},{}\n", r.n, r.r, r.i_n, r.a_n, r.q_n, status));
        }
        out
    }
}

/// First return `r(n)` of the shifted code to the `n`-cylinder, for every
/// `n ≤ len`, using only the comparisons the finite word makes available.
pub fn period_sequence(word: &SymbolicWord) -> PeriodSequence {
    let w = &word.symbols;
    let len = w.len();
    let mut rows = Vec::with_capacity(len);
    let mut values: Vec<usize> = Vec::new();
    let mut j = 1usize;
    for n in 1..=len {
        // Constraints only grow with n, so r(n) is nondecreasing.
        while j < len && !(0..n).all(|k| k + j >= len || w[k] == w[k + j]) {
            j += 1;
        }
        let status = if j >= len {
            ReturnStatus::LowerBound
        } else if n + j > len {
            ReturnStatus::Undecided
        } else {
            ReturnStatus::Decided
        };
        let r = j.min(len);
        if values.last() != Some(&r) {
            values.push(r);
        }
        rows.push(PeriodRow {
            n,
            r,
            i_n: values.len() - 1,
            a_n: n / r,
            q_n: n % r,
            status,
        });
    }
    PeriodSequence { values, rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnEntry {
    pub j: usize,
    /// Codes of the `(n+j)`-cylinders inside `Z_n[ζ]` that are back in `Z_n[ζ]` at time `j`.
    pub witnesses: Vec<SymbolicWord>,
    pub unique: bool,
    /// The witness code equals `ζ_0…ζ_{j−1}ζ_0…ζ_{n−1}`.
    pub code_matches: bool,
    /// ζ's own `(n+j)`-cylinder returns (admissible `j`).
    pub orbit_return: bool,
    /// The prefix is too short to decide `orbit_return`.
    pub undecided: bool,
    pub multiple_of_period: bool,
    /// `μ(Z_{n+j}) ≤ μ(Z_n[ζ])·ϑ^j` with `ϑ = max weight`.
    pub growth_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnStructure {
    pub n: usize,
    pub period: usize,
    pub entries: Vec<ReturnEntry>,
}

impl ReturnStructure {
    /// Uniqueness and shape of every witness.
    pub fn part_a_holds(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.witnesses.len() <= 1 && (e.witnesses.is_empty() || e.code_matches))
    }

    /// Admissible returns happen at multiples of the period.
    pub fn part_b_holds(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| e.orbit_return && !e.undecided)
            .all(|e| e.multiple_of_period)
    }

    /// Times `j` whose return is decided and admissible.
    pub fn admissible(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.orbit_return && !e.undecided)
            .map(|e| e.j)
            .collect()
    }
}

/// Largest `m^j` enumerated exhaustively; beyond it the witness is built directly.
const BRUTE_FORCE_LIMIT: u64 = 1 << 16;

/// Early returns of `Z_n[ζ]` to itself at times `j = 1..=j_max`.
pub fn return_structure(
    word: &SymbolicWord,
    n: usize,
    j_max: usize,
    weights: Option<&[f64]>,
) -> Result<ReturnStructure> {
    if n == 0 || n > word.len() {
        return Err(EvlError::InvalidArgument(format!("n = {n} outside 1..={}", word.len())));
    }
    if j_max > n {
        return Err(EvlError::InvalidArgument(format!("j_max = {j_max} > n = {n}")));
    }
    let seq = period_sequence(word);
    let period = seq.period_at(n).unwrap();
    let mut entries = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let witnesses = if (word.base as u64)
            .checked_pow(j as u32)
            .map_or(false, |c| c <= BRUTE_FORCE_LIMIT)
        {
            brute_force_witnesses(word, n, j)
        } else {
            constructed_witnesses(word, n, j)
        };
        entries.push(describe_entry(word, n, j, period, witnesses, weights));
    }
    Ok(ReturnStructure { n, period, entries })
}

fn describe_entry(
    word: &SymbolicWord,
    n: usize,
    j: usize,
    period: usize,
    witnesses: Vec<SymbolicWord>,
    weights: Option<&[f64]>,
) -> ReturnEntry {
    let z = &word.symbols;
    let mut expected = z[..j].to_vec();
    expected.extend_from_slice(&z[..n]);
    let code_matches = witnesses.iter().all(|w| w.symbols == expected);
    let undecided = n + j > z.len();
    let orbit_return = !undecided && (0..n).all(|k| z[k + j] == z[k]);
    let growth_ok = match weights {
        Some(w) => {
            let theta = w.iter().cloned().fold(0.0, f64::max);
            let base = cylinder_measure(&z[..n], w);
            witnesses
                .iter()
                .all(|c| cylinder_measure(&c.symbols, w) <= base * theta.powi(j as i32) * (1.0 + 1e-12))
        }
        None => true,
    };
    ReturnEntry {
        j,
        unique: witnesses.len() == 1,
        code_matches,
        orbit_return,
        undecided,
        multiple_of_period: j % period == 0,
        growth_ok,
        witnesses,
    }
}

/// All extensions `c` of `ζ_0…ζ_{n−1}` by `j` symbols with `c_{j..j+n} = ζ_0…ζ_{n−1}`.
fn brute_force_witnesses(word: &SymbolicWord, n: usize, j: usize) -> Vec<SymbolicWord> {
    let m = word.base as u64;
    let z = &word.symbols[..n];
    let mut out = Vec::new();
    let mut code = z.to_vec();
    code.resize(n + j, 0);
    for mut idx in 0..m.pow(j as u32) {
        for slot in (n..n + j).rev() {
            code[slot] = (idx % m) as u8;
            idx /= m;
        }
        if (0..n).all(|k| code[k + j] == z[k]) {
            out.push(SymbolicWord {
                symbols: code.clone(),
                base: word.base,
            });
        }
    }
    out
}

/// The only candidate is `ζ_0…ζ_{j−1}ζ_0…ζ_{n−1}`; it returns iff the prefix has period `j`.
fn constructed_witnesses(word: &SymbolicWord, n: usize, j: usize) -> Vec<SymbolicWord> {
    let z = &word.symbols[..n];
    if (0..n - j).all(|k| z[k + j] == z[k]) {
        let mut code = z[..j].to_vec();
        code.extend_from_slice(z);
        vec![SymbolicWord {
            symbols: code,
            base: word.base,
        }]
    } else {
        Vec::new()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub cases: u64,
    pub part_a_failures: u64,
    pub part_b_failures: u64,
    pub construction_mismatches: u64,
    pub undecided: u64,
}

/// Exhaustive check over all binary words of length `≤ max_len` and `n ≤ max_n`:
/// enumerated witnesses against the construction, uniqueness, witness code,
/// and admissible returns at multiples of the period.
pub fn lemma_check(max_len: usize, max_n: usize) -> LemmaSummary {
    let mut summary = LemmaSummary::default();
    for len in 1..=max_len {
        for bits in 0u64..(1 << len) {
            let symbols: Vec<u8> = (0..len).map(|i| ((bits >> (len - 1 - i)) & 1) as u8).collect();
            let word = SymbolicWord { symbols, base: 2 };
            let seq = period_sequence(&word);
            for n in 1..=max_n.min(len) {
                let period = seq.period_at(n).unwrap();
                for j in 1..=n {
                    summary.cases += 1;
                    let brute = brute_force_witnesses(&word, n, j);
                    if brute != constructed_witnesses(&word, n, j) {
                        summary.construction_mismatches += 1;
                    }
                    let e = describe_entry(&word, n, j, period, brute, None);
                    if e.witnesses.len() > 1 || (!e.witnesses.is_empty() && !e.code_matches) {
                        summary.part_a_failures += 1;
                    }
                    if e.undecided {
                        summary.undecided += 1;
                    } else if e.orbit_return && !e.multiple_of_period {
                        summary.part_b_failures += 1;
                    }
                }
            }
        }
    }
    summary
}

/// Exact periodic point `word^∞` as the reduced fraction `num/den`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub word: SymbolicWord,
    pub numerator: u128,
    pub denominator: u128,
    pub value: f64,
    pub prime_period: usize,
    pub primitive_root: SymbolicWord,
    /// The expansion is `(m−1)^∞`, i.e. the point 1, identified with 0 on the circle.
    pub boundary: bool,
}

/// Shortest `v` with `word = v^k`.
pub fn primitive_root(word: &SymbolicWord) -> SymbolicWord {
    let p = word.len();
    let root = (1..=p)
        .find(|d| p % d == 0 && (0..p).all(|k| word.symbols[k] == word.symbols[k % d]))
        .unwrap_or(p);
    word.prefix(root)
}

pub fn periodic_point_from_word(word: &SymbolicWord) -> Result<PeriodicPoint> {
    let root = primitive_root(word);
    let p = root.len() as u32;
    let m = root.base as u128;
    let den = m
        .checked_pow(p)
        .ok_or_else(|| EvlError::InvalidArgument(format!("period {p} too long for exact form")))?
        - 1;
    let num = root.symbols.iter().fold(0u128, |acc, &d| acc * m + d as u128);
    let g = gcd(num, den);
    let (numerator, denominator) = if num == 0 { (0, 1) } else { (num / g, den / g) };
    let boundary = numerator == denominator;
    let value = if boundary {
        0.0
    } else {
        numerator as f64 / denominator as f64
    };
    Ok(PeriodicPoint {
        word: word.clone(),
        numerator,
        denominator,
        value,
        prime_period: root.len(),
        primitive_root: root,
        boundary,
    })
}

/// Map state sitting on the orbit `word^∞`.
pub fn periodic_state(spec: &ProcessSpec, word: &SymbolicWord) -> Result<ProcessState> {
    if spec.digit_base() != Some(word.base) || !spec.is_map() {
        return Err(EvlError::Mismatch(format!(
            "base-{} word for {}",
            word.base, spec.label
        )));
    }
    ProcessState::periodic(spec, &word.symbols)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Binary Champernowne word `0 1 10 11 100 …` truncated to `len` symbols.
pub fn champernowne_prefix(len: usize) -> SymbolicWord {
    let mut symbols = Vec::with_capacity(len + 64);
    let mut k = 0u64;
    while symbols.len() < len {
        if k == 0 {
            symbols.push(0);
        } else {
            let bits = 64 - k.leading_zeros();
            symbols.extend((0..bits).rev().map(|i| ((k >> i) & 1) as u8));
        }
        k += 1;
    }
    symbols.truncate(len);
    SymbolicWord { symbols, base: 2 }
}

/// First `len` binary digits of `√2 − 1`.
pub fn sqrt2_minus_one_bits(len: usize) -> SymbolicWord {
    // floor(√2 · 2^len) = floor(√(2 · 4^len))
    let scaled = (BigUint::from(2u32) << (2 * len)).sqrt();
    let frac = scaled - (BigUint::from(1u32) << len);
    let symbols = (0..len).map(|i| frac.bit((len - 1 - i) as u64) as u8).collect();
    SymbolicWord { symbols, base: 2 }
}

/// The 153-symbol word `(0^{14}1)^{10} 001` used as a worked example of the
/// period sequence.
pub fn example_word_153() -> SymbolicWord {
    let mut text = "000000000000001".repeat(10);
    text.push_str("001");
    SymbolicWord::parse(&text, 2).unwrap()
}
