//! Escapes `Q_{p,j} = {X_j > u, X_{j+p} ≤ u}`, their higher-order versions,
//! no-escape windows, and finite-n diagnostics for the clustering conditions.

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{EvlError, Result};
use crate::stats::{MeanAcc, RatioAcc};

/// Offsets `(p_1, …, p_i)` of an order-`i` escape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EscapeOffsets(Vec<usize>);

impl EscapeOffsets {
    pub fn new(offsets: Vec<usize>) -> Result<Self> {
        if offsets.is_empty() || offsets.contains(&0) {
            return Err(EvlError::InvalidArgument(format!(
                "offsets must be positive and non-empty: {offsets:?}"
            )));
        }
        Ok(Self(offsets))
    }

    pub fn single(p: usize) -> Self {
        Self::new(vec![p]).unwrap()
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.0
    }

    /// `p_1 + … + p_i`: furthest index read relative to `j`.
    pub fn span(&self) -> usize {
        self.0.iter().sum()
    }

    /// The first `k` offsets.
    pub fn truncated(&self, k: usize) -> Self {
        Self(self.0[..k].to_vec())
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(";")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let offsets = text
            .split([';', ','])
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| EvlError::InvalidArgument(format!("bad offset {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(offsets)
    }
}

fn escape_rec(series: &[f64], j: usize, offsets: &[usize], u: f64) -> bool {
    match offsets.split_last() {
        None => series[j] > u,
        Some((&p, rest)) => escape_rec(series, j, rest, u) && !escape_rec(series, j + p, rest, u),
    }
}

/// `Q^{(i)}_{𝐩_i, j}(u)` on an observed series.
pub fn escape_event(series: &[f64], j: usize, offsets: &EscapeOffsets, u: f64) -> Result<bool> {
    let needed = j + offsets.span() + 1;
    if needed > series.len() {
        return Err(EvlError::OutOfRange {
            needed,
            len: series.len(),
        });
    }
    Ok(escape_rec(series, j, offsets.offsets(), u))
}

/// No escape of the given order at any index of `[s, s+ℓ)`.
pub fn no_escape_window(series: &[f64], s: usize, len: usize, offsets: &EscapeOffsets, u: f64) -> Result<bool> {
    if len == 0 {
        return Ok(true);
    }
    let needed = s + len + offsets.span();
    if needed > series.len() {
        return Err(EvlError::OutOfRange {
            needed,
            len: series.len(),
        });
    }
    Ok((s..s + len).all(|j| !escape_rec(series, j, offsets.offsets(), u)))
}

#[inline]
fn exceeds(idx: &[u64], j: u64) -> bool {
    idx.binary_search(&j).is_ok()
}

fn escape_at_rec(idx: &[u64], j: u64, offsets: &[usize]) -> bool {
    match offsets.split_last() {
        None => exceeds(idx, j),
        Some((&p, rest)) => escape_at_rec(idx, j, rest) && !escape_at_rec(idx, j + p as u64, rest),
    }
}

/// Escape test on a path given by its sorted exceedance indices.
pub fn escape_at(idx: &[u64], j: u64, offsets: &EscapeOffsets) -> bool {
    escape_at_rec(idx, j, offsets.offsets())
}

/// Indices `j < limit` carrying an escape (escapes only start at exceedances).
pub fn escape_indices(idx: &[u64], offsets: &EscapeOffsets, limit: u64, out: &mut Vec<u64>) {
    out.clear();
    out.extend(
        idx.iter()
            .copied()
            .take_while(|&j| j < limit)
            .filter(|&j| escape_at(idx, j, offsets)),
    );
}

/// Finite-n choices for the clustering diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticParams {
    pub n: u64,
    pub k_n: u64,
    pub t_n: u64,
    pub ell: u64,
}

impl DiagnosticParams {
    /// `k_n = ⌊√n⌋`, `t_n = ⌊n^{1/4}⌋`, `ℓ = ⌊n/k_n⌋`.
    pub fn defaults(n: u64) -> Self {
        let k_n = ((n as f64).sqrt().floor() as u64).max(2);
        Self {
            n,
            k_n,
            t_n: ((n as f64).powf(0.25).floor() as u64).max(1),
            ell: n / k_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub name: String,
    pub n: u64,
    /// Lag, time offset, or table index, depending on the diagnostic.
    pub index: i64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub params: DiagnosticParams,
    pub rows: Vec<DiagnosticRow>,
    /// Fewer than 100 conditioning exceedances: intervals are wide.
    pub widened_ci: bool,
    pub exceedances: u64,
}

impl ConditionReport {
    pub fn get(&self, name: &str, index: i64) -> Option<&DiagnosticRow> {
        self.rows.iter().find(|r| r.name == name && r.index == index)
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a DiagnosticRow> + 'a {
        self.rows.iter().filter(move |r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,n,t_or_j,value,stderr\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.name, r.n, r.index, r.value, r.stderr));
        }
        out
    }
}

/// `⌈ln n / |ln(1−θ)|⌉`, the depth of the MP table.
pub fn mp_cutoff(n: u64, theta: f64) -> usize {
    if theta >= 1.0 {
        return 1;
    }
    ((n as f64).ln() / (1.0 - theta).ln().abs()).ceil().max(1.0) as usize
}

#[derive(Clone, Default)]
struct PeriodicityAcc {
    sub: Vec<RatioAcc>,
    chain: Vec<RatioAcc>,
    joint: Vec<MeanAcc>,
    exceedances: u64,
}

/// Sub-period probabilities, continuation at `p`, the MP ratio table and SP
/// partial sums, averaged over every exceedance of every path.
pub fn periodicity_report(ens: &Ensemble, p: usize, theta: f64, n: u64, cutoff: usize) -> Result<ConditionReport> {
    let reach = (cutoff * p) as u64;
    if ens.path_len <= reach {
        return Err(EvlError::InvalidArgument("paths shorter than the MP table".into()));
    }
    let window = ens.path_len - reach;
    let acc = ens.fold(
        || PeriodicityAcc {
            sub: vec![RatioAcc::default(); p],
            chain: vec![RatioAcc::default(); cutoff + 1],
            joint: vec![MeanAcc::default(); cutoff + 1],
            exceedances: 0,
        },
        |_, idx, acc| {
            let starts: Vec<u64> = idx.iter().copied().take_while(|&j| j < window).collect();
            let y = starts.len() as f64;
            acc.exceedances += starts.len() as u64;
            for lag in 1..p {
                let hits = starts.iter().filter(|&&j| exceeds(idx, j + lag as u64)).count();
                acc.sub[lag].push(hits as f64, y);
            }
            let mut runs = vec![0u64; cutoff + 1];
            for &j in &starts {
                let mut k = 0;
                while k < cutoff && exceeds(idx, j + ((k + 1) * p) as u64) {
                    k += 1;
                }
                for c in runs.iter_mut().take(k + 1).skip(1) {
                    *c += 1;
                }
            }
            for i in 1..=cutoff {
                acc.chain[i].push(runs[i] as f64, y);
                acc.joint[i].push(runs[i] as f64 / window as f64);
            }
        },
        |a, b| {
            for (x, y) in a.sub.iter_mut().zip(&b.sub) {
                x.merge(y);
            }
            for (x, y) in a.chain.iter_mut().zip(&b.chain) {
                x.merge(y);
            }
            for (x, y) in a.joint.iter_mut().zip(&b.joint) {
                x.merge(y);
            }
            a.exceedances += b.exceedances;
        },
    );
    let nf = n as f64;
    let mut rows = Vec::new();
    for lag in 1..p {
        rows.push(DiagnosticRow {
            name: "subperiod_prob".into(),
            n,
            index: lag as i64,
            value: acc.sub[lag].ratio(),
            stderr: acc.sub[lag].stderr(),
        });
    }
    rows.push(DiagnosticRow {
        name: "continuation_prob".into(),
        n,
        index: p as i64,
        value: acc.chain[1].ratio(),
        stderr: acc.chain[1].stderr(),
    });
    for i in 1..=cutoff {
        let scale = (1.0 - theta).powi(i as i32);
        rows.push(DiagnosticRow {
            name: "mp_ratio".into(),
            n,
            index: i as i64,
            value: acc.chain[i].ratio() / scale,
            stderr: acc.chain[i].stderr() / scale,
        });
    }
    let (mut partial, mut var) = (0.0, 0.0);
    for i in 1..=cutoff {
        partial += nf * acc.joint[i].mean();
        var += (nf * acc.joint[i].stderr()).powi(2);
        rows.push(DiagnosticRow {
            name: "sp_partial_sum".into(),
            n,
            index: i as i64,
            value: partial,
            stderr: var.sqrt(),
        });
    }
    Ok(ConditionReport {
        params: DiagnosticParams::defaults(n),
        rows,
        widened_ci: acc.exceedances < 100,
        exceedances: acc.exceedances,
    })
}

/// `n·Σ_{j=1}^{⌊n/k_n⌋} P̂(Q_0 ∩ Q_j)` with its standard error, averaged over all
/// valid start indices of every path.
pub fn dprime_sum(ens: &Ensemble, offsets: &EscapeOffsets, n: u64, k_n: u64) -> Result<(f64, f64)> {
    if k_n < 2 || n / k_n < 1 {
        return Err(EvlError::InvalidArgument(format!("k_n = {k_n} for n = {n}")));
    }
    let reach = n / k_n;
    let span = offsets.span() as u64;
    if ens.path_len <= reach + span {
        return Err(EvlError::InvalidArgument("paths too short for D' window".into()));
    }
    let starts = ens.path_len - reach - span;
    let acc = ens.fold(
        RatioAcc::default,
        |_, idx, acc| {
            let mut esc = Vec::new();
            escape_indices(idx, offsets, ens.path_len - span, &mut esc);
            let mut pairs = 0u64;
            for (a, &e) in esc.iter().enumerate() {
                if e >= starts {
                    break;
                }
                pairs += esc[a + 1..].iter().take_while(|&&f| f <= e + reach).count() as u64;
            }
            acc.push(pairs as f64, starts as f64);
        },
        |a, b| a.merge(&b),
    );
    Ok((n as f64 * acc.ratio(), n as f64 * acc.stderr()))
}

/// Estimate of `P(Q_0 ∩ 𝒬_{t,ℓ}) − P(Q_0)·P(𝒬_{0,ℓ})` with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub stderr: f64,
}

impl GapEstimate {
    pub fn abs(&self) -> f64 {
        self.gap.abs()
    }
}

pub fn dp_gap(ens: &Ensemble, offsets: &EscapeOffsets, t: u64, ell: u64) -> Result<GapEstimate> {
    if ell == 0 {
        return Ok(GapEstimate { gap: 0.0, stderr: 0.0 });
    }
    let span = offsets.span() as u64;
    if ens.path_len < span + t + ell {
        return Err(EvlError::InvalidArgument("t + ℓ exceeds the path length".into()));
    }
    let starts = ens.path_len - span - t - ell + 1;
    let per_path: Vec<(f64, f64, f64)> = ens.fold(
        Vec::new,
        |_, idx, acc| {
            let mut esc = Vec::new();
            escape_indices(idx, offsets, ens.path_len - span, &mut esc);
            // Starts s whose window [s+t, s+t+ℓ) holds an escape e: s ∈ [e−t−ℓ+1, e−t].
            let mut blocked = 0u64;
            let mut covered_to = 0u64; // exclusive end of the merged union so far
            for &e in &esc {
                if e < t {
                    continue;
                }
                let lo = (e - t).saturating_sub(ell - 1).max(covered_to);
                let hi = (e - t + 1).min(starts);
                if hi > lo {
                    blocked += hi - lo;
                    covered_to = hi;
                }
            }
            let a = esc.iter().take_while(|&&e| e < starts).count() as u64;
            let ab = esc
                .iter()
                .take_while(|&&e| e < starts)
                .filter(|&&s| {
                    let lo = s + t;
                    let first = esc.partition_point(|&e| e < lo);
                    first == esc.len() || esc[first] >= lo + ell
                })
                .count() as u64;
            let w = starts as f64;
            acc.push((ab as f64 / w, a as f64 / w, (starts - blocked) as f64 / w));
        },
        |a, b| a.extend(b),
    );
    let m = per_path.len() as f64;
    let mean = |f: fn(&(f64, f64, f64)) -> f64| per_path.iter().map(f).sum::<f64>() / m;
    let (mab, ma, mb) = (mean(|x| x.0), mean(|x| x.1), mean(|x| x.2));
    let mut z = MeanAcc::default();
    for &(ab, a, b) in &per_path {
        z.push(ab - mb * a - ma * b);
    }
    Ok(GapEstimate {
        gap: mab - ma * mb,
        stderr: z.stderr(),
    })
}

/// Mean number of order-`i` escapes in `[0, n)` per path: `n·P̂(Q_0)`.
pub fn annulus_rate(ens: &Ensemble, offsets: &EscapeOffsets, n: u64) -> (f64, f64) {
    let acc = ens.fold(
        MeanAcc::default,
        |_, idx, acc| {
            let mut esc = Vec::new();
            escape_indices(idx, offsets, n, &mut esc);
            acc.push(esc.len() as f64);
        },
        |a, b| a.merge(&b),
    );
    (acc.mean(), acc.stderr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::ExceedanceTest;
    use crate::process::ProcessSpec;
    use crate::rng::TrialRng;

    #[test]
    fn escape_examples() {
        let p1 = EscapeOffsets::single(1);
        assert!(escape_event(&[0.99, 0.2], 0, &p1, 0.9).unwrap());
        assert!(!escape_event(&[0.99, 0.95], 0, &p1, 0.9).unwrap());
        assert!(escape_event(&[0.99], 0, &p1, 0.9).is_err());
    }

    #[test]
    fn window_examples() {
        let p1 = EscapeOffsets::single(1);
        assert!(no_escape_window(&[0.1; 10], 0, 9, &p1, 0.9).unwrap());
        let mut s = vec![0.1; 10];
        s[4] = 0.95;
        assert!(!no_escape_window(&s, 0, 9, &p1, 0.9).unwrap());
        assert!(no_escape_window(&s, 0, 10, &p1, 0.9).is_err());
    }

    #[test]
    fn window_is_negated_union_of_escapes() {
        let mut rng = TrialRng::new(3, 0);
        let offsets = EscapeOffsets::new(vec![1, 3]).unwrap();
        for _ in 0..10_000 {
            let series: Vec<f64> = (0..16).map(|_| rng.next_f64()).collect();
            let s = (rng.next_below(4)) as usize;
            let l = (rng.next_below(8)) as usize;
            let direct = !(s..s + l).any(|j| escape_event(&series, j, &offsets, 0.6).unwrap());
            assert_eq!(no_escape_window(&series, s, l, &offsets, 0.6).unwrap(), direct);
        }
    }

    #[test]
    fn index_and_series_forms_agree() {
        let mut rng = TrialRng::new(4, 0);
        let offsets = EscapeOffsets::new(vec![2, 1]).unwrap();
        for _ in 0..2000 {
            let series: Vec<f64> = (0..20).map(|_| rng.next_f64()).collect();
            let idx: Vec<u64> = (0..20u64).filter(|&j| series[j as usize] > 0.5).collect();
            for j in 0..17 {
                assert_eq!(
                    escape_at(&idx, j as u64, &offsets),
                    escape_event(&series, j, &offsets, 0.5).unwrap()
                );
            }
        }
    }

    #[test]
    fn escape_capture_partition() {
        let mut rng = TrialRng::new(6, 0);
        let p = EscapeOffsets::single(2);
        let series: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
        for j in 0..998 {
            if series[j] > 0.7 {
                let escape = escape_event(&series, j, &p, 0.7).unwrap();
                let capture = series[j + 2] > 0.7;
                assert!(escape ^ capture);
            }
        }
    }

    #[test]
    fn gap_vanishes_for_empty_window() {
        let ens = Ensemble::new(&ProcessSpec::mma2(), ExceedanceTest::Above(0.9), 50, 10, 1);
        let g = dp_gap(&ens, &EscapeOffsets::single(2), 5, 0).unwrap();
        assert_eq!(g.gap, 0.0);
    }

    #[test]
    fn gap_blocked_count_matches_brute_force() {
        // Compare the interval-union count against a direct scan.
        let ens = Ensemble::new(&ProcessSpec::iid_uniform(), ExceedanceTest::Above(0.8), 60, 200, 2);
        let offsets = EscapeOffsets::single(1);
        let (t, ell) = (3u64, 5u64);
        let g = dp_gap(&ens, &offsets, t, ell).unwrap();
        let starts = 60 - 1 - t - ell + 1;
        let per_path: Vec<(f64, f64, f64)> = ens.fold(
            Vec::new,
            |_, idx, acc| {
                let esc: Vec<u64> = (0..59).filter(|&j| escape_at(idx, j, &offsets)).collect();
                let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
                for s in 0..starts {
                    let ai = esc.contains(&s);
                    let bi = !(s + t..s + t + ell).any(|j| esc.contains(&j));
                    a += ai as u8 as f64;
                    b += bi as u8 as f64;
                    ab += (ai && bi) as u8 as f64;
                }
                let w = starts as f64;
                acc.push((ab / w, a / w, b / w));
            },
            |a, b| a.extend(b),
        );
        let m = per_path.len() as f64;
        let mab: f64 = per_path.iter().map(|x| x.0).sum::<f64>() / m;
        let ma: f64 = per_path.iter().map(|x| x.1).sum::<f64>() / m;
        let mb: f64 = per_path.iter().map(|x| x.2).sum::<f64>() / m;
        assert!((g.gap - (mab - ma * mb)).abs() < 1e-12);
    }

    #[test]
    fn mma2_joint_escape_closed_form() {
        // Each joint term is (1−α)²α⁴ except at j ∈ {2, 4}, where it is 0.
        let u: f64 = 0.8;
        let a = u;
        let closed = |j: u64| {
            if j == 2 || j == 4 {
                0.0
            } else {
                (1.0 - a).powi(2) * a.powi(4)
            }
        };
        let ens = Ensemble::new(&ProcessSpec::mma2(), ExceedanceTest::Above(u), 40, 40_000, 11);
        let offsets = EscapeOffsets::single(2);
        for j in 1..=8u64 {
            let acc = ens.fold(
                RatioAcc::default,
                |_, idx, acc| {
                    let hits = (0..30)
                        .filter(|&s| escape_at(idx, s, &offsets) && escape_at(idx, s + j, &offsets))
                        .count();
                    acc.push(hits as f64, 30.0);
                },
                |x, y| x.merge(&y),
            );
            let err = (acc.ratio() - closed(j)).abs();
            assert!(
                err <= 3.0 * acc.stderr().max(1e-9),
                "j={j}: {} vs {}",
                acc.ratio(),
                closed(j)
            );
        }
    }
}
