//! One runner per experiment kind. Each returns its result table and, for the
//! time-law experiments, the plot series; nothing is written here.

use evl_core::escapes::{annulus_rate, dp_gap, dprime_sum, mp_cutoff, periodicity_report, DiagnosticParams};
use evl_core::estimators::{estimate_all, Estimates};
use evl_core::hts::{
    check_integral_relation, ks_continuous_part, ks_distance, sample_hts, sample_rts, TargetSet, TimeSampleSet,
};
use evl_core::symbolic::{lemma_check, period_sequence, primitive_root, return_structure, ReturnStatus};
use evl_core::theory::{analytic_ei, theoretical_cdf, LawKind, ZetaDescriptor};
use evl_core::{Anchor, EscapeOffsets, GForm, ObservableSpec, Observer, ProcessKind, SymbolicWord};

use crate::config::{ExperimentConfig, ExperimentKind, Resolved};
use crate::error::CliError;

/// Points on the plot grid, and the normalized time it reaches.
const PLOT_POINTS: usize = 200;
const PLOT_T_MAX: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub plot: Option<Vec<(f64, f64, f64)>>,
}

/// Number formatting used in every output file; empty for "not available".
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// θ from the closed forms; aperiodic itineraries of a full shift give 1.
fn theory(r: &Resolved) -> Option<(f64, Vec<usize>)> {
    match (&r.descriptor, &r.spec.kind) {
        (Some(ZetaDescriptor::Aperiodic { .. }), ProcessKind::MAryMap { .. }) => Some((1.0, vec![1])),
        (Some(d), _) => analytic_ei(&r.spec, d).ok().map(|t| (t.theta, t.offsets)),
        (None, _) => None,
    }
}

fn offsets_for(cfg: &ExperimentConfig, r: &Resolved) -> Result<EscapeOffsets, CliError> {
    let raw = cfg
        .offsets
        .clone()
        .or_else(|| theory(r).map(|t| t.1))
        .unwrap_or_else(|| vec![1]);
    EscapeOffsets::new(raw).map_err(|e| CliError::config("offsets", e.to_string()))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let resolved = cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::EstimateEi => estimate_ei(cfg, &resolved),
        ExperimentKind::Hts | ExperimentKind::Rts => time_laws(cfg, &resolved),
        ExperimentKind::Conditions => conditions(cfg, &resolved),
        ExperimentKind::Dichotomy => dichotomy(cfg, &resolved),
        ExperimentKind::Symbolic => symbolic(cfg, &resolved),
        ExperimentKind::TailCheck => tail_check(cfg, &resolved),
    }
}

const EI_HEADER: [&str; 12] = [
    "process",
    "observable",
    "zeta",
    "p_or_offsets",
    "n",
    "tau",
    "method",
    "theta_hat",
    "stderr",
    "theta_analytic",
    "trials",
    "seed",
];

fn ei_rows(table: &mut Table, r: &Resolved, est: &Estimates, theta: Option<f64>, observable: &str) {
    let base = |method: &str, value: f64, se: f64, analytic: Option<f64>| {
        vec![
            r.spec.label.clone(),
            observable.to_string(),
            r.zeta_label.clone(),
            est.offsets.label(),
            est.level.n.to_string(),
            num(est.level.tau),
            method.to_string(),
            num(value),
            num(se),
            opt(analytic),
            est.trials.to_string(),
            est.seed.to_string(),
        ]
    };
    for e in est.all() {
        table.push(base(e.method.name(), e.theta, e.stderr, theta));
    }
    if est.offsets.order() > 1 {
        for (k, e) in est.order_thetas.iter().enumerate() {
            table.push(base(&format!("runs_order{}", k + 1), e.theta, e.stderr, None));
        }
    }
}

fn estimate_ei(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let observer = Observer::new(&r.spec, &r.observable)?;
    let offsets = offsets_for(cfg, r)?;
    let theta = theory(r).map(|t| t.0);
    let mut table = Table::new(&EI_HEADER);
    for &n in &cfg.n {
        for &tau in &cfg.tau {
            let level = observer.level_for_tau(n, tau)?;
            let est = estimate_all(&r.spec, &level, &offsets, cfg.trials, cfg.seed, cfg.eps)?;
            ei_rows(&mut table, r, &est, theta, &r.observable.label());
        }
    }
    Ok(Outcome { table, plot: None })
}

fn time_laws(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let observer = Observer::new(&r.spec, &r.observable)?;
    let theta = theory(r).map(|t| t.0);
    let rts_mode = cfg.experiment == ExperimentKind::Rts;
    let mut table = Table::new(&[
        "process",
        "observable",
        "zeta",
        "target",
        "mode",
        "n",
        "tau",
        "target_measure",
        "theta_theory",
        "ks",
        "atom_mass",
        "theta_atom",
        "ks_continuous",
        "integral_dev",
        "censored_fraction",
        "n_samples",
        "trials",
        "seed",
    ]);
    let mut plot = None;
    for &n in &cfg.n {
        for &tau in &cfg.tau {
            let level = observer.level_for_tau(n, tau)?;
            let target = TargetSet::level_set(&level);
            let hts = sample_hts(&r.spec, &target, cfg.trials, cfg.seed, cfg.horizon_factor)?;
            let (samples, kind): (TimeSampleSet, LawKind);
            let mut extra = [f64::NAN; 4];
            if rts_mode {
                let rts = sample_rts(&r.spec, &target, cfg.trials, cfg.seed, cfg.horizon_factor)?;
                extra[0] = rts.atom_mass(cfg.eps);
                extra[1] = evl_core::estimators::ei_rts_atom(&rts, cfg.eps)?.theta;
                if let Some(th) = theta {
                    extra[2] = ks_continuous_part(&rts, th, cfg.eps)?;
                }
                let t_max = PLOT_T_MAX.min(hts.horizon).min(rts.horizon);
                let grid: Vec<f64> = (1..=PLOT_POINTS)
                    .map(|i| t_max * i as f64 / PLOT_POINTS as f64)
                    .collect();
                extra[3] = check_integral_relation(&hts, &rts, &grid)?;
                samples = rts;
                kind = LawKind::Rts;
            } else {
                samples = hts;
                kind = LawKind::Hts;
            }
            let ks = match theta {
                Some(th) => ks_distance(&samples, theoretical_cdf(kind, th))?,
                None => f64::NAN,
            };
            if plot.is_none() {
                let cdf = theoretical_cdf(kind, theta.unwrap_or(f64::NAN));
                plot = Some(samples.plot_rows(cdf, PLOT_T_MAX.min(samples.horizon), PLOT_POINTS));
            }
            table.push(vec![
                r.spec.label.clone(),
                r.observable.label(),
                r.zeta_label.clone(),
                target.label(),
                if rts_mode { "rts" } else { "hts" }.into(),
                n.to_string(),
                num(tau),
                num(target.measure),
                opt(theta),
                num(ks),
                num(extra[0]),
                num(extra[1]),
                num(extra[2]),
                num(extra[3]),
                num(samples.censored_fraction()),
                samples.len().to_string(),
                cfg.trials.to_string(),
                cfg.seed.to_string(),
            ]);
        }
    }
    Ok(Outcome {
        table,
        plot: plot.filter(|_| cfg.emit_plot_data),
    })
}

fn conditions(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let observer = Observer::new(&r.spec, &r.observable)?;
    let offsets = offsets_for(cfg, r)?;
    let th = theory(r);
    let p = offsets.offsets()[0];
    let mut table = Table::new(&[
        "process", "offsets", "name", "n", "t_or_j", "value", "stderr", "tau", "trials", "seed",
    ]);
    for &n in &cfg.n {
        for &tau in &cfg.tau {
            let level = observer.level_for_tau(n, tau)?;
            let probe =
                evl_core::ensemble::Ensemble::new(&r.spec, level.test.clone(), n + p as u64, cfg.trials, cfg.seed);
            // θ_1 for the MP table: the closed form when it refers to these offsets.
            let theta = match &th {
                Some((t, o)) if offsets.order() == 1 && o[..] == [p] => *t,
                _ => {
                    let pre = periodicity_report(&probe, p, 0.5, n, 1)?;
                    1.0 - pre.get("continuation_prob", p as i64).map_or(0.0, |row| row.value)
                }
            };
            let params = DiagnosticParams::defaults(n);
            let cutoff = mp_cutoff(n, theta).min(64);
            let len = n + (cutoff * p + offsets.span()) as u64;
            let ens = evl_core::ensemble::Ensemble::new(&r.spec, level.test.clone(), len, cfg.trials, cfg.seed);
            let report = periodicity_report(&ens, p, theta, n, cutoff)?;
            let mut push = |name: &str, index: i64, value: f64, se: f64| {
                table.push(vec![
                    r.spec.label.clone(),
                    offsets.label(),
                    name.to_string(),
                    n.to_string(),
                    index.to_string(),
                    num(value),
                    num(se),
                    num(tau),
                    cfg.trials.to_string(),
                    cfg.seed.to_string(),
                ]);
            };
            push("theta_for_mp", 0, theta, f64::NAN);
            for row in &report.rows {
                push(&row.name, row.index, row.value, row.stderr);
            }
            for k in 1..=offsets.order() {
                let (v, se) = dprime_sum(&ens, &offsets.truncated(k), n, params.k_n)?;
                push("dprime_sum", k as i64, v, se);
            }
            let gap = dp_gap(&ens, &offsets, params.t_n, params.ell)?;
            push("dp_gap", params.t_n as i64, gap.gap, gap.stderr);
            let (rate, se) = annulus_rate(&ens, &offsets, n);
            push("annulus_rate", 0, rate, se);
        }
    }
    Ok(Outcome { table, plot: None })
}

fn dichotomy(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let text = r.word.clone().expect("validated");
    let base = r.spec.digit_base().expect("word-coded process");
    let word = SymbolicWord::parse(&text, base)?;
    let (obs, seq_word) = if r.periodic {
        let root = primitive_root(&word);
        let obs = ObservableSpec {
            form: evl_core::ObservableForm::Cylinder { g: GForm::G1 },
            anchor: Some(Anchor::PeriodicWord { word: root.to_string() }),
        };
        (obs, root)
    } else {
        (ObservableSpec::cylinder(GForm::G1, &text), word.clone())
    };
    let observer = Observer::new(&r.spec, &obs)?;
    let seq = period_sequence(&seq_word);
    let theta = if r.periodic { theory(r).map(|t| t.0) } else { Some(1.0) };
    let mut table = Table::new(&[
        "process",
        "observable",
        "zeta",
        "periodic",
        "depth",
        "p_or_offsets",
        "n",
        "tau",
        "method",
        "theta_hat",
        "stderr",
        "theta_analytic",
        "trials",
        "seed",
    ]);
    for &depth in &cfg.depths {
        if !r.periodic && depth > word.len() {
            return Err(CliError::config(
                "depths",
                format!("depth {depth} exceeds the {}-symbol prefix", word.len()),
            ));
        }
        let p = if r.periodic {
            seq_word.len()
        } else {
            seq.period_at(depth).expect("depth within the word")
        };
        let offsets = EscapeOffsets::single(p);
        for &tau in &cfg.tau {
            let level = observer.cylinder_level(depth, tau)?;
            let est = estimate_all(&r.spec, &level, &offsets, cfg.trials, cfg.seed, cfg.eps)?;
            for e in est.all() {
                table.push(vec![
                    r.spec.label.clone(),
                    obs.label(),
                    r.zeta_label.clone(),
                    r.periodic.to_string(),
                    depth.to_string(),
                    offsets.label(),
                    level.n.to_string(),
                    num(level.tau),
                    e.method.name().into(),
                    num(e.theta),
                    num(e.stderr),
                    opt(theta),
                    cfg.trials.to_string(),
                    cfg.seed.to_string(),
                ]);
            }
        }
    }
    Ok(Outcome { table, plot: None })
}

/// Lemma brute force bounds used by `symbolic`.
pub const LEMMA_MAX_LEN: usize = 12;
pub const LEMMA_MAX_N: usize = 8;

fn symbolic(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let base = r.spec.digit_base().unwrap_or(2);
    let text = r
        .word
        .clone()
        .unwrap_or_else(|| evl_core::symbolic::example_word_153().to_string());
    let word = SymbolicWord::parse(&text, base)?;
    let seq = period_sequence(&word);
    let mut table = Table::new(&["record", "index", "value", "detail", "n", "tau", "trials", "seed"]);
    let (n0, tau0) = (cfg.n[0], cfg.tau[0]);
    let mut push = |record: &str, index: usize, value: String, detail: String| {
        table.push(vec![
            record.into(),
            index.to_string(),
            value,
            detail,
            n0.to_string(),
            num(tau0),
            cfg.trials.to_string(),
            cfg.seed.to_string(),
        ]);
    };
    for (i, p) in seq.values.iter().enumerate() {
        let last = seq.rows.iter().rev().find(|row| row.r == *p).map(|row| row.status);
        let detail = match last {
            Some(ReturnStatus::LowerBound) => "lower_bound",
            Some(ReturnStatus::Undecided) => "undecided",
            _ => "decided",
        };
        push("p", i, p.to_string(), detail.into());
    }
    for row in &seq.rows {
        push(
            "r",
            row.n,
            row.r.to_string(),
            format!(
                "i_n={};a_n={};q_n={};status={:?}",
                row.i_n, row.a_n, row.q_n, row.status
            )
            .to_lowercase(),
        );
    }
    let weights = r.spec.digit_weights();
    for &n in cfg.n.iter().filter(|&&n| n as usize <= word.len()) {
        let n = n as usize;
        let rs = return_structure(&word, n, n, weights.as_deref())?;
        push(
            "return_admissible",
            n,
            format!("{:?}", rs.admissible()).replace(", ", ";"),
            format!("period={}", rs.period),
        );
        push("return_part_a", n, rs.part_a_holds().to_string(), String::new());
        push("return_part_b", n, rs.part_b_holds().to_string(), String::new());
    }
    let lemma = lemma_check(LEMMA_MAX_LEN, LEMMA_MAX_N);
    push(
        "lemma_cases",
        LEMMA_MAX_LEN,
        lemma.cases.to_string(),
        format!("max_n={LEMMA_MAX_N}"),
    );
    push(
        "lemma_part_a_failures",
        LEMMA_MAX_LEN,
        lemma.part_a_failures.to_string(),
        String::new(),
    );
    push(
        "lemma_part_b_failures",
        LEMMA_MAX_LEN,
        lemma.part_b_failures.to_string(),
        String::new(),
    );
    push(
        "lemma_construction_mismatches",
        LEMMA_MAX_LEN,
        lemma.construction_mismatches.to_string(),
        String::new(),
    );
    push(
        "lemma_undecided",
        LEMMA_MAX_LEN,
        lemma.undecided.to_string(),
        String::new(),
    );
    Ok(Outcome { table, plot: None })
}

/// `u_n ∼ 1 − (πτ)²/(2n²)` for `φ(x) = −x` at the Chebyshev endpoint.
pub fn chebyshev_level_formula(n: u64, tau: f64) -> f64 {
    1.0 - (std::f64::consts::PI * tau).powi(2) / (2.0 * (n as f64).powi(2))
}

fn tail_check(cfg: &ExperimentConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let observer = Observer::new(&r.spec, &r.observable)?;
    let mut table = Table::new(&[
        "process",
        "observable",
        "zeta",
        "n",
        "tau",
        "u_n",
        "tail",
        "mean_exceedances",
        "stderr",
        "z_score",
        "u_formula",
        "rel_err",
        "trials",
        "seed",
    ]);
    let cheb =
        r.descriptor == Some(ZetaDescriptor::ChebyshevEndpoint) && r.observable == ObservableSpec::chebyshev_default();
    for &n in &cfg.n {
        for &tau in &cfg.tau {
            let level = observer.level_for_tau(n, tau)?;
            let ens = evl_core::ensemble::Ensemble::new(&r.spec, level.test.clone(), n, cfg.trials, cfg.seed);
            let acc = ens.fold(
                evl_core::stats::MeanAcc::default,
                |_, idx, acc| acc.push(idx.len() as f64),
                |a, b| a.merge(&b),
            );
            let expected = n as f64 * level.tail;
            let (formula, rel) = if cheb {
                let f = chebyshev_level_formula(n, tau);
                (f, ((f - level.u) / level.u).abs())
            } else {
                (f64::NAN, f64::NAN)
            };
            table.push(vec![
                r.spec.label.clone(),
                r.observable.label(),
                r.zeta_label.clone(),
                n.to_string(),
                num(tau),
                num(level.u),
                num(level.tail),
                num(acc.mean()),
                num(acc.stderr()),
                num((acc.mean() - expected) / acc.stderr()),
                num(formula),
                num(rel),
                cfg.trials.to_string(),
                cfg.seed.to_string(),
            ]);
        }
    }
    Ok(Outcome { table, plot: None })
}
