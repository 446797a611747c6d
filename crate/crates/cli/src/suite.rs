//! The bundled `reproduce-paper` meta-config: every acceptance experiment in a
//! fixed order, each written to its own subdirectory.

use std::path::Path;

use evl_core::ProcessSpec;

use crate::config::{ExperimentConfig, ExperimentKind, ZetaInput};

pub const SUITE_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 42;

struct Entry {
    name: String,
    kind: ExperimentKind,
    process: ProcessSpec,
    zeta: Option<ZetaInput>,
    offsets: Option<Vec<usize>>,
    n: Vec<u64>,
    depths: Vec<usize>,
}

fn entry(name: &str, kind: ExperimentKind, process: ProcessSpec, n: &[u64]) -> Entry {
    Entry {
        name: name.to_string(),
        kind,
        process,
        zeta: None,
        offsets: None,
        n: n.to_vec(),
        depths: vec![12],
    }
}

impl Entry {
    fn zeta(mut self, z: ZetaInput) -> Self {
        self.zeta = Some(z);
        self
    }

    fn word(self, w: &str) -> Self {
        self.zeta(ZetaInput::Text(w.into()))
    }

    fn offsets(mut self, o: &[usize]) -> Self {
        self.offsets = Some(o.to_vec());
        self
    }
}

/// Target mass `τ/n` used by the hitting/return-time runs.
pub const TIME_LAW_N: u64 = 1000;

fn entries() -> Vec<Entry> {
    use ExperimentKind::*;
    let ar = |r| ProcessSpec::ar1(r).unwrap();
    let bern = || ProcessSpec::bernoulli(0.3).unwrap();
    let mut out = vec![
        entry("ei_ar1_r2", EstimateEi, ar(2), &[10_000]),
        entry("ei_ar1_r3", EstimateEi, ar(3), &[10_000]),
        entry("ei_ar1_r5", EstimateEi, ar(5), &[10_000]),
        entry("ei_mma2", EstimateEi, ProcessSpec::mma2(), &[10_000]),
        entry("ei_mma13", EstimateEi, ProcessSpec::mma13(), &[10_000]).offsets(&[1, 3]),
        entry("ei_chebyshev", EstimateEi, ProcessSpec::chebyshev(), &[5000]),
        entry("ei_chebyshev_n1e4", EstimateEi, ProcessSpec::chebyshev(), &[10_000]),
        entry("ei_doubling_zeta0", EstimateEi, ProcessSpec::doubling(), &[10_000]).word("0"),
        entry("ei_bernoulli_01", EstimateEi, bern(), &[10_000]).word("01"),
        entry(
            "tail_chebyshev",
            TailCheck,
            ProcessSpec::chebyshev(),
            &[100, 1000, 5000],
        ),
    ];
    let time_systems = [
        ("ar1_r2", ar(2), None),
        ("ar1_r3", ar(3), None),
        ("ar1_r5", ar(5), None),
        ("chebyshev", ProcessSpec::chebyshev(), None),
        ("doubling_zeta0", ProcessSpec::doubling(), Some("0")),
        ("bernoulli_01", bern(), Some("01")),
    ];
    for kind in [Hts, Rts] {
        for (label, spec, word) in time_systems.iter().cloned() {
            let mut e = entry(&format!("{}_{label}", kind.name()), kind, spec, &[TIME_LAW_N]);
            if let Some(w) = word {
                e = e.word(w);
            }
            out.push(e);
        }
    }
    out.extend([
        entry("conditions_ar1_r2", Conditions, ar(2), &[1000, 10_000]),
        entry("conditions_mma13", Conditions, ProcessSpec::mma13(), &[1000, 10_000]).offsets(&[1, 3]),
        entry("dichotomy_champernowne", Dichotomy, ProcessSpec::doubling(), &[10_000]).word("champernowne:200"),
        entry(
            "dichotomy_doubling_zeta0",
            Dichotomy,
            ProcessSpec::doubling(),
            &[10_000],
        )
        .word("0"),
        entry("dichotomy_bernoulli_01", Dichotomy, bern(), &[10_000]).word("01"),
        entry("symbolic_example153", Symbolic, ProcessSpec::doubling(), &[20]).word("example153"),
    ]);
    out
}

/// The suite, with an optional trial count override (for quick reruns).
pub fn paper_suite(root: &Path, seed: u64, trials: Option<u64>) -> Vec<(String, ExperimentConfig)> {
    entries()
        .into_iter()
        .map(|e| {
            let cfg = ExperimentConfig {
                experiment: e.kind,
                process: e.process,
                observable: None,
                zeta: e.zeta,
                offsets: e.offsets,
                tau: vec![1.0],
                n: e.n,
                trials: trials.unwrap_or(SUITE_TRIALS),
                seed,
                out: root.join(&e.name),
                emit_plot_data: matches!(e.kind, ExperimentKind::Hts | ExperimentKind::Rts),
                eps: evl_core::estimators::DEFAULT_ATOM_EPS,
                horizon_factor: evl_core::hts::DEFAULT_HORIZON_FACTOR,
                depths: e.depths,
            };
            (e.name, cfg)
        })
        .collect()
}
