use std::path::PathBuf;

use evl_core::theory::ZetaDescriptor;
use evl_core::{Anchor, EscapeOffsets, GForm, ObservableSpec, Observer, ProcessKind, ProcessSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EstimateEi,
    Hts,
    Rts,
    Conditions,
    Dichotomy,
    Symbolic,
    TailCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EstimateEi => "estimate-ei",
            ExperimentKind::Hts => "hts",
            ExperimentKind::Rts => "rts",
            ExperimentKind::Conditions => "conditions",
            ExperimentKind::Dichotomy => "dichotomy",
            ExperimentKind::Symbolic => "symbolic",
            ExperimentKind::TailCheck => "tail-check",
        }
    }
}

/// The point the experiment is about: a number, a digit word, or a keyword.
///
/// Words are periodic itineraries (`"01"` means `(01)^∞`). The keywords are
/// `upper` (upper end of the marginal), `champernowne:LEN`, `sqrt2:LEN`,
/// `example153` and `prefix:DIGITS` (finite aperiodic itineraries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZetaInput {
    Value(f64),
    Text(String),
}

impl ZetaInput {
    /// Flag syntax: plain numbers containing a sign or a dot are values,
    /// digit strings are words.
    pub fn parse_flag(text: &str) -> Self {
        let is_word = !text.is_empty() && text.chars().all(|c| c.is_ascii_digit());
        match text.parse::<f64>() {
            Ok(v) if !is_word => ZetaInput::Value(v),
            _ => ZetaInput::Text(text.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub process: ProcessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<usize>>,
    #[serde(default = "default_tau")]
    pub tau: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: Vec<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub emit_plot_data: bool,
    /// Atom width for the return-time estimator.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_horizon_factor")]
    pub horizon_factor: f64,
    /// Cylinder depths for `dichotomy`.
    #[serde(default = "default_depths")]
    pub depths: Vec<usize>,
}

fn default_tau() -> Vec<f64> {
    vec![1.0]
}
fn default_n() -> Vec<u64> {
    vec![10_000]
}
fn default_trials() -> u64 {
    10_000
}
fn default_out() -> PathBuf {
    PathBuf::from("evl-out")
}
fn default_eps() -> f64 {
    evl_core::estimators::DEFAULT_ATOM_EPS
}
fn default_horizon_factor() -> f64 {
    evl_core::hts::DEFAULT_HORIZON_FACTOR
}
fn default_depths() -> Vec<usize> {
    vec![12]
}

/// Flag syntax for processes: `doubling`, `m-ary:M`, `bernoulli:ALPHA`,
/// `dyadic-jump`, `chebyshev`, `ar1:R`, `mma2`, `mma13`, `iid-uniform`.
pub fn parse_process(text: &str) -> Result<ProcessSpec, CliError> {
    let bad = |msg: String| CliError::config("process", msg);
    let (name, arg) = match text.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (text, None),
    };
    let num = |what: &str| -> Result<&str, CliError> {
        arg.ok_or_else(|| bad(format!("`{name}` needs {what}, e.g. `{name}:2`")))
    };
    let spec = match name {
        "doubling" => Ok(ProcessSpec::doubling()),
        "m-ary" => {
            let m: u32 = num("a base")?.parse().map_err(|e| bad(format!("{e}")))?;
            ProcessSpec::new(ProcessKind::MAryMap {
                m,
                weights: vec![1.0 / m.max(1) as f64; m as usize],
            })
        }
        "bernoulli" => ProcessSpec::bernoulli(num("a weight")?.parse().map_err(|e| bad(format!("{e}")))?),
        "dyadic-jump" => Ok(ProcessSpec::dyadic_jump()),
        "chebyshev" => Ok(ProcessSpec::chebyshev()),
        "ar1" => ProcessSpec::ar1(num("r")?.parse().map_err(|e| bad(format!("{e}")))?),
        "mma2" => Ok(ProcessSpec::mma2()),
        "mma13" => Ok(ProcessSpec::mma13()),
        "iid-uniform" | "iid" => Ok(ProcessSpec::iid_uniform()),
        other => return Err(bad(format!("unknown process `{other}`"))),
    };
    spec.map_err(|e| bad(e.to_string()))
}

/// Everything an experiment needs about ζ, resolved against the process.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ProcessSpec,
    pub observable: ObservableSpec,
    /// Theory descriptor, when ζ is one the closed forms know about.
    pub descriptor: Option<ZetaDescriptor>,
    /// Word coding ζ for digit-coded maps.
    pub word: Option<String>,
    pub periodic: bool,
    pub zeta_label: String,
}

fn word_for(text: &str) -> Result<Option<(String, bool)>, CliError> {
    let bad = |m: String| CliError::config("zeta", m);
    let len = |s: &str| -> Result<usize, CliError> { s.parse().map_err(|e| bad(format!("{e}"))) };
    Ok(if let Some(rest) = text.strip_prefix("champernowne:") {
        Some((evl_core::symbolic::champernowne_prefix(len(rest)?).to_string(), false))
    } else if let Some(rest) = text.strip_prefix("sqrt2:") {
        Some((evl_core::symbolic::sqrt2_minus_one_bits(len(rest)?).to_string(), false))
    } else if text == "example153" {
        Some((evl_core::symbolic::example_word_153().to_string(), false))
    } else if let Some(rest) = text.strip_prefix("prefix:") {
        Some((rest.to_string(), false))
    } else if !text.is_empty() && text.chars().all(|c| c.is_ascii_digit()) {
        Some((text.to_string(), true))
    } else {
        None
    })
}

impl ExperimentConfig {
    pub fn default_zeta(spec: &ProcessSpec) -> ZetaInput {
        match spec.kind {
            ProcessKind::ChebyshevQuadratic => ZetaInput::Value(-1.0),
            ProcessKind::DyadicJump => ZetaInput::Text("1".into()),
            ProcessKind::MAryMap { .. } => ZetaInput::Text("0".into()),
            _ => ZetaInput::Text("upper".into()),
        }
    }

    pub fn zeta_or_default(&self) -> ZetaInput {
        self.zeta.clone().unwrap_or_else(|| Self::default_zeta(&self.process))
    }

    /// Picks the observable and the theory descriptor for ζ.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut spec = self.process.clone();
        if spec.label.is_empty() {
            spec = ProcessSpec::new(spec.kind.clone()).map_err(|e| CliError::config("process", e.to_string()))?;
        }
        spec.validate()
            .map_err(|e| CliError::config("process", e.to_string()))?;
        let zeta = self.zeta_or_default();
        let mut word = None;
        let mut periodic = false;
        let (default_obs, descriptor) = match (&spec.kind, &zeta) {
            (ProcessKind::ChebyshevQuadratic, ZetaInput::Value(v)) if *v == -1.0 => (
                Some(ObservableSpec::chebyshev_default()),
                Some(ZetaDescriptor::ChebyshevEndpoint),
            ),
            (ProcessKind::ChebyshevQuadratic, ZetaInput::Value(v)) => (
                Some(ObservableSpec::distance(GForm::G1, Anchor::Point { value: *v })),
                None,
            ),
            (
                ProcessKind::ChernickAr1 { .. } | ProcessKind::Mma2 | ProcessKind::Mma13 | ProcessKind::IidUniform,
                ZetaInput::Text(t),
            ) if t == "upper" => (Some(ObservableSpec::identity()), Some(ZetaDescriptor::UpperEndpoint)),
            (ProcessKind::MAryMap { .. } | ProcessKind::DyadicJump, ZetaInput::Value(v)) => (
                Some(ObservableSpec::distance(GForm::G1, Anchor::Point { value: *v })),
                None,
            ),
            (ProcessKind::MAryMap { .. } | ProcessKind::DyadicJump, ZetaInput::Text(t)) => match word_for(t)? {
                Some((w, true)) => {
                    word = Some(w.clone());
                    periodic = true;
                    (
                        Some(ObservableSpec::distance(
                            GForm::G1,
                            Anchor::PeriodicWord { word: w.clone() },
                        )),
                        Some(ZetaDescriptor::Periodic { word: w }),
                    )
                }
                Some((w, false)) => {
                    word = Some(w.clone());
                    (
                        Some(ObservableSpec::cylinder(GForm::G1, &w)),
                        Some(ZetaDescriptor::Aperiodic { word: w }),
                    )
                }
                None => {
                    return Err(CliError::config(
                        "zeta",
                        format!("cannot read `{t}` as a point of {}", spec.label),
                    ))
                }
            },
            (_, z) => {
                return Err(CliError::config(
                    "zeta",
                    format!("{z:?} is not a supported point for {}", spec.label),
                ))
            }
        };
        let observable = self.observable.clone().or(default_obs).unwrap();
        Observer::new(&spec, &observable).map_err(|e| CliError::config("observable", e.to_string()))?;
        let zeta_label = match &zeta {
            ZetaInput::Value(v) => format!("{v}"),
            ZetaInput::Text(t) if t.len() > 24 => format!("{}...", &t[..24]),
            ZetaInput::Text(t) => t.clone(),
        };
        Ok(Resolved {
            spec,
            observable,
            descriptor,
            word,
            periodic,
            zeta_label,
        })
    }

    /// Checks every referenced parameter; nothing is simulated before this passes.
    pub fn validate(&self) -> Result<Resolved, CliError> {
        let resolved = self.resolve()?;
        if self.tau.is_empty() || self.tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(CliError::config(
                "tau",
                format!("{:?}: every tau must be positive", self.tau),
            ));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(CliError::config(
                "n",
                format!("{:?}: every n must be at least 1", self.n),
            ));
        }
        if self.trials < 2 {
            return Err(CliError::config("trials", format!("{} < 2", self.trials)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CliError::config("eps", format!("{} not in (0, 1)", self.eps)));
        }
        if !(self.horizon_factor >= 10.0) {
            return Err(CliError::config(
                "horizon_factor",
                format!("{} < 10", self.horizon_factor),
            ));
        }
        if let Some(o) = &self.offsets {
            EscapeOffsets::new(o.clone()).map_err(|e| CliError::config("offsets", e.to_string()))?;
        }
        if self.experiment == ExperimentKind::Dichotomy {
            if resolved.word.is_none() {
                return Err(CliError::config("zeta", "dichotomy needs a word-coded point".into()));
            }
            if self.depths.is_empty() || self.depths.contains(&0) {
                return Err(CliError::config("depths", format!("{:?}", self.depths)));
            }
        }
        Ok(resolved)
    }
}
