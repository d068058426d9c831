//! Experiment specs: TOML files with one `[scenario]` table, optional
//! `[solver]`, `[sweep]` and `[grid]` tables, and any number of `[[series]]`.

use std::fmt;
use std::str::FromStr;

use kscg_core::{db_to_linear, Fading, Feedback, Link, Network, Options, Scenario};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A fading law written as `rayleigh`, `rician:K`, `nakagami:m` or `weibull:c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSpec(pub Fading);

/// A feedback protocol written as `full`, `kscg:<k>` or `kscg:n^<delta>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackSpec(pub Feedback<f64>);

macro_rules! string_serde {
    ($t:ty, $inner:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(&self.0)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                <$inner>::from_str(&raw).map(Self).map_err(D::Error::custom)
            }
        }
    };
}

string_serde!(FadingSpec, Fading);
string_serde!(FeedbackSpec, Feedback<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Estimate,
    Sweep,
    InterferenceProfile,
    ParameterStudy,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Estimate => "estimate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::InterferenceProfile => "interference_profile",
            ExperimentKind::ParameterStudy => "parameter_study",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub network: Network,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_ave_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_ave_db: Option<f64>,
    pub stsb: FadingSpec,
    pub stpb: FadingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSpec>,
    /// User count for `estimate` and `parameter_study`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub link: Link,
    pub values: Vec<f64>,
}

/// One curve. Unset fields inherit from `[scenario]` and `[grid]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<Network>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stsb: Option<FadingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stpb: Option<FadingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub experiment: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    /// Artifact directory, relative to the working directory.
    #[serde(default = "default_output")]
    pub output: String,
    pub scenario: ScenarioSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesSpec>,
}

fn default_output() -> String {
    "out".into()
}

/// A spec problem, with the 1-based line it points at when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A series after inheritance, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSeries {
    pub label: String,
    pub scenario: Scenario,
    /// Parameter grid for `parameter_study`.
    pub values: Vec<f64>,
}

/// First line of `source` whose key is `key`, for diagnostics.
fn locate(source: &str, key: &str) -> Option<usize> {
    source.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn is_safe_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl ExperimentSpec {
    /// Parses and validates a TOML spec.
    pub fn parse(source: &str) -> Result<Self, ConfigError> {
        let spec: ExperimentSpec = toml::from_str(source).map_err(|e| ConfigError {
            line: e.span().map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        spec.validate().map_err(|(key, message)| ConfigError { line: key.and_then(|k| locate(source, k)), message })?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes to TOML")
    }

    fn validate(&self) -> Result<(), (Option<&'static str>, String)> {
        if !is_safe_label(&self.name) {
            return Err((Some("name"), format!("name `{}` may only use letters, digits, '_', '-' and '.'", self.name)));
        }
        if self.trials < 2 {
            return Err((Some("trials"), "trials must be at least 2".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err((Some("seed"), format!("seed must not exceed {}", i64::MAX)));
        }
        let mut labels: Vec<&str> = Vec::new();
        for s in &self.series {
            if !is_safe_label(&s.label) {
                return Err((Some("label"), format!("series label `{}` may only use letters, digits, '_', '-' and '.'", s.label)));
            }
            if labels.contains(&s.label.as_str()) || s.label == "theory" {
                return Err((Some("label"), format!("series label `{}` is duplicated or reserved", s.label)));
            }
            labels.push(&s.label);
        }
        match self.experiment {
            ExperimentKind::Sweep | ExperimentKind::InterferenceProfile => {
                let sweep = self.sweep.as_ref().ok_or((None, format!("{} needs a [sweep] table with n_list", self.experiment)))?;
                if sweep.n_list.len() < 2 || sweep.n_list.windows(2).any(|w| w[0] >= w[1]) || sweep.n_list[0] == 0 {
                    return Err((Some("n_list"), "n_list must hold at least two strictly increasing positive user counts".into()));
                }
            }
            ExperimentKind::Estimate | ExperimentKind::ParameterStudy => {
                if self.scenario.n.is_none_or(|n| n == 0) {
                    return Err((Some("n"), format!("{} needs a positive scenario.n", self.experiment)));
                }
            }
        }
        if self.experiment == ExperimentKind::ParameterStudy && self.grid.is_none() {
            return Err((None, "parameter_study needs a [grid] table".into()));
        }
        if let Some(solver) = &self.solver {
            if solver.tol.is_some_and(|t| !(t > 0.0 && t <= 0.1)) {
                return Err((Some("tol"), "solver tol must lie in (0, 0.1]".into()));
            }
            if solver.batch_size == Some(0) {
                return Err((Some("batch_size"), "batch_size must be positive".into()));
            }
        }
        for s in self.resolve_series_unchecked() {
            let s = s.map_err(|m| (None, m))?;
            if s.scenario.network != Network::Il && self.scenario.p_ave_db.is_none() {
                return Err((None, format!("series `{}` needs scenario.p_ave_db", s.label)));
            }
            if s.scenario.network != Network::PrimaryMac && self.scenario.q_ave_db.is_none() {
                return Err((None, format!("series `{}` needs scenario.q_ave_db", s.label)));
            }
            if self.experiment == ExperimentKind::ParameterStudy && s.values.is_empty() {
                return Err((Some("values"), format!("series `{}` has an empty parameter grid", s.label)));
            }
            if let Some(n) = self.scenario.n {
                s.scenario.with_n(n).k().map_err(|e| (Some("feedback"), format!("series `{}`: {e}", s.label)))?;
            }
        }
        Ok(())
    }

    fn resolve_series_unchecked(&self) -> Vec<Result<ResolvedSeries, String>> {
        let sc = &self.scenario;
        let base = Scenario {
            network: sc.network,
            feedback: sc.feedback.map_or(Feedback::Full, |f| f.0),
            p_ave: db_to_linear(sc.p_ave_db.unwrap_or(0.0)),
            q_ave: db_to_linear(sc.q_ave_db.unwrap_or(0.0)),
            stsb: sc.stsb.0,
            stpb: sc.stpb.0,
            n: sc.n.unwrap_or(1),
        };
        let grid_values = self.grid.as_ref().map(|g| g.values.clone()).unwrap_or_default();
        if self.series.is_empty() {
            return vec![Ok(ResolvedSeries { label: "default".into(), scenario: base, values: grid_values })];
        }
        self.series
            .iter()
            .map(|s| {
                Ok(ResolvedSeries {
                    label: s.label.clone(),
                    scenario: Scenario {
                        network: s.network.unwrap_or(base.network),
                        feedback: s.feedback.map_or(base.feedback, |f| f.0),
                        stsb: s.stsb.map_or(base.stsb, |f| f.0),
                        stpb: s.stpb.map_or(base.stpb, |f| f.0),
                        ..base
                    },
                    values: s.values.clone().unwrap_or_else(|| grid_values.clone()),
                })
            })
            .collect()
    }

    /// Series with inherited fields filled in. The spec must be valid.
    pub fn resolved_series(&self) -> Vec<ResolvedSeries> {
        self.resolve_series_unchecked().into_iter().map(|r| r.expect("validated spec")).collect()
    }

    pub fn solver_options(&self) -> Options {
        let d = Options::default();
        match &self.solver {
            None => d,
            Some(s) => Options {
                batch_size: s.batch_size.unwrap_or(d.batch_size),
                tol: s.tol.unwrap_or(d.tol),
                max_iter: s.max_iter.unwrap_or(d.max_iter),
            },
        }
    }
}
