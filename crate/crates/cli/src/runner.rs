//! Executes specs and writes their artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use kscg_core::scaling_lab::{Link, Regressor};
use kscg_core::simulator::InterferenceProfile;
use kscg_core::{
    estimate_with_options, fit_points, point_seed, theory_curve, Error as CoreError, Estimate, Feedback, Options,
    Scenario,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentKind, ExperimentSpec, ResolvedSeries};

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("series `{series}` ({scenario}) at N={n}: {source}")]
    NonConvergence { series: String, scenario: String, n: usize, source: CoreError },
    #[error("series `{series}` at N={n}: {source}")]
    Core { series: String, n: usize, source: CoreError },
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } => 2,
            RunError::NonConvergence { .. } => 3,
            RunError::Core { .. } | RunError::Io { .. } => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Fit of one swept series, as recorded in the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub regressor: String,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    pub slope_se: f64,
    pub theory_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub spearman: f64,
    pub first_slack_n: Option<usize>,
    pub slack_persists: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub label: String,
    pub scenario: String,
    pub csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<SeriesFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSummary>,
}

/// JSON written next to the CSVs. `spec` is the effective spec (overrides
/// applied), so running the sidecar reproduces the artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub name: String,
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    /// SHA-256 of the effective spec serialized as TOML.
    pub config_hash: String,
    pub spec: ExperimentSpec,
    pub series: Vec<SeriesRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_csv: Option<String>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub sidecar: Sidecar,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Reads a TOML spec, or the spec embedded in a JSON sidecar.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, RunError> {
    let display = path.display().to_string();
    let source = fs::read_to_string(path).map_err(io_err(format!("reading {display}")))?;
    if path.extension().is_some_and(|e| e == "json") {
        let sidecar: Sidecar = serde_json::from_str(&source).map_err(|e| RunError::Config {
            path: display.clone(),
            source: ConfigError { message: e.to_string(), line: Some(e.line()) },
        })?;
        // re-validate through the TOML path so both entry points accept the same specs
        return ExperimentSpec::parse(&sidecar.spec.to_toml()).map_err(|source| RunError::Config { path: display, source });
    }
    ExperimentSpec::parse(&source).map_err(|source| RunError::Config { path: display, source })
}

pub fn config_hash(spec: &ExperimentSpec) -> String {
    let digest = Sha256::digest(spec.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn describe(s: &Scenario) -> String {
    format!("{} {} stsb={} stpb={}", s.network, s.feedback, s.stsb, s.stpb)
}

/// Runs a spec file with command-line overrides.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunSummary, RunError> {
    let mut spec = load_spec(path)?;
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(trials) = opts.trials {
        spec.trials = trials;
    }
    // overrides go through validation too
    let spec = ExperimentSpec::parse(&spec.to_toml())
        .map_err(|source| RunError::Config { path: path.display().to_string(), source })?;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from(&spec.output));
    match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| RunError::Io { context: "starting worker pool".into(), source: io::Error::other(e) })?
            .install(|| run_spec(&spec, &out_dir)),
        None => run_spec(&spec, &out_dir),
    }
}

fn point_error(series: &ResolvedSeries, scenario: &Scenario, n: usize, e: CoreError) -> RunError {
    match e {
        CoreError::NonConvergence { .. } => {
            RunError::NonConvergence { series: series.label.clone(), scenario: describe(scenario), n, source: e }
        }
        other => RunError::Core { series: series.label.clone(), n, source: other },
    }
}

fn estimate_points(series: &ResolvedSeries, ns: &[usize], spec: &ExperimentSpec, opts: &Options) -> Result<Vec<Estimate>, RunError> {
    ns.par_iter()
        .map(|&n| {
            let s = series.scenario.with_n(n);
            estimate_with_options(&s, spec.trials, point_seed(spec.seed, n), opts).map_err(|e| point_error(series, &s, n, e))
        })
        .collect()
}

fn with_parameter(s: &Scenario, link: Link, v: f64) -> Result<Scenario, CoreError> {
    let mut s = *s;
    match link {
        Link::Stsb => s.stsb = s.stsb.with_shape_parameter(v)?,
        Link::Stpb => s.stpb = s.stpb.with_shape_parameter(v)?,
    }
    Ok(s)
}

/// Runs a validated spec, writing artifacts into `out_dir`.
pub fn run_spec(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(format!("creating {}", out_dir.display())))?;
    let opts = spec.solver_options();
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut theory_csv = None;
    let series = spec.resolved_series();

    for s in &series {
        let csv_name = format!("{}_{}.csv", spec.name, s.label);
        let mut record =
            SeriesRecord { label: s.label.clone(), scenario: describe(&s.scenario), csv: csv_name.clone(), fit: None, profile: None };
        let body = match spec.experiment {
            ExperimentKind::Estimate => {
                let n = s.scenario.n;
                let points = estimate_points(s, &[n], spec, &opts)?;
                point_csv(&points)
            }
            ExperimentKind::Sweep => {
                let ns = &spec.sweep.as_ref().expect("validated").n_list;
                let points = estimate_points(s, ns, spec, &opts)?;
                let fit = fit_points(&s.scenario, points.clone()).map_err(|e| RunError::Core {
                    series: s.label.clone(),
                    n: ns[0],
                    source: e,
                })?;
                record.fit = Some(SeriesFit {
                    regressor: match fit.regressor {
                        Regressor::LogLogN => "loglogN".into(),
                        Regressor::LogN => "logN".into(),
                    },
                    fitted_slope: fit.fit.slope,
                    fitted_intercept: fit.fit.intercept,
                    slope_se: fit.fit.slope_se,
                    theory_slope: fit.theory_slope,
                });
                point_csv(&points)
            }
            ExperimentKind::InterferenceProfile => {
                let ns = &spec.sweep.as_ref().expect("validated").n_list;
                let points = estimate_points(s, ns, spec, &opts)?;
                let profile = InterferenceProfile::from_points(points.clone());
                record.profile = Some(ProfileSummary {
                    spearman: profile.spearman,
                    first_slack_n: profile.first_slack_n,
                    slack_persists: profile.slack_persists,
                });
                point_csv(&points)
            }
            ExperimentKind::ParameterStudy => {
                let link = spec.grid.as_ref().expect("validated").link;
                let n = s.scenario.n;
                let rows = s
                    .values
                    .par_iter()
                    .map(|&v| {
                        let sc = with_parameter(&s.scenario, link, v).map_err(|e| point_error(s, &s.scenario, n, e))?;
                        estimate_with_options(&sc, spec.trials, point_seed(spec.seed, n), &opts)
                            .map(|r| (v, r))
                            .map_err(|e| point_error(s, &sc, n, e))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                parameter_csv(&rows)
            }
        };
        let path = out_dir.join(&csv_name);
        fs::write(&path, body).map_err(io_err(format!("writing {}", path.display())))?;
        files.push(path);
        records.push(record);
    }

    if spec.experiment == ExperimentKind::Sweep {
        let ns = &spec.sweep.as_ref().expect("validated").n_list;
        let reference = Scenario { feedback: Feedback::Full, ..series[0].scenario };
        if let Ok(curve) = theory_curve(&reference, ns) {
            let name = format!("{}_theory.csv", spec.name);
            let mut body = String::from("N,theory_nats\n");
            for (n, v) in curve {
                body.push_str(&format!("{n},{v:.16e}\n"));
            }
            let path = out_dir.join(&name);
            fs::write(&path, body).map_err(io_err(format!("writing {}", path.display())))?;
            files.push(path);
            theory_csv = Some(name);
        }
    }

    let sidecar = Sidecar {
        tool: "kscg".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        name: spec.name.clone(),
        experiment: spec.experiment.to_string(),
        seed: spec.seed,
        trials: spec.trials,
        config_hash: config_hash(spec),
        spec: spec.clone(),
        series: records,
        theory_csv,
    };
    let path = out_dir.join(format!("{}.json", spec.name));
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&path, json + "\n").map_err(io_err(format!("writing {}", path.display())))?;
    files.push(path);
    Ok(RunSummary { sidecar, out_dir: out_dir.to_path_buf(), files })
}

pub const POINT_HEADER: &str = "N,K,sum_rate_nats,rate_hw,interference,intf_hw,lambda,mu";

fn point_row(p: &Estimate) -> String {
    format!(
        "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        p.n, p.k, p.sum_rate, p.rate_hw, p.interference, p.intf_hw, p.duals.lambda, p.duals.mu
    )
}

fn point_csv(points: &[Estimate]) -> String {
    let mut out = format!("{POINT_HEADER}\n");
    for p in points {
        out.push_str(&point_row(p));
        out.push('\n');
    }
    out
}

fn parameter_csv(rows: &[(f64, Estimate)]) -> String {
    let mut out = format!("parameter,{POINT_HEADER}\n");
    for (v, p) in rows {
        out.push_str(&format!("{v:.16e},{}\n", point_row(p)));
    }
    out
}
