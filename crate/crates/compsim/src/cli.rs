//! Experiment front end: parse a config file, run a named experiment, emit
//! CSV tables plus a manifest echo for reproducibility.
//!
//! Every output file starts with a `# config_digest=... seed=...` comment
//! line so tables from different configurations cannot be mixed up silently.
//! Numeric fields are written with Rust's shortest round-trip formatting.
//! Existing outputs are never overwritten unless `force` is set.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evaluate::{
    bounds_validation, delay_sweep, intratier_loss, l_sweep, EvalError, LossAxis,
};
use crate::model::{ExperimentConfig, ShapeConfig};
use crate::overhead::{
    time_fraction_analytic, time_fraction_renewal, BlockShape, CoherenceModel, DelayModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    DelaySweep,
    LSweep,
    IntraTierLoss,
    BoundsValidation,
    TimeFractionReport,
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Experiment::DelaySweep => "delay_sweep",
            Experiment::LSweep => "l_sweep",
            Experiment::IntraTierLoss => "intratier_loss",
            Experiment::BoundsValidation => "bounds_validation",
            Experiment::TimeFractionReport => "time_fraction_report",
        };
        write!(f, "{name}")
    }
}

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config_path: PathBuf,
    pub seed: u64,
    pub trials: u64,
    pub output_dir: PathBuf,
    pub force: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config validation failed:\n{0}")]
    Validation(String),
    #[error("output file already exists (pass --force to overwrite): {0}")]
    OutputExists(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    /// 1 for configuration problems, 2 for runtime faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 1,
            _ => 2,
        }
    }
}

fn coherence_model(cfg: &ExperimentConfig) -> CoherenceModel {
    let mean = cfg.coherence.mean_ms / 1e3;
    match &cfg.coherence.shape {
        ShapeConfig::GammaShape(m) => CoherenceModel::gamma(*m, mean),
        ShapeConfig::Named(_) => CoherenceModel::deterministic(mean),
    }
}

fn delay_model(cfg: &ExperimentConfig) -> DelayModel {
    let offset = cfg.delay.fixed_offset_ms / 1e3;
    let stage_mean = (cfg.delay.mean_ms - cfg.delay.fixed_offset_ms) / 1e3;
    if cfg.delay.stages == 0 || stage_mean == 0.0 {
        DelayModel::new(Vec::new(), offset)
    } else {
        let rate = cfg.delay.stages as f64 / stage_mean;
        DelayModel::new(vec![rate; cfg.delay.stages], offset)
    }
}

struct OutputWriter {
    dir: PathBuf,
    force: bool,
    header: String,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    fn new(manifest: &RunManifest, digest: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&manifest.output_dir).map_err(|source| CliError::Io {
            path: manifest.output_dir.clone(),
            source,
        })?;
        Ok(Self {
            dir: manifest.output_dir.clone(),
            force: manifest.force,
            header: format!(
                "# config_digest={digest} seed={} trials={} version={}\n",
                manifest.seed,
                manifest.trials,
                env!("CARGO_PKG_VERSION")
            ),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if path.exists() && !self.force {
            return Err(CliError::OutputExists(path));
        }
        let mut content = self.header.clone();
        content.push_str(body);
        std::fs::write(&path, content).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

fn fmt_field(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:?}")
    }
}

/// Run an experiment end to end; returns the paths written.
pub fn run(manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let raw = std::fs::read(&manifest.config_path).map_err(|source| CliError::ReadConfig {
        path: manifest.config_path.clone(),
        source,
    })?;
    let digest: String = Sha256::digest(&raw)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect();
    let cfg: ExperimentConfig =
        serde_json::from_slice(&raw).map_err(|e| CliError::Parse {
            path: manifest.config_path.clone(),
            message: e.to_string(),
        })?;
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(CliError::Validation(violations.join("\n")));
    }

    let coherence = coherence_model(&cfg);
    let delay = delay_model(&cfg);
    let mappings = [cfg.coverage_mapping(), cfg.throughput_mapping()];
    let mut writer = OutputWriter::new(manifest, &digest)?;

    match manifest.experiment {
        Experiment::DelaySweep => {
            let means_s: Vec<f64> = cfg.delay_sweep_means_ms.iter().map(|m| m / 1e3).collect();
            let rows = delay_sweep(
                &cfg.network,
                &coherence,
                &delay,
                &mappings,
                &means_s,
                manifest.trials,
                manifest.seed,
            )?;
            for (mi, metric) in ["coverage", "throughput"].iter().enumerate() {
                let mut body = String::from(
                    "mean_delay_ms,metric,value,std_error,baseline_value,baseline_std_error,trials,seed\n",
                );
                for row in &rows {
                    let r = &row.results[mi];
                    let b = &row.baselines[mi];
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{},{},{},{}",
                        fmt_field(row.mean_delay_s * 1e3),
                        metric,
                        fmt_field(r.mean),
                        fmt_field(r.std_error),
                        fmt_field(b.mean),
                        fmt_field(b.std_error),
                        r.trials,
                        r.seed
                    );
                }
                writer.write(&format!("delay_sweep_{metric}.csv"), &body)?;
            }
        }
        Experiment::LSweep => {
            let rows = l_sweep(
                &cfg.network,
                &coherence,
                &delay,
                &mappings,
                &cfg.l_sweep_values,
                manifest.trials,
                manifest.seed,
            )?;
            for (mi, metric) in ["coverage", "throughput"].iter().enumerate() {
                let mut body = String::from("l,metric,value,std_error,trials,seed\n");
                for row in &rows {
                    let r = &row.results[mi];
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{},{}",
                        row.l,
                        metric,
                        fmt_field(r.mean),
                        fmt_field(r.std_error),
                        r.trials,
                        r.seed
                    );
                }
                writer.write(&format!("l_sweep_{metric}.csv"), &body)?;
            }
        }
        Experiment::IntraTierLoss => {
            let axes = [
                (
                    "delay",
                    LossAxis::DelaySweep(
                        cfg.delay_sweep_means_ms.iter().map(|m| m / 1e3).collect(),
                    ),
                    "mean_delay_ms",
                    1e3,
                ),
                (
                    "l",
                    LossAxis::LSweep(cfg.l_sweep_values.clone()),
                    "l",
                    1.0,
                ),
            ];
            for (axis_name, axis, axis_col, axis_scale) in axes {
                let rows = intratier_loss(
                    &cfg.network,
                    &coherence,
                    &delay,
                    &mappings,
                    &axis,
                    manifest.trials,
                    manifest.seed,
                )?;
                for (mi, metric) in ["coverage", "throughput"].iter().enumerate() {
                    let mut body = format!(
                        "{axis_col},metric,cross_value,cross_std_error,intra_value,intra_std_error,loss,loss_std_error,trials,seed\n"
                    );
                    for row in &rows {
                        let c = &row.cross[mi];
                        let i = &row.intra[mi];
                        let _ = writeln!(
                            body,
                            "{},{},{},{},{},{},{},{},{},{}",
                            fmt_field(row.axis * axis_scale),
                            metric,
                            fmt_field(c.mean),
                            fmt_field(c.std_error),
                            fmt_field(i.mean),
                            fmt_field(i.std_error),
                            fmt_field(row.loss[mi]),
                            fmt_field(row.loss_se[mi]),
                            c.trials,
                            c.seed
                        );
                    }
                    writer.write(&format!("intratier_loss_{axis_name}_{metric}.csv"), &body)?;
                }
            }
        }
        Experiment::BoundsValidation => {
            let grid: Vec<f64> = (-10..=20).map(|db| db as f64).collect();
            let rows = bounds_validation(&cfg.network, &grid, manifest.trials, manifest.seed)?;
            let mut body = String::from(
                "beta,empirical_cdf,empirical_se,upper_bound,lower_bound_or_fault,dominance_lhs,dominance_rhs\n",
            );
            for row in &rows {
                let lb = match &row.lower_bound {
                    Ok(v) => fmt_field(*v),
                    Err(fault) => format!("domain_fault:{fault}").replace(',', ";"),
                };
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{},{}",
                    fmt_field(row.beta),
                    fmt_field(row.empirical_cdf),
                    fmt_field(row.empirical_se),
                    fmt_field(row.upper_bound),
                    lb,
                    row.dominance_lhs.map(fmt_field).unwrap_or_default(),
                    row.dominance_rhs.map(fmt_field).unwrap_or_default(),
                );
            }
            writer.write("bounds_validation.csv", &body)?;
        }
        Experiment::TimeFractionReport => {
            let blocks = manifest.trials.max(10_000);
            let mut body = String::from(
                "mean_delay_ms,tau_analytic,tau_renewal,abs_diff,blocks,seed\n",
            );
            for &mean_ms in &cfg.delay_sweep_means_ms {
                let d = delay.scaled_to_mean(mean_ms / 1e3).map_err(EvalError::from)?;
                let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
                let analytic = time_fraction_analytic(&coherence, &d, &mut rng);
                let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed ^ 0x5eed);
                let renewal = time_fraction_renewal(&coherence, &d, &mut rng, blocks);
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    fmt_field(mean_ms),
                    fmt_field(analytic),
                    fmt_field(renewal),
                    fmt_field((analytic - renewal).abs()),
                    blocks,
                    manifest.seed
                );
            }
            writer.write("time_fraction_report.csv", &body)?;
        }
    }

    // manifest echo: resolved config, seed, artifact version, config digest
    #[derive(Serialize)]
    struct ManifestEcho<'a> {
        experiment: Experiment,
        config_path: &'a Path,
        config_digest: &'a str,
        seed: u64,
        trials: u64,
        artifact_version: &'a str,
        coherence_is_deterministic: bool,
        resolved_config: &'a ExperimentConfig,
    }
    let echo = ManifestEcho {
        experiment: manifest.experiment,
        config_path: &manifest.config_path,
        config_digest: &digest,
        seed: manifest.seed,
        trials: manifest.trials,
        artifact_version: env!("CARGO_PKG_VERSION"),
        coherence_is_deterministic: matches!(coherence.shape, BlockShape::Deterministic),
        resolved_config: &cfg,
    };
    let mut echo_text = serde_json::to_string_pretty(&echo).expect("manifest serializes");
    echo_text.push('\n');
    let echo_path = manifest.output_dir.join("manifest.json");
    if echo_path.exists() && !manifest.force {
        return Err(CliError::OutputExists(echo_path));
    }
    std::fs::write(&echo_path, echo_text).map_err(|source| CliError::Io {
        path: echo_path.clone(),
        source,
    })?;
    let mut written = writer.written;
    written.push(echo_path);
    Ok(written)
}
