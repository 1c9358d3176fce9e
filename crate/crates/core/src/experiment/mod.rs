//! Batch runners that regenerate the figure data as CSV files.
//!
//! Every run resolves one scenario file plus overrides, writes one CSV with
//! the resolved config and a content hash in its header comments, and drops
//! a `manifest.txt` beside it.

mod csv;
mod figures;
mod sweep;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beam::CodebookError;
use crate::config::{ConfigError, RawConfig, SystemConfig};
use crate::crb::CrbError;
use crate::format::fmt_g;
use crate::rate::RateError;
use crate::sensing::{EstimationError, DEFAULT_GRID_POINTS};

pub use csv::{Cell, CsvSink};
pub use sweep::{SweepAxis, SweepScale};

/// Transmit powers (dBm) swept by the RMSE figure.
pub const FIG3_POWERS_DBM: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    ConfigFile { path: PathBuf, source: io::Error },
    #[error("unknown sweep key `{0}`")]
    UnknownSweepKey(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("estimation: {0}")]
    Estimation(#[from] EstimationError),
    #[error("crb: {0}")]
    Crb(#[from] CrbError),
    #[error("rate: {0}")]
    Rate(#[from] RateError),
    #[error("codebook: {0}")]
    Codebook(#[from] CodebookError),
}

impl RunnerError {
    /// True for problems in the inputs, as opposed to failures while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            RunnerError::Config(_)
                | RunnerError::ConfigFile { .. }
                | RunnerError::UnknownSweepKey(_)
                | RunnerError::InvalidSweep(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// RMSE and RCRB against transmit power.
    Fig3,
    /// Rate and RCRB against scan time.
    Fig4,
    /// STAS and OTAS rate against RCRB.
    Fig5,
    /// Any config key against every metric.
    CustomSweep,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::CustomSweep => "sweep",
        }
    }
}

impl FromStr for Figure {
    type Err = RunnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "sweep" | "custom-sweep" => Ok(Figure::CustomSweep),
            other => Err(RunnerError::InvalidSweep(format!("unknown figure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub figure: Figure,
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub workers: usize,
    /// `key=value` assignments applied after the file is read.
    pub overrides: Vec<String>,
    pub sweep: Option<SweepAxis>,
    /// Extra target angles for the RMSE figure, on top of the configured θ_IT.
    pub theta_set_deg: Vec<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub grid_points: usize,
    /// Also write per-trial errors for every RMSE point.
    pub dump_trials: bool,
}

impl ExperimentSpec {
    pub fn new(figure: Figure, config_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            figure,
            config_path: config_path.into(),
            output_dir: output_dir.into(),
            workers: 1,
            overrides: Vec::new(),
            sweep: None,
            theta_set_deg: Vec::new(),
            seed: None,
            trials: None,
            grid_points: DEFAULT_GRID_POINTS,
            dump_trials: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
    pub skipped: usize,
    pub spec_hash: String,
}

/// A spec together with its resolved scenario.
#[derive(Debug, Clone)]
pub struct Experiment {
    spec: ExperimentSpec,
    raw: RawConfig,
    base: SystemConfig,
}

impl Experiment {
    /// Reads the scenario file named by the spec.
    pub fn from_spec(spec: ExperimentSpec) -> Result<Self, RunnerError> {
        let text = fs::read_to_string(&spec.config_path).map_err(|source| RunnerError::ConfigFile {
            path: spec.config_path.clone(),
            source,
        })?;
        Self::from_text(spec, &text)
    }

    pub fn from_text(spec: ExperimentSpec, text: &str) -> Result<Self, RunnerError> {
        let mut raw = RawConfig::parse(text)?;
        for assignment in &spec.overrides {
            raw.apply_override(assignment)?;
        }
        if let Some(seed) = spec.seed {
            raw.set("rng_seed", &seed.to_string())?;
        }
        if let Some(trials) = spec.trials {
            raw.set("mc_trials", &trials.to_string())?;
        }
        let base = raw.resolve()?;
        if spec.grid_points < 2 {
            return Err(RunnerError::InvalidSweep(format!(
                "grid_points must be at least 2, got {}",
                spec.grid_points
            )));
        }
        if let Some(axis) = &spec.sweep {
            if matches!(spec.figure, Figure::Fig4 | Figure::Fig5) && axis.key != "codebook_size" {
                return Err(RunnerError::InvalidSweep(format!(
                    "{} only sweeps codebook_size, not {}",
                    spec.figure.name(),
                    axis.key
                )));
            }
            if spec.figure == Figure::Fig3 {
                return Err(RunnerError::InvalidSweep("fig3 sweeps tx power itself".into()));
            }
        }
        Ok(Experiment { spec, raw, base })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn base_config(&self) -> &SystemConfig {
        &self.base
    }

    /// The run description that the hash covers. The worker count is left
    /// out because it does not change the output.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "figure = {}", self.spec.figure.name());
        let _ = writeln!(s, "grid_points = {}", self.spec.grid_points);
        if !self.spec.theta_set_deg.is_empty() {
            let thetas: Vec<String> = self.spec.theta_set_deg.iter().map(|t| fmt_g(*t)).collect();
            let _ = writeln!(s, "theta_set_deg = {}", thetas.join(","));
        }
        if let Some(axis) = &self.spec.sweep {
            let _ = writeln!(s, "sweep = {axis}");
        }
        s.push_str(&self.base.to_config_text());
        s
    }

    /// `sha256("blob {len}\0{text}")` of [`Self::canonical_text`], hex encoded.
    pub fn spec_hash(&self) -> String {
        let text = self.canonical_text();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", text.len()).as_bytes());
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn header_comments(&self) -> Vec<String> {
        let mut c = vec![
            format!(
                "isac-beamscan {} {}",
                self.spec.figure.name(),
                env!("CARGO_PKG_VERSION")
            ),
            format!("spec_sha256 = {}", self.spec_hash()),
        ];
        c.extend(self.canonical_text().lines().map(|l| format!("config {l}")));
        c
    }

    /// Raw config with one more assignment, resolved and validated.
    fn derive(&self, assignments: &[(&str, String)]) -> Result<SystemConfig, RunnerError> {
        let mut raw = self.raw.clone();
        for (k, v) in assignments {
            raw.set(k, v)?;
        }
        Ok(raw.resolve()?)
    }

    /// Writes the CSV to `out`, without touching the file system otherwise.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(usize, usize), RunnerError> {
        self.write_csv_with_dumps(out, None)
    }

    fn write_csv_with_dumps<W: Write>(
        &self,
        out: W,
        dump_dir: Option<&Path>,
    ) -> Result<(usize, usize), RunnerError> {
        let comments = self.header_comments();
        match self.spec.figure {
            Figure::Fig3 => figures::fig3(self, out, &comments, dump_dir),
            Figure::Fig4 => figures::fig4(self, out, &comments),
            Figure::Fig5 => figures::fig5(self, out, &comments),
            Figure::CustomSweep => figures::custom_sweep(self, out, &comments),
        }
    }

    /// Creates the output directory and writes `<figure>.csv` and `manifest.txt`.
    pub fn run(&self) -> Result<RunSummary, RunnerError> {
        let dir = &self.spec.output_dir;
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.spec.figure.name()));
        let dump_dir = if self.spec.dump_trials {
            let d = dir.join("trials");
            fs::create_dir_all(&d)?;
            Some(d)
        } else {
            None
        };
        let file = BufWriter::new(File::create(&csv_path)?);
        let (rows, skipped) = self.write_csv_with_dumps(file, dump_dir.as_deref())?;
        let spec_hash = self.spec_hash();
        let manifest_path = dir.join("manifest.txt");
        let mut m = String::new();
        let _ = writeln!(m, "tool = isac-beamscan");
        let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "figure = {}", self.spec.figure.name());
        let _ = writeln!(m, "config_path = {}", self.spec.config_path.display());
        let _ = writeln!(m, "csv = {}", csv_path.display());
        let _ = writeln!(m, "spec_sha256 = {spec_hash}");
        let _ = writeln!(m, "workers = {}", self.spec.workers);
        let _ = writeln!(m, "rows = {rows}");
        let _ = writeln!(m, "skipped = {skipped}");
        for line in self.canonical_text().lines() {
            let _ = writeln!(m, "config.{line}");
        }
        fs::write(&manifest_path, m)?;
        Ok(RunSummary {
            csv_path,
            manifest_path,
            rows,
            skipped,
            spec_hash,
        })
    }
}
