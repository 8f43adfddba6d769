//! Jobs: one command applied to one sampler configuration.
//!
//! A [`JobSpec`] comes either from command-line flags or from a JSON job
//! file; [`run`] executes it and reports what it wrote.

pub mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlations::{
    autocorr_table, autocorr_table_direct, correlation, correlation_convergence, CorrelationQuery,
};
use crate::diffraction::{bragg_estimate, expected_spectrum, flatness_report, periodogram, TheoreticalSpectrum};
use crate::error::{Error, Result};
use crate::io::{report_json, table_csv, window_csv, write_grid_pgm};
use crate::oracles::{bernoulli_corr_oracle, ledrappier_corr_oracle, times23_corr_oracle};
use crate::samplers::{SamplerSpec, System};

pub use verify::{CheckRecord, Summary, VerifyConfig, VerifyReport};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PLANAR_DIFFRACTION_OUT";
pub const DEFAULT_RANGE: usize = 8;
pub const DEFAULT_SIZES: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Generate,
    Autocorr,
    Correlate,
    Periodogram,
    Oracle,
    Verify,
    Converge,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Lag range for autocorrelation tables.
    pub range: Option<usize>,
    /// Query in the `(a,b):m, ...` grammar.
    pub query: Option<String>,
    /// Comb weights `(φ₊, φ₋)`.
    pub phi: Option<(Complex64, Complex64)>,
    pub sizes: Vec<usize>,
    /// Frequency in cycles per site, for Bragg convergence series.
    pub frequency: Option<(f64, f64)>,
    pub out: Option<PathBuf>,
    /// Upper end of the PGM intensity scale.
    pub clip: Option<f64>,
    /// Compute autocorrelation tables by direct summation.
    pub direct: bool,
    /// `verify` every system rather than only the sampler's.
    pub all_systems: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl JobSpec {
    pub fn new(command: Command, sampler: SamplerSpec) -> Self {
        JobSpec {
            command,
            sampler,
            params: Params::default(),
            tolerances: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let job: JobSpec = serde_json::from_str(text).map_err(|e| Error::Parse(format!("job file: {e}")))?;
        job.validate()?;
        Ok(job)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(q) = &self.params.query {
            q.parse::<CorrelationQuery>()?;
        }
        if let System::Bernoulli { law } = &self.sampler.system {
            law.validate()?;
        }
        if self.sampler.width == 0 || self.sampler.height == 0 {
            return Err(Error::InvalidWindow("dimensions must be positive".into()));
        }
        if self.tolerances.values().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::InvalidArgument("tolerances must be non-negative".into()));
        }
        let needs_query = matches!(self.command, Command::Correlate | Command::Oracle);
        if needs_query && self.params.query.is_none() {
            return Err(Error::InvalidArgument(
                format!("{:?} requires a query", self.command).to_lowercase(),
            ));
        }
        Ok(())
    }

    fn query(&self) -> Result<CorrelationQuery> {
        match &self.params.query {
            Some(q) => q.parse(),
            None => Err(Error::InvalidArgument("missing query".into())),
        }
    }

    fn phi(&self) -> (Complex64, Complex64) {
        self.params
            .phi
            .unwrap_or((Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)))
    }

    fn stem(&self) -> String {
        let s = &self.sampler;
        format!("{}-{}x{}-seed{}", s.system.name(), s.width, s.height, s.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub artifacts: Vec<PathBuf>,
}

/// Where an artifact goes: `params.out` (relative paths resolved against
/// `output_dir`), else `output_dir/default_name`, else standard output.
fn destination(job: &JobSpec, output_dir: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    match (&job.params.out, output_dir) {
        (Some(out), Some(dir)) if out.is_relative() => Some(dir.join(out)),
        (Some(out), _) => Some(out.clone()),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `text` to the destination if there is one, otherwise returns it as stdout.
fn emit(job: &JobSpec, output_dir: Option<&Path>, default_name: &str, text: String) -> Result<RunOutcome> {
    match destination(job, output_dir, default_name) {
        Some(path) => {
            write_text(&path, &text)?;
            Ok(RunOutcome {
                exit_code: 0,
                stdout: format!("{}\n", path.display()),
                artifacts: vec![path],
            })
        }
        None => Ok(RunOutcome {
            exit_code: 0,
            stdout: text,
            artifacts: Vec::new(),
        }),
    }
}

/// `1`, `-0.5`, `0.25+0.5i`.
pub fn format_complex(v: Complex64) -> String {
    let re = if v.re == 0.0 { 0.0 } else { v.re };
    if v.im == 0.0 {
        format!("{re}")
    } else if v.im < 0.0 {
        format!("{re}-{}i", -v.im)
    } else {
        format!("{re}+{}i", v.im)
    }
}

pub fn oracle_value(system: &System, query: &CorrelationQuery) -> Result<Complex64> {
    match system {
        System::Bernoulli { law } => Ok(bernoulli_corr_oracle(law, query)),
        System::Ledrappier => Ok(ledrappier_corr_oracle(query).value),
        System::Times23 { .. } => Ok(times23_corr_oracle(query).value),
        System::RudinShapiro => Err(Error::InvalidArgument(
            "no correlation oracle for the deterministic rudin-shapiro comb".into(),
        )),
    }
}

/// Density of the absolutely continuous part for the given comb weights.
pub fn expected_density(system: &System, phi: (Complex64, Complex64)) -> f64 {
    match system {
        System::Bernoulli { law } => expected_spectrum(law, phi.0, phi.1).ac_density,
        other => {
            TheoreticalSpectrum::of_system(other)
                .reweighted(phi.0, phi.1)
                .ac_density
        }
    }
}

#[derive(Serialize)]
struct CorrelateRecord<'a> {
    system: &'a str,
    width: usize,
    height: usize,
    seed: u64,
    query: String,
    value: Complex64,
}

pub fn run(job: &JobSpec, output_dir: Option<&Path>) -> Result<RunOutcome> {
    job.validate()?;
    let stem = job.stem();
    match job.command {
        Command::Generate => {
            let window = job.sampler.sample()?;
            emit(job, output_dir, &format!("{stem}.csv"), window_csv(&window))
        }
        Command::Autocorr => {
            let window = job.sampler.sample()?;
            let range = job.params.range.unwrap_or(DEFAULT_RANGE);
            let table = if job.params.direct {
                autocorr_table_direct(&window, range)?
            } else {
                autocorr_table(&window, range)?
            };
            emit(
                job,
                output_dir,
                &format!("{stem}-autocorr-r{range}.csv"),
                table_csv(&table),
            )
        }
        Command::Correlate => {
            let window = job.sampler.sample()?;
            let query = job.query()?;
            let value = correlation(&window, &query)?;
            match destination(job, output_dir, &format!("{stem}-correlate.json")) {
                None => Ok(RunOutcome {
                    exit_code: 0,
                    stdout: format!("{}\n", format_complex(value)),
                    artifacts: Vec::new(),
                }),
                Some(_) => {
                    let record = CorrelateRecord {
                        system: job.sampler.system.name(),
                        width: window.width(),
                        height: window.height(),
                        seed: job.sampler.seed,
                        query: query.to_string(),
                        value,
                    };
                    emit(
                        job,
                        output_dir,
                        &format!("{stem}-correlate.json"),
                        report_json(&record)?,
                    )
                }
            }
        }
        Command::Oracle => {
            let value = oracle_value(&job.sampler.system, &job.query()?)?;
            Ok(RunOutcome {
                exit_code: 0,
                stdout: format!("{}\n", format_complex(value)),
                artifacts: Vec::new(),
            })
        }
        Command::Periodogram => {
            let window = job.sampler.sample()?;
            let phi = job.phi();
            let grid = match job.params.phi {
                Some(phi) => periodogram(&window.comb_weights(phi.0, phi.1)?),
                None => periodogram(&window),
            };
            let density = expected_density(&job.sampler.system, phi);
            let report = flatness_report(&grid, density, job.sampler.system.is_iid())?;
            let json = report_json(&report)?;
            match destination(job, output_dir, &format!("{stem}-periodogram.pgm")) {
                None => Ok(RunOutcome {
                    exit_code: 0,
                    stdout: json,
                    artifacts: Vec::new(),
                }),
                Some(path) => {
                    let clip = job.params.clip.unwrap_or(4.0 * density);
                    write_grid_pgm(&grid, &path, clip)?;
                    let report_path = path.with_extension("flatness.json");
                    write_text(&report_path, &json)?;
                    let sidecar = crate::io::sidecar_path(&path);
                    let stdout = format!("{}\n{}\n{}\n", path.display(), sidecar.display(), report_path.display());
                    Ok(RunOutcome {
                        exit_code: 0,
                        stdout,
                        artifacts: vec![path, sidecar, report_path],
                    })
                }
            }
        }
        Command::Converge => {
            let sizes = if job.params.sizes.is_empty() {
                DEFAULT_SIZES.to_vec()
            } else {
                job.params.sizes.clone()
            };
            let mut csv = String::new();
            match (&job.params.query, job.params.frequency) {
                (Some(_), _) => {
                    csv.push_str("n,re,im\n");
                    for (n, v) in correlation_convergence(&job.sampler, &job.query()?, &sizes)? {
                        csv.push_str(&format!("{n},{},{}\n", v.re, v.im));
                    }
                }
                (None, Some(frequency)) => {
                    csv.push_str("n,ordinate\n");
                    for (n, v) in bragg_estimate(&job.sampler, job.phi(), frequency, &sizes)? {
                        csv.push_str(&format!("{n},{v}\n"));
                    }
                }
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "converge requires a query or a frequency".into(),
                    ));
                }
            }
            emit(job, output_dir, &format!("{stem}-converge.csv"), csv)
        }
        Command::Verify => {
            let cfg = VerifyConfig {
                size: job.sampler.width,
                seed: job.sampler.seed,
                tolerances: job.tolerances.clone(),
            };
            let system = (!job.params.all_systems).then(|| job.sampler.system.name());
            let report = verify::verify(system, &cfg)?;
            let mut outcome = emit(job, output_dir, &format!("verify-{stem}.json"), report_json(&report)?)?;
            if !outcome.artifacts.is_empty() {
                outcome.stdout = report_json(&report)?;
            }
            outcome.exit_code = if report.pass { 0 } else { 1 };
            Ok(outcome)
        }
    }
}
