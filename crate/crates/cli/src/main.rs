use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use planar_diffraction::job::{self, OUTPUT_DIR_ENV};
use planar_diffraction::samplers::DEFAULT_GUARD_BITS;
use planar_diffraction::{Command, Complex64, Error, JobSpec, Result, SamplerSpec, System};

/// Exit status for errors; `verify` uses 1 for failed checks.
const ERROR_EXIT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "planar-diffraction",
    version,
    about = "Sample planar lattice systems and estimate their correlations and diffraction"
)]
struct Cli {
    /// Directory for artifacts when no --out is given; relative --out paths resolve against it.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a window and write it as CSV.
    Generate {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Autocorrelation coefficients eta(z) for |z|_inf <= range.
    Autocorr {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, default_value_t = job::DEFAULT_RANGE)]
        range: usize,
        /// Sum directly instead of via FFT.
        #[arg(long)]
        direct: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generalized correlation of one sampled window.
    Correlate {
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Terms `(a,b):m` separated by commas; `(a,b)` means m=1, `(a,b)*` means m=-1.
        #[arg(long)]
        query: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Periodogram flatness report; with an output path, also a 16-bit PGM heatmap.
    Periodogram {
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Comb weights `PLUS,MINUS` for the +1 and -1 sites, e.g. `1,0` or `0.5+0.5i,-1`.
        #[arg(long)]
        phi: Option<String>,
        /// Intensity mapped to the PGM maximum (default: 4x the expected density).
        #[arg(long)]
        clip: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact ensemble correlation for a query.
    Oracle {
        #[arg(long, value_enum, default_value_t = SystemName::Bernoulli)]
        system: SystemName,
        #[arg(long, default_value = "coin")]
        law: String,
        #[arg(long)]
        query: String,
    },
    /// Run the acceptance checks and print a JSON report; exit 1 if any check fails.
    Verify {
        /// Restrict to one system; all systems when omitted.
        #[arg(long, value_enum)]
        system: Option<SystemName>,
        #[arg(long, default_value_t = 512)]
        size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Tolerance override `name=value`, repeatable.
        #[arg(long = "tolerance", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimates over increasing window sizes, for a query or a Bragg frequency.
    Converge {
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, conflicts_with = "frequency")]
        query: Option<String>,
        /// Frequency `qa,qb` in cycles per site.
        #[arg(long)]
        frequency: Option<String>,
        #[arg(long)]
        phi: Option<String>,
        /// Comma-separated, strictly increasing.
        #[arg(long, default_value = "64,128,256,512")]
        sizes: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a JSON job file.
    Run { job: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SystemName {
    Bernoulli,
    Ledrappier,
    Times23,
    RudinShapiro,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, value_enum, default_value_t = SystemName::Bernoulli)]
    system: SystemName,
    /// Square window side; overridden by --width/--height.
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bernoulli site law: `coin`, `rademacher:P`, `circle`, or `roots:K`.
    #[arg(long, default_value = "coin")]
    law: String,
    /// Extra bits of precision for the (x2,x3) sampler.
    #[arg(long, default_value_t = DEFAULT_GUARD_BITS)]
    guard_bits: u32,
}

fn system(name: SystemName, law: &str, guard_bits: u32) -> Result<System> {
    Ok(match name {
        SystemName::Bernoulli => System::Bernoulli { law: law.parse()? },
        SystemName::Ledrappier => System::Ledrappier,
        SystemName::Times23 => System::Times23 { guard_bits },
        SystemName::RudinShapiro => System::RudinShapiro,
    })
}

impl SamplerArgs {
    fn spec(&self) -> Result<SamplerSpec> {
        Ok(SamplerSpec::new(
            system(self.system, &self.law, self.guard_bits)?,
            self.width.unwrap_or(self.size),
            self.height.unwrap_or(self.size),
            self.seed,
        ))
    }
}

/// `1`, `-0.5`, `2i`, `-i`, `0.25+0.5i`, `1e-3-2e-3i`.
fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("bad complex number {text:?}"));
    let t = text.trim();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // The sign separating real and imaginary parts is the last one not preceded by an exponent marker.
    let split = body
        .char_indices()
        .rev()
        .find(|&(i, c)| i > 0 && (c == '+' || c == '-') && !body[..i].ends_with(['e', 'E']))
        .map(|(i, _)| i);
    let (re, im) = match split {
        Some(i) => (body[..i].parse().map_err(|_| bad())?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

fn parse_phi(text: &str) -> Result<(Complex64, Complex64)> {
    let (plus, minus) = text
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("phi must be PLUS,MINUS, got {text:?}")))?;
    Ok((parse_complex(plus)?, parse_complex(minus)?))
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::Parse(format!("expected two comma-separated numbers, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad size {s:?}"))))
        .collect()
}

fn parse_tolerances(items: &[String]) -> Result<BTreeMap<String, f64>> {
    items
        .iter()
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("tolerance must be NAME=VALUE, got {item:?}")))?;
            let value = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad tolerance value {value:?}")))?;
            Ok((name.to_string(), value))
        })
        .collect()
}

fn job_from(cmd: Cmd) -> Result<JobSpec> {
    let job = match cmd {
        Cmd::Generate { sampler, out } => {
            let mut job = JobSpec::new(Command::Generate, sampler.spec()?);
            job.params.out = out;
            job
        }
        Cmd::Autocorr {
            sampler,
            range,
            direct,
            out,
        } => {
            let mut job = JobSpec::new(Command::Autocorr, sampler.spec()?);
            job.params.range = Some(range);
            job.params.direct = direct;
            job.params.out = out;
            job
        }
        Cmd::Correlate { sampler, query, out } => {
            let mut job = JobSpec::new(Command::Correlate, sampler.spec()?);
            job.params.query = Some(query);
            job.params.out = out;
            job
        }
        Cmd::Periodogram {
            sampler,
            phi,
            clip,
            out,
        } => {
            let mut job = JobSpec::new(Command::Periodogram, sampler.spec()?);
            job.params.phi = phi.as_deref().map(parse_phi).transpose()?;
            job.params.clip = clip;
            job.params.out = out;
            job
        }
        Cmd::Oracle {
            system: name,
            law,
            query,
        } => {
            let spec = SamplerSpec::square(system(name, &law, DEFAULT_GUARD_BITS)?, 1, 0);
            let mut job = JobSpec::new(Command::Oracle, spec);
            job.params.query = Some(query);
            job
        }
        Cmd::Verify {
            system: name,
            size,
            seed,
            tolerances,
            out,
        } => {
            let chosen = system(name.unwrap_or(SystemName::Bernoulli), "coin", DEFAULT_GUARD_BITS)?;
            let mut job = JobSpec::new(Command::Verify, SamplerSpec::square(chosen, size, seed));
            job.params.all_systems = name.is_none();
            job.params.out = out;
            job.tolerances = parse_tolerances(&tolerances)?;
            job
        }
        Cmd::Converge {
            sampler,
            query,
            frequency,
            phi,
            sizes,
            out,
        } => {
            let mut job = JobSpec::new(Command::Converge, sampler.spec()?);
            job.params.query = query;
            job.params.frequency = frequency.as_deref().map(parse_pair).transpose()?;
            job.params.phi = phi.as_deref().map(parse_phi).transpose()?;
            job.params.sizes = parse_sizes(&sizes)?;
            job.params.out = out;
            job
        }
        Cmd::Run { job } => JobSpec::read(&job)?,
    };
    job.validate()?;
    Ok(job)
}

fn error_json(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.render().to_string().trim()));
            return ExitCode::from(ERROR_EXIT);
        }
    };
    let outcome = job_from(cli.command).and_then(|job| planar_diffraction::run(&job, cli.out_dir.as_deref()));
    match outcome {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(outcome.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(ERROR_EXIT);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::from(ERROR_EXIT)
        }
    }
}
