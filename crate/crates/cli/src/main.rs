use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use frab_noma::analysis::{composite_cdf_gc, fit_diversity_slope, high_snr_window, lemma1_cdf_raw, prop1_cdf_raw};
use frab_noma::config::{ConfigBuilder, Preset, SystemConfig};
use frab_noma::engine::{analytical_curve, run_sweep_with_workers, series};
use frab_noma::report::{to_csv, RunRecord};

/// NOMA over finite-resolution analog beamforming: Monte Carlo sweeps and closed-form outage curves.
#[derive(Debug, Parser)]
#[command(name = "frab-noma", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Simulate a sweep and write `<name>.csv` plus a `<name>.json` sidecar.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Output directory.
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
    },
    /// Resolve and check a config without running it.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Evaluate the closed-form single-beam outage curves.
    Analysis {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Fit the high-SNR slope of both analytical curves.
        #[arg(long)]
        slope: bool,
        /// Point evaluation: `prop1:M:z`, `lemma1:M:d:y` or `gc:y` (repeatable).
        #[arg(long = "eval", value_name = "EXPR")]
        evals: Vec<String>,
        /// CSV destination (file, or directory for `<name>-analysis.csv`); stdout if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// fig1-rayleigh, fig1-mmwave, fig2 or custom.
    #[arg(long)]
    preset: Option<Preset>,
    /// Flat `key = value` config file; may name a preset with `preset = ...`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Transmit power sweep in dBm, `lo:hi:step` or a comma list.
    #[arg(long = "tx-dbm", value_name = "SWEEP", allow_hyphen_values = true)]
    tx_dbm: Option<String>,
    /// Gauss-Chebyshev node count for the S2 closed form.
    #[arg(long = "gc-nodes")]
    gc_nodes: Option<usize>,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long = "s2-size")]
    s2_size: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    a0sq: Option<f64>,
    #[arg(long)]
    a1sq: Option<f64>,
    #[arg(long)]
    rate0: Option<f64>,
    #[arg(long)]
    rate1: Option<f64>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

enum Failure {
    Io(String),
    Config(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        match self {
            Failure::Io(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Failure::Config(m) => {
                eprintln!("config error: {m}");
                ExitCode::from(3)
            }
        }
    }
}

impl From<frab_noma::Error> for Failure {
    fn from(e: frab_noma::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

struct Resolved {
    name: String,
    preset: Preset,
    config: SystemConfig,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<Resolved, Failure> {
        let (mut builder, name) = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
                let b = ConfigBuilder::from_config_text(self.preset.unwrap_or(Preset::Custom), &text)?;
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| b.preset().name().to_string());
                (b, stem)
            }
            None => {
                let p = self
                    .preset
                    .ok_or_else(|| Failure::Config("need --preset or --config".into()))?;
                (ConfigBuilder::new(p), p.name().to_string())
            }
        };

        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            builder.set(k, v)?;
        }
        let flags: [(&str, Option<String>); 12] = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("tx_dbm", self.tx_dbm.clone()),
            ("gc_nodes", self.gc_nodes.map(|v| v.to_string())),
            ("antennas", self.antennas.map(|v| v.to_string())),
            ("s2_size", self.s2_size.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("r1", self.r1.map(|v| v.to_string())),
            ("a0sq", self.a0sq.map(|v| v.to_string())),
            ("a1sq", self.a1sq.map(|v| v.to_string())),
            ("rate0", self.rate0.map(|v| v.to_string())),
            ("rate1", self.rate1.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                builder.set(k, &v)?;
            }
        }
        Ok(Resolved {
            name,
            preset: builder.preset(),
            config: builder.build()?,
        })
    }
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(scenario: &ScenarioArgs, workers: usize, output: &Path) -> Result<(), Failure> {
    let r = scenario.resolve()?;
    let warnings = r.config.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(output)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", output.display())))?;

    let start = Instant::now();
    let curve = run_sweep_with_workers(&r.config, workers)?;
    let elapsed = start.elapsed().as_secs_f64();

    let csv_name = format!("{}.csv", r.name);
    let csv_path = output.join(&csv_name);
    write(&csv_path, &to_csv(&curve))?;
    let record = RunRecord {
        experiment: r.name.clone(),
        preset: r.preset.name().to_string(),
        csv: csv_name,
        config_file: format!("preset = {}\n{}", r.preset.name(), r.config.to_config_text()),
        config_hash: r.config.hash(),
        seed: r.config.seed,
        trials: r.config.trials,
        workers,
        git_describe: git_describe(),
        duration_seconds: elapsed,
        warnings,
        config: r.config,
    };
    let json_path = output.join(format!("{}.json", r.name));
    write(&json_path, &record.to_json())?;
    println!("wrote {} and {} ({elapsed:.2} s)", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_validate(scenario: &ScenarioArgs) -> Result<(), Failure> {
    let r = scenario.resolve()?;
    for w in r.config.warnings() {
        println!("warning: {w}");
    }
    println!("# {} (preset {})", r.name, r.preset);
    print!("{}", r.config.to_config_text());
    Ok(())
}

fn eval_point(expr: &str, cfg: &SystemConfig) -> Result<String, Failure> {
    let parts: Vec<&str> = expr.split(':').collect();
    let num = |s: &str| -> Result<f64, Failure> {
        s.trim()
            .parse()
            .map_err(|_| Failure::Config(format!("--eval {expr}: `{s}` is not a number")))
    };
    let count = |s: &str| -> Result<usize, Failure> {
        s.trim()
            .parse()
            .map_err(|_| Failure::Config(format!("--eval {expr}: `{s}` is not a count")))
    };
    match parts[..] {
        ["prop1", m, z] => {
            let (m, z) = (count(m)?, num(z)?);
            Ok(format!("prop1,M={m},z={z},{}", prop1_cdf_raw(z, m)))
        }
        ["lemma1", m, d, y] => {
            let (m, d, y) = (count(m)?, num(d)?, num(y)?);
            Ok(format!("lemma1,M={m},d={d},y={y},{}", lemma1_cdf_raw(y, m, d, cfg.alpha)?))
        }
        ["gc", y] => {
            let y = num(y)?;
            let v = composite_cdf_gc(y, cfg.antennas, cfg.alpha, cfg.r1, cfg.gc_nodes)?;
            Ok(format!("gc,M={},N={},y={y},{v}", cfg.antennas, cfg.gc_nodes))
        }
        _ => Err(Failure::Config(format!(
            "--eval expects prop1:M:z, lemma1:M:d:y or gc:y, got `{expr}`"
        ))),
    }
}

fn cmd_analysis(
    scenario: &ScenarioArgs,
    slope: bool,
    evals: &[String],
    output: Option<&Path>,
) -> Result<(), Failure> {
    let r = scenario.resolve()?;
    if r.config.s1_size != 1 {
        return Err(Failure::Config(format!(
            "closed-form analysis covers a single beam, but s1_size = {}",
            r.config.s1_size
        )));
    }
    let curve = analytical_curve(&r.config)?;
    let csv = to_csv(&curve);

    let mut summary = Vec::new();
    if slope {
        for name in [series::OUTAGE_S1_ANALYTICAL, series::OUTAGE_S2_ANALYTICAL] {
            let points = curve.rho_points(name).expect("analytical curve has both series");
            let fit = fit_diversity_slope(&points, high_snr_window(&points, 1e-12))?;
            summary.push(format!(
                "slope,{name},{},diversity={},points={}",
                fit.slope,
                fit.diversity(),
                fit.used
            ));
        }
    }
    for e in evals {
        summary.push(format!("eval,{}", eval_point(e, &r.config)?));
    }

    match output {
        Some(path) => {
            let path = if path.is_dir() {
                path.join(format!("{}-analysis.csv", r.name))
            } else {
                path.to_path_buf()
            };
            write(&path, &csv)?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{csv}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Run {
            scenario,
            workers,
            output,
        } => cmd_run(scenario, *workers, output),
        Cmd::Validate { scenario } => cmd_validate(scenario),
        Cmd::Analysis {
            scenario,
            slope,
            evals,
            output,
        } => cmd_analysis(scenario, *slope, evals, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
