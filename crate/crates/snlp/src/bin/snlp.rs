//! Command-line front door: evaluate the analytic objects, run seeded
//! experiments, and emit CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 domain/validation error, 2 numerical failure,
//! 3 I/O error. Config files are canonical; flags override. The environment
//! variable `SNLP_SEED` overrides any configured seed. Output files are
//! written atomically (temp file + rename); experiment reports are
//! byte-identical across re-runs with the same config and seed, with
//! wall-clock metadata in a `.meta.json` sidecar.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use snlp::asymptotics::{self, EnvelopeFunction, Side};
use snlp::error::{Error, Result};
use snlp::harness::{self, ExperimentConfig};
use snlp::scale::{ScaleFunction, ScaleMethod, DEFAULT_GS_TERMS};
use snlp::sim;
use snlp::subordinator::subordinator_of;
use snlp::ProcessSpec;

#[derive(Parser)]
#[command(
    name = "snlp",
    about = "Fluctuation theory of spectrally negative Levy processes conditioned to stay positive",
    version
)]
struct Cli {
    /// Worker threads for Monte Carlo replicas (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Gs,
    Stable,
    Bm,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateKind {
    H,
    G,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Zero,
    Infinity,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Zero => Side::AtZero,
            SideArg::Infinity => Side::AtInfinity,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Nu,
    Phi,
    Nubar,
    Stable,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Unconditioned,
    Conditioned,
    Subordinator,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the Laplace exponent psi(lambda).
    Psi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        lambda: f64,
    },
    /// Evaluate the right-inverse phi(q).
    Phi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        q: f64,
    },
    /// Evaluate the scale function W(x), or tabulate it to CSV.
    Scale {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: Option<f64>,
        /// Tabulate over `min,max,count` instead of a single point.
        #[arg(long, value_name = "MIN,MAX,COUNT")]
        table: Option<String>,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, default_value_t = DEFAULT_GS_TERMS)]
        gs_terms: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Two-sided exit probability W(x)/W(x+y).
    Exit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Minimum law W(x-y)/W(x) of the conditioned process.
    Minlaw {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Rate functions h(t) (from phi) and g(t) (from psi).
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "h")]
        kind: RateKind,
    },
    /// Iterated-logarithm constants for a regularly varying index.
    Constants {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integral-test verdict for an envelope f(t) = coeff t^power |log t|^log_power.
    Inttest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        test: TestArg,
        #[arg(long, value_enum, default_value = "zero")]
        side: SideArg,
        #[arg(long, default_value_t = 1.0)]
        coeff: f64,
        #[arg(long)]
        power: f64,
        #[arg(long, default_value_t = 0.0)]
        log_power: f64,
        /// Index for the stable test (defaults to the spec's index).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample one path and export it as CSV (columns t,value).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: SimKind,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a Monte Carlo experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Report JSON path.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Flat per-path statistics CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override a top-level config field, e.g. --set seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_spec(path: &Path) -> Result<ProcessSpec> {
    let text = std::fs::read_to_string(path)?;
    ProcessSpec::from_json(&text)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp.{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn env_seed(fallback: u64) -> u64 {
    match std::env::var("SNLP_SEED") {
        Ok(v) => v.parse().unwrap_or(fallback),
        Err(_) => fallback,
    }
}

fn build_scale(spec: ProcessSpec, method: MethodArg, gs_terms: usize) -> Result<ScaleFunction> {
    match method {
        MethodArg::Auto => ScaleFunction::new(spec),
        MethodArg::Gs => ScaleFunction::with_method(spec, ScaleMethod::GaverStehfest, gs_terms),
        MethodArg::Stable => {
            ScaleFunction::with_method(spec, ScaleMethod::ClosedFormStable, gs_terms)
        }
        MethodArg::Bm => ScaleFunction::with_method(spec, ScaleMethod::ClosedFormBmDrift, gs_terms),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Psi { config, lambda } => {
            let spec = load_spec(&config)?;
            println!("{}", spec.psi(lambda)?);
            Ok(())
        }
        Command::Phi { config, q } => {
            let spec = load_spec(&config)?;
            println!("{}", spec.phi(q)?);
            Ok(())
        }
        Command::Scale {
            config,
            x,
            table,
            method,
            gs_terms,
            output,
        } => {
            let sf = build_scale(load_spec(&config)?, method, gs_terms)?;
            if let Some(spec_str) = table {
                let parts: Vec<&str> = spec_str.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!(
                        "field 'table' must be MIN,MAX,COUNT, got '{spec_str}'"
                    )));
                }
                let min: f64 = parts[0]
                    .parse()
                    .map_err(|_| Error::Config("field 'table': bad MIN".into()))?;
                let max: f64 = parts[1]
                    .parse()
                    .map_err(|_| Error::Config("field 'table': bad MAX".into()))?;
                let count: usize = parts[2]
                    .parse()
                    .map_err(|_| Error::Config("field 'table': bad COUNT".into()))?;
                if count < 2 || !(max > min) {
                    return Err(Error::Config("field 'table': need MAX > MIN, COUNT >= 2".into()));
                }
                let xs: Vec<f64> = (0..count)
                    .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
                    .collect();
                let mut buf = Vec::new();
                sf.tabulate_csv(&xs, &mut buf)?;
                let out = output
                    .ok_or_else(|| Error::Config("field 'output' required with --table".into()))?;
                write_atomic(&out, &buf)?;
                println!("wrote {} rows to {}", count, out.display());
            } else {
                let x = x.ok_or_else(|| Error::Config("field 'x' (or --table) required".into()))?;
                println!("{}", sf.w(x)?);
            }
            Ok(())
        }
        Command::Exit { config, x, y } => {
            let sf = ScaleFunction::new(load_spec(&config)?)?;
            println!("{}", sf.exit_prob(x, y)?);
            Ok(())
        }
        Command::Minlaw { config, x, y } => {
            let sf = ScaleFunction::new(load_spec(&config)?)?;
            println!("{}", sf.min_law(x, y)?);
            Ok(())
        }
        Command::Rates { config, t, kind } => {
            let spec = load_spec(&config)?;
            let v = match kind {
                RateKind::H => asymptotics::rate_h(&spec, t)?,
                RateKind::G => asymptotics::rate_g(&spec, t)?,
            };
            println!("{v}");
            Ok(())
        }
        Command::Constants { alpha, output } => {
            let (c_upper, c_chung) = asymptotics::lil_constants(alpha)?;
            if let Some(out) = output {
                let json = serde_json::json!({
                    "alpha": alpha,
                    "c_upper": c_upper,
                    "c_chung": c_chung,
                });
                write_atomic(&out, serde_json::to_string_pretty(&json).unwrap().as_bytes())?;
            }
            println!("c_upper = {c_upper}, c_chung = {c_chung}");
            Ok(())
        }
        Command::Inttest {
            config,
            test,
            side,
            coeff,
            power,
            log_power,
            alpha,
            output,
        } => {
            let spec = load_spec(&config)?;
            let side: Side = side.into();
            let f = EnvelopeFunction::power_log(coeff, power, log_power, side)?;
            let verdict = match test {
                TestArg::Nu => {
                    asymptotics::integral_test_nu(&f, &subordinator_of(&spec)?, side)?
                }
                TestArg::Phi => asymptotics::integral_test_phi(&f, &spec, side)?,
                TestArg::Nubar => {
                    asymptotics::integral_test_nubar(&f, &subordinator_of(&spec)?, side)?
                }
                TestArg::Stable => {
                    let a = alpha.or_else(|| spec.regular_variation_index()).ok_or_else(
                        || Error::Config("field 'alpha' required for the stable test".into()),
                    )?;
                    asymptotics::integral_test_stable(&f, a, side)?
                }
            };
            let json = serde_json::to_string_pretty(&verdict).unwrap();
            if let Some(out) = output {
                write_atomic(&out, json.as_bytes())?;
            }
            println!("verdict: {:?}", verdict.verdict);
            Ok(())
        }
        Command::Simulate {
            config,
            kind,
            horizon,
            dt,
            x0,
            seed,
            output,
        } => {
            let spec = load_spec(&config)?;
            let mut rng = sim::rng_stream(env_seed(seed), 0);
            let mut buf = Vec::new();
            use std::io::Write;
            writeln!(&mut buf, "t,value").map_err(Error::Io)?;
            match kind {
                SimKind::Unconditioned => {
                    let path = sim::sample_unconditioned(&spec, horizon, dt, &mut rng)?;
                    for (t, v) in path.times.iter().zip(&path.values) {
                        writeln!(&mut buf, "{t},{v}").map_err(Error::Io)?;
                    }
                }
                SimKind::Conditioned => {
                    let sf = ScaleFunction::new(spec.clone())?;
                    let path = sim::sample_conditioned(&spec, &sf, x0, horizon, dt, &mut rng)?;
                    for (t, v) in path.times.iter().zip(&path.values) {
                        writeln!(&mut buf, "{t},{v}").map_err(Error::Io)?;
                    }
                }
                SimKind::Subordinator => {
                    // Columns are level,time for the level-indexed process.
                    let sub = subordinator_of(&spec)?;
                    let path = sim::sample_subordinator(&sub, horizon, dt, &mut rng)?;
                    for (lvl, t) in path.levels.iter().zip(&path.times) {
                        writeln!(&mut buf, "{lvl},{t}").map_err(Error::Io)?;
                    }
                }
            }
            write_atomic(&output, &buf)?;
            println!("wrote path to {}", output.display());
            Ok(())
        }
        Command::Experiment {
            config,
            output,
            csv,
            overrides,
        } => {
            let started = std::time::Instant::now();
            let text = std::fs::read_to_string(&config)?;
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            for ov in &overrides {
                let (key, raw) = ov.split_once('=').ok_or_else(|| {
                    Error::Config(format!("override '{ov}' is not KEY=VALUE"))
                })?;
                let obj = value
                    .as_object_mut()
                    .ok_or_else(|| Error::Config("config root must be an object".into()))?;
                if !obj.contains_key(key) {
                    return Err(Error::Config(format!("override references unknown field '{key}'")));
                }
                let parsed: serde_json::Value = serde_json::from_str(raw)
                    .unwrap_or(serde_json::Value::String(raw.to_string()));
                obj.insert(key.to_string(), parsed);
            }
            let mut cfg = ExperimentConfig::from_json(&value.to_string())?;
            cfg.seed = env_seed(cfg.seed);
            let out = harness::run(&cfg)?;
            let elapsed = started.elapsed().as_secs_f64();
            if let Some(path) = &output {
                let json = serde_json::to_string_pretty(&out.report).unwrap();
                write_atomic(path, json.as_bytes())?;
                // Wall-clock info goes to a sidecar so the report itself is
                // reproducible byte for byte.
                let meta = serde_json::json!({
                    "runtime_seconds": elapsed,
                    "finished_unix_ms": std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_millis() as u64)
                        .unwrap_or(0),
                });
                let mut meta_path = path.as_os_str().to_owned();
                meta_path.push(".meta.json");
                write_atomic(
                    &PathBuf::from(meta_path),
                    serde_json::to_string_pretty(&meta).unwrap().as_bytes(),
                )?;
            }
            if let Some(path) = &csv {
                let mut buf = Vec::new();
                out.per_path_csv(&mut buf)?;
                write_atomic(path, &buf)?;
            }
            let summary: Vec<String> = out
                .report
                .estimates
                .iter()
                .take(3)
                .map(|(k, v)| format!("{k} = {v:.6}"))
                .collect();
            println!(
                "experiment {:?}: verdict {:?} ({})",
                cfg.experiment,
                out.report.verdict,
                summary.join(", ")
            );
            Ok(())
        }
    }
}
