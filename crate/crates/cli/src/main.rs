use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridsense::features::{multiscale_names, FeatureSchema};
use gridsense::pipeline::stages::{self, Workdir, SYNTH_DIR};
use gridsense::pipeline::{check_config, check_config_text, ConfigCheck, PipelineConfig, Violation};
use gridsense::synth::ScenarioConfig;
use gridsense::Error;
use log::warn;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "gridsense", version, about = "Multi-scale PMU failure prediction pipeline")]
struct Cli {
    /// Pipeline config (JSON). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Artifact directory. Falls back to `paths.workdir`, then the current directory.
    #[arg(long, global = true, env = "GRIDSENSE_WORKDIR")]
    workdir: Option<PathBuf>,

    /// Overrides the evaluation seed (and the scenario seed for `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Global scaling, oversampling and feature selection before folding.
    #[arg(long, global = true)]
    paper_compat: bool,

    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Demote strict-mode config checks to warnings.
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic scenario in ingest format.
    Synth {
        /// Output directory; `<workdir>/data` when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read measurements and the disturbance log, segment and drop outliers.
    Ingest,
    /// Extract the multi-scale feature matrix.
    Extract {
        /// Write the active feature schema as JSON to this file and exit.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Recursive feature elimination.
    Select,
    /// Fit the final model on every row.
    Train,
    /// Cross-validate the learner; the default protocol reselects features per fold.
    Evaluate {
        /// Stratified hold-out fraction instead of k-fold cross-validation.
        #[arg(long)]
        holdout: Option<f64>,
    },
    /// Evaluate each window alone and all windows together under identical seeds.
    CompareScales,
    /// Render report.svg from report.json.
    Report,
    /// Check a config file and list every violation.
    ValidateConfig {
        /// Defaults to `--config`.
        path: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingArtifact(_) | Error::Config(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn print_check(check: &ConfigCheck) {
    for w in &check.warnings {
        warn!("config: {w}");
    }
    for v in &check.violations {
        eprintln!("violation: {v}");
    }
}

fn violations_failure(vs: &[Violation]) -> Failure {
    Failure::Validation(format!("{} config violation(s)", vs.len()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let check = check_config_text(&read_text(path)?, cli.lenient);
            print_check(&check);
            match check.config {
                Some(cfg) if check.violations.is_empty() => cfg,
                _ => return Err(violations_failure(&check.violations)),
            }
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.eval.seed = seed;
    }
    if cli.paper_compat {
        cfg.compat.paper_compat = true;
    }
    Ok(cfg)
}

/// Re-checks after command-line overrides.
fn recheck(cfg: &PipelineConfig, lenient: bool) -> Outcome {
    let check = check_config(cfg, lenient);
    for v in &check.violations {
        eprintln!("violation: {v}");
    }
    if check.violations.is_empty() {
        Ok(())
    } else {
        Err(violations_failure(&check.violations))
    }
}

fn workdir(cli: &Cli, cfg: &PipelineConfig) -> Result<Workdir, Failure> {
    let root = cli
        .workdir
        .clone()
        .or_else(|| cfg.paths.workdir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Workdir::open(root)?)
}

/// The synth config may be a full pipeline config (its `synth` section) or a bare scenario.
fn load_scenario(cli: &Cli) -> Result<(ScenarioConfig, PipelineConfig), Failure> {
    let Some(path) = &cli.config else {
        let mut s = ScenarioConfig::default();
        if let Some(seed) = cli.seed {
            s.seed = seed;
        }
        return Ok((s, PipelineConfig::default()));
    };
    let text = read_text(path)?;
    let check = check_config_text(&text, cli.lenient);
    let (mut scenario, cfg) = match check.config.clone() {
        Some(cfg) if check.violations.is_empty() => {
            print_check(&check);
            (cfg.synth.clone().unwrap_or_default(), cfg)
        }
        _ => match serde_json::from_str::<ScenarioConfig>(&text) {
            Ok(s) => (s, PipelineConfig::default()),
            Err(e) => {
                print_check(&check);
                eprintln!("violation: not a scenario config either: {e}");
                return Err(violations_failure(&check.violations));
            }
        },
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    Ok((scenario, cfg))
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::ValidateConfig { path } => {
            let check = match path.as_ref().or(cli.config.as_ref()) {
                Some(p) => check_config_text(&read_text(p)?, cli.lenient),
                None => check_config(&PipelineConfig::default(), cli.lenient),
            };
            for w in &check.warnings {
                println!("warning: {w}");
            }
            for v in &check.violations {
                println!("violation: {v}");
            }
            if check.violations.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(violations_failure(&check.violations))
            }
        }
        Command::Synth { out } => {
            let (scenario, cfg) = load_scenario(cli)?;
            let dir = match out {
                Some(d) => Workdir::open(d)?,
                None => Workdir::open(workdir(cli, &cfg)?.path(SYNTH_DIR))?,
            };
            let _lock = dir.lock()?;
            for p in stages::synth(&scenario, &cfg, &dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Extract { schema: Some(out) } => {
            let cfg = load_config(cli)?;
            let doc = serde_json::json!({
                "windows_s": cfg.windows.sizes_s,
                "per_scale": FeatureSchema::new(&cfg.features),
                "columns": multiscale_names(&cfg.windows, &cfg.features),
            });
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))?;
            stages::write_atomic(out, text.as_bytes())?;
            println!("{}", out.display());
            Ok(())
        }
        cmd => {
            let mut cfg = load_config(cli)?;
            if let Command::Evaluate { holdout: Some(f) } = cmd {
                cfg.eval.holdout = Some(*f);
            }
            recheck(&cfg, cli.lenient)?;
            let wd = workdir(cli, &cfg)?;
            let _lock = wd.lock()?;
            run_stage(cmd, &cfg, &wd)
        }
    }
}

fn run_stage(cmd: &Command, cfg: &PipelineConfig, wd: &Workdir) -> Outcome {
    match cmd {
        Command::Ingest => {
            let a = stages::ingest(cfg, wd)?;
            println!("{}: {} segments", wd.path(stages::SEGMENTS).display(), a.segments.len());
        }
        Command::Extract { .. } => {
            let m = stages::extract(cfg, wd)?;
            println!("{}: {} rows x {} features", wd.path(stages::FEATURES).display(), m.len(), m.n_cols());
        }
        Command::Select => {
            let s = stages::select(cfg, wd)?;
            println!("{}: {} features", wd.path(stages::SELECTION).display(), s.selected.len());
        }
        Command::Train => {
            let model = stages::train(cfg, wd)?;
            println!("{}: {} classes", wd.path(stages::MODEL).display(), model.n_classes());
        }
        Command::Evaluate { .. } => {
            let r = stages::evaluate(cfg, wd)?;
            let (m, s) = (&r.evaluation.mean, &r.evaluation.std);
            println!("{}", wd.path(stages::REPORT).display());
            println!(
                "accuracy {:.3} ± {:.3}  precision {:.3} ± {:.3}  recall {:.3} ± {:.3}  f1 {:.3} ± {:.3}",
                m.accuracy, s.accuracy, m.precision, s.precision, m.recall, s.recall, m.f1, s.f1
            );
        }
        Command::CompareScales => {
            let c = stages::compare(cfg, wd)?;
            println!("{}", wd.path(stages::COMPARISON).display());
            println!("{:<12} {:>15} {:>15} {:>15} {:>15}", "case", "accuracy", "precision", "recall", "f1");
            for case in &c.cases {
                let (m, s) = (&case.mean, &case.std);
                println!(
                    "{:<12} {:>7.3} ± {:.3} {:>7.3} ± {:.3} {:>7.3} ± {:.3} {:>7.3} ± {:.3}",
                    case.name, m.accuracy, s.accuracy, m.precision, s.precision, m.recall, s.recall, m.f1, s.f1
                );
            }
        }
        Command::Report => {
            println!("{}", stages::report(wd)?.display());
        }
        Command::Synth { .. } | Command::ValidateConfig { .. } => unreachable!("handled before locking"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
