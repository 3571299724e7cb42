use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deltarad::io::outcomes::Endpoint;
use deltarad::phantom::{write_phantom_cohort, PhantomError, PhantomSpec};
use deltarad::pipeline::{with_threads, Pipeline, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(
    name = "deltarad",
    version,
    about = "Delta-radiomics pipeline over MR fraction series"
)]
struct Cli {
    /// Worker threads for extraction and model fitting.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config value.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage in order.
    Run(Common),
    /// Extract features for all fractions.
    Extract(Common),
    /// Temporal and spatial stability gate.
    Stability(Common),
    /// Collinearity pruning of stable features.
    Prune(Common),
    /// Relative changes and trend tables.
    Delta(Common),
    /// Survival models, or a single KM split when --endpoint, --feature and
    /// --cutoff are given.
    Survive {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires_all = ["feature", "cutoff"])]
        endpoint: Option<Endpoint>,
        #[arg(long, requires_all = ["endpoint", "cutoff"])]
        feature: Option<String>,
        #[arg(long, requires_all = ["endpoint", "feature"])]
        cutoff: Option<f64>,
    },
    /// Render SVG figures from existing tables.
    Report(Common),
    /// Write a synthetic cohort with a matching config.json.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        /// Phantom spec (JSON). Defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        courses: Option<usize>,
    },
}

fn load_config(c: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => {
            let mut cfg = PipelineConfig::default();
            let cwd = std::env::current_dir().map_err(|e| PipelineError::Config(e.to_string()))?;
            cfg.resolve_relative(&cwd);
            cfg
        }
    };
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn stage(
    c: &Common,
    f: impl FnOnce(&mut Pipeline) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    let mut p = Pipeline::new(load_config(c)?)?;
    f(&mut p)?;
    println!("{}", p.out_dir().display());
    Ok(())
}

fn phantom_error(e: PhantomError) -> PipelineError {
    match e {
        PhantomError::InvalidSpec(_) | PhantomError::LesionExceedsGrid(_) => {
            PipelineError::Config(e.to_string())
        }
        other => PipelineError::Data {
            stage: "phantom",
            message: other.to_string(),
        },
    }
}

fn phantom(
    out: &Path,
    spec: Option<&Path>,
    seed: Option<u64>,
    courses: Option<usize>,
) -> Result<(), PipelineError> {
    let mut s = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<PhantomSpec>(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
        }
        None => PhantomSpec::default(),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(n) = courses {
        s.n_courses = n;
    }
    let cfg = PipelineConfig {
        manifest: "manifest.json".into(),
        outcomes: Some("outcomes.csv".into()),
        output_dir: "results".into(),
        ..Default::default()
    };
    let files = write_phantom_cohort(&s, out, &cfg.preprocess).map_err(phantom_error)?;
    let config_path = out.join("config.json");
    let text = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
    std::fs::write(&config_path, text).map_err(|source| PipelineError::Io {
        path: config_path.display().to_string(),
        source,
    })?;
    println!("{}", files.manifest.display());
    println!("{}", files.outcomes.display());
    println!("{}", config_path.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Run(c) => stage(&c, Pipeline::run_all),
        Command::Extract(c) => stage(&c, Pipeline::extract),
        Command::Stability(c) => stage(&c, Pipeline::stability),
        Command::Prune(c) => stage(&c, Pipeline::prune),
        Command::Delta(c) => stage(&c, Pipeline::delta),
        Command::Report(c) => stage(&c, Pipeline::report),
        Command::Survive {
            common,
            endpoint: Some(ep),
            feature: Some(f),
            cutoff: Some(cut),
        } => {
            let mut p = Pipeline::new(load_config(&common)?)?;
            let (name, lr) = p.km_split(ep, &f, cut)?;
            println!("{}", p.out_dir().join(name).display());
            println!("log-rank chi2 = {:.4}, p = {:.4}", lr.chi2, lr.p);
            Ok(())
        }
        Command::Survive { common, .. } => stage(&common, Pipeline::survive),
        Command::Phantom {
            out,
            spec,
            seed,
            courses,
        } => phantom(&out, spec.as_deref(), seed, courses),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match with_threads(cli.threads, move || dispatch(cli.command)).and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
