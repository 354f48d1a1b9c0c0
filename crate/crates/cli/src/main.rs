use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use meqc_core::harness::{
    emit, load_config, prepare_policy, run_jobs, run_with_policy, sweep, thread_cap, Format,
};
use meqc_core::{ConfigError, ExperimentConfig, IoError, Policy, PolicyKind, RunSummary};

#[derive(Parser)]
#[command(
    name = "meqc-sim",
    version,
    about = "Hybrid edge-quantum task offloading simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on every seed and write per-slot records plus a summary.
    Run(RunArgs),
    /// Vary one numeric config parameter across policies and seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Evaluation horizon in slots.
    #[arg(long, value_name = "N")]
    slots: Option<usize>,
    /// World seed; repeat for several runs.
    #[arg(long = "seed", value_name = "S")]
    seeds: Vec<u64>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "csv|jsonl", default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Policy name; overrides `policy.name` from the config.
    #[arg(long, value_name = "NAME")]
    policy: Option<PolicyKind>,
    /// Also write each trained DQN network as `dqn_seed<S>.bin`.
    #[arg(long)]
    save_dqn: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Policy to include; repeat for several. Defaults to the config's sweep
    /// policies, then to `policy.name`.
    #[arg(long = "policy", value_name = "NAME")]
    policies: Vec<PolicyKind>,
    /// Dotted config path to vary, e.g. `dpp.delta`.
    #[arg(long, value_name = "PATH")]
    param: Option<String>,
    /// Comma-separated values for `--param`.
    #[arg(long, value_name = "V,V,...", value_delimiter = ',')]
    values: Vec<f64>,
}

enum Failure {
    Config(ConfigError),
    Io(IoError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Io(e)
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = common.slots {
        cfg.horizon_slots = n;
    }
    if !common.seeds.is_empty() {
        cfg.seeds = common.seeds.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.common)?;
    if let Some(p) = args.policy {
        cfg.policy.name = p;
    }
    let kind = cfg.policy.name;
    let out = &args.common.out;
    let format = args.common.format;
    prepare_out(out)?;

    let results = run_jobs(
        &cfg.seeds,
        |&seed| -> Result<RunSummary, IoError> {
            let start = std::time::Instant::now();
            let mut policy = prepare_policy(&cfg, kind, seed);
            if let (true, Policy::Dqn(agent)) = (args.save_dqn, &policy) {
                agent
                    .online
                    .save(&out.join(format!("dqn_seed{seed}.bin")))?;
            }
            let (mut summary, records) = run_with_policy(&cfg, &mut policy, seed);
            if cfg.record_wall_time {
                summary.wall_time_s = start.elapsed().as_secs_f64();
            }
            let name = format!("records_{kind}_seed{seed}.{}", format.extension());
            emit(&records, &out.join(name), format)?;
            Ok(summary)
        },
        thread_cap(),
    );
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    emit(
        &summaries,
        &out.join(format!("summary_{kind}.{}", format.extension())),
        format,
    )?;
    for s in &summaries {
        println!(
            "{} seed {}: time-average cost {:.6e}",
            s.policy, s.seed, s.time_avg_wset
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let cfg = load(&args.common)?;
    let spec = cfg.sweep.clone();
    let Some(path) = args
        .param
        .clone()
        .or_else(|| spec.as_ref().map(|s| s.path.clone()))
    else {
        return Err(ConfigError::Invalid {
            key: "sweep".into(),
            reason: "give --param and --values or a `sweep` section in the config".into(),
        }
        .into());
    };
    let values = match &spec {
        _ if !args.values.is_empty() => args.values.clone(),
        Some(s) if s.path == path => s.values.clone(),
        _ => vec![],
    };
    if values.is_empty() {
        return Err(ConfigError::Invalid {
            key: "sweep.values".into(),
            reason: "at least one value is required".into(),
        }
        .into());
    }
    let config_policies = spec.map(|s| s.policies).unwrap_or_default();
    let policies = if !args.policies.is_empty() {
        args.policies.clone()
    } else if !config_policies.is_empty() {
        config_policies
    } else {
        vec![cfg.policy.name]
    };
    let rows = sweep(&cfg, &path, &values, &policies, &cfg.seeds)?;
    prepare_out(&args.common.out)?;
    let format = args.common.format;
    let file = args.common.out.join(format!(
        "sweep_{}.{}",
        path.replace('.', "_"),
        format.extension()
    ));
    emit(&rows, &file, format)?;
    println!("{} runs written to {}", rows.len(), file.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(2)
        }
    }
}
