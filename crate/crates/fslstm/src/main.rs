use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use fslstm::commands::{cmd_evaluate, cmd_ingest, cmd_report, cmd_simulate, cmd_train};
use fslstm::config::KEYS;
use fslstm::{CliError, RunConfig};

const SUBCOMMANDS: [(&str, &str); 5] = [
    ("ingest", "select gauges and write the dataset manifest"),
    (
        "train",
        "train on the manifest gauges and write a checkpoint",
    ),
    ("evaluate", "score a checkpoint on the test period"),
    ("simulate", "generate synthetic fast/slow catchments"),
    ("report", "summarise a scores table"),
];

fn run_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("PATH")
        .value_parser(clap::value_parser!(PathBuf))
        .help("key = value configuration file")];
    for (key, help) in KEYS {
        let arg = Arg::new(*key).long(*key).help(*help);
        args.push(if *key == "deterministic" {
            arg.action(ArgAction::SetTrue)
        } else {
            arg.value_name("VALUE")
        });
    }
    args
}

fn cli() -> Command {
    let mut cmd = Command::new("fslstm")
        .about("Mass-conserving rainfall-runoff models: ingest, train, evaluate, simulate, report")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(name).about(about).args(run_args()));
    }
    cmd
}

fn resolve(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut config = match m.get_one::<PathBuf>("config") {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, _) in KEYS {
        if *key == "deterministic" {
            if m.get_flag(key) {
                config.set(key, "true")?;
            }
        } else if let Some(v) = m.get_one::<String>(key) {
            config.set(key, v)?;
        }
    }
    Ok(config)
}

fn run(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let config = resolve(m)?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| {
                CliError::Config(format!("cannot start {} threads: {e}", config.threads))
            })?;
    }
    match name {
        "ingest" => {
            let out = cmd_ingest(&config)?;
            println!("{} gauges -> {}", out.entries.len(), out.manifest.display());
        }
        "train" => {
            let out = cmd_train(&config)?;
            println!(
                "epoch {} kept -> {}",
                out.report.checkpoint.epoch,
                out.checkpoint.display()
            );
        }
        "evaluate" => {
            let out = cmd_evaluate(&config)?;
            print_summary(&out.summary);
        }
        "simulate" => {
            for path in cmd_simulate(&config)? {
                println!("{}", path.display());
            }
        }
        "report" => print_summary(&cmd_report(&config)?),
        _ => unreachable!("clap rejects unknown subcommands"),
    }
    Ok(())
}

fn print_summary(summary: &fslstm_core::metrics::Summary) {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    println!(
        "{:<12} {:>10} {:>10} {:>8} {:>10}",
        "metric", "mean", "sd", "defined", "within25"
    );
    for m in &summary.metrics {
        println!(
            "{:<12} {:>10} {:>10} {:>8} {:>10}",
            m.metric.column(),
            cell(m.mean),
            cell(m.sd),
            m.defined,
            cell(m.within_tolerance)
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
