use std::path::Path;
use std::process::ExitCode;

use seqest_cli::config::{parse_flag_tokens, ConfigError, ExperimentConfig};
use seqest_cli::experiment::{run_experiment, ExperimentError};
use seqest_cli::output::emit_csv;

const USAGE: &str = "\
usage:
  seqest run --experiment=<mse_vs_tau|mse_vs_k|ek_vs_tau|diagnostics>
             [--config=FILE] [--key=value ...] --out=FILE
  seqest diagnostics [--config=FILE] [--key=value ...] --out=FILE

Flags mirror the config-file keys (n, mu0, tau0_sq, a, b, alpha, epsilon,
trials, seed, k_sweep, out); flags override file values. The environment
variable SEQEST_THREADS sets the worker-thread count (results are identical
for any value).

exit codes: 0 success, 1 configuration error, 2 numerical or I/O failure.";

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run() -> Result<(), ExperimentError> {
    if let Ok(value) = std::env::var("SEQEST_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            // Ignore failure: the pool may already be initialized.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }

    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return Err(ConfigError::Constraint("missing subcommand".into()).into());
    };
    if command == "--help" || command == "-h" || command == "help" {
        println!("{USAGE}");
        return Ok(());
    }

    let forced_kind = match command.as_str() {
        "run" => None,
        "diagnostics" => Some("diagnostics"),
        other => {
            eprintln!("{USAGE}");
            return Err(
                ConfigError::Constraint(format!("unknown subcommand `{other}`")).into(),
            );
        }
    };

    let mut flags = parse_flag_tokens(&args[1..])?;
    let mut file_text: Option<String> = None;
    flags.retain(|(key, value)| {
        if key == "config" {
            file_text = Some(value.clone());
            false
        } else {
            true
        }
    });
    let file_contents = match &file_text {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?),
        None => None,
    };
    if let Some(kind) = forced_kind {
        flags.push(("experiment".to_string(), kind.to_string()));
    }

    let config = ExperimentConfig::from_sources(file_contents.as_deref(), &flags)?;
    let out = config.out.clone().ok_or(ConfigError::MissingOutput)?;

    let table = run_experiment(&config)?;
    emit_csv(&table, Path::new(&out))?;

    for note in &table.notes {
        println!("# {note}");
    }
    println!("wrote {out} ({} rows)", table.rows.len());
    Ok(())
}
