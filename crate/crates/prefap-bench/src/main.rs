use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use prefap::{Error, Result};
use prefap_bench::cli::{Cli, Command, CommonArgs};
use prefap_bench::report::{write_csv, write_json, BenchReport, OutputFormat};
use prefap_bench::runner::{run_ablation, run_join, run_verify};

// Exit codes: 0 ok, 1 verification mismatch, 2 bad flags, 3 IO/parse errors.
// Clap's own parse failures also exit with 2.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::EmptyFile { .. } => 3,
        _ => 2,
    }
}

fn emit(report: &BenchReport, common: &CommonArgs) -> Result<()> {
    let format: OutputFormat = common.format.into();
    let write_to = |out: &mut dyn Write| -> io::Result<()> {
        match format {
            OutputFormat::Json => write_json(report, out),
            OutputFormat::Csv => write_csv(report, out),
        }
    };
    match &common.out {
        Some(path) => {
            let file = File::create(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let mut writer = BufWriter::new(file);
            write_to(&mut writer).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            writer.flush().map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_to(&mut lock).map_err(|source| Error::Io {
                path: Path::new("<stdout>").to_path_buf(),
                source,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run(args) => {
            let ablation = args.ablate.unwrap_or_default();
            let spec = prefap_bench::cli::to_run_spec(&args.common, args.algo.into(), ablation)?;
            let report = run_join(&spec, args.significance, args.dump_results.as_deref())?;
            emit(&report, &args.common)?;
            Ok(0)
        }
        Command::Ablation(common) => {
            let spec = prefap_bench::cli::to_run_spec(
                &common,
                prefap::Algorithm::Prefap,
                prefap::Ablation::NONE,
            )?;
            let report = run_ablation(&spec)?;
            emit(&report, &common)?;
            Ok(0)
        }
        Command::Verify(args) => {
            let spec = prefap_bench::cli::to_run_spec(
                &args.common,
                args.algo.into(),
                prefap::Ablation::NONE,
            )?;
            let summary = run_verify(&spec)?;
            for line in &summary.lines {
                println!("{line}");
            }
            if summary.mismatches == 0 {
                println!("verify: all {} window run(s) match the oracle", summary.lines.len());
                Ok(0)
            } else {
                println!(
                    "verify: {} of {} window run(s) MISMATCHED",
                    summary.mismatches,
                    summary.lines.len()
                );
                Ok(1)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
