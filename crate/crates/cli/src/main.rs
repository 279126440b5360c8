//! `pdov`: batch front end over `pdov-core`.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 domain error,
//! 3 precision error, 4 importance-sampling degeneracy under `--strict`,
//! 5 a `verify` suite reported failures.

mod cli;
mod commands;
mod output;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use pdov_core::PdovError;

use cli::Cli;
use output::{sha256_hex, OutputChecksum, RunManifest};

const EXIT_USAGE: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_PRECISION: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

fn exit_code(e: &PdovError) -> u8 {
    match e {
        PdovError::Domain(_) | PdovError::Pathological(_) => EXIT_DOMAIN,
        PdovError::Precision(_) => EXIT_PRECISION,
    }
}

/// Applies `PDOV_THREADS`; returns the effective pool size.
fn configure_threads() -> Result<usize, String> {
    if let Ok(v) = std::env::var("PDOV_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("PDOV_THREADS must be a positive integer, got '{v}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(rayon::current_num_threads())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let threads = match configure_threads() {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let rendered = match commands::run(&cli.command, &cli.global) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };

    let bytes = rendered.body.as_bytes();
    let written = match &cli.global.out {
        Some(path) => fs::write(path, bytes).map(|_| path.display().to_string()),
        None => io::stdout().lock().write_all(bytes).map(|_| "-".to_string()),
    };
    let path = match written {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    if let Some(manifest_path) = &cli.global.manifest {
        let manifest = RunManifest {
            tool: "pdov",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            parameters: serde_json::to_value(&cli.command).expect("arguments serialize"),
            seed: cli.global.seed,
            threads,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: vec![OutputChecksum { path, sha256: sha256_hex(bytes), bytes: bytes.len() }],
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        if let Err(e) = fs::write(manifest_path, text) {
            eprintln!("error: cannot write manifest: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }

    if let Some(msg) = &rendered.degenerate {
        eprintln!("warning: {msg}");
        if cli.global.strict {
            return ExitCode::from(EXIT_DEGENERATE);
        }
    }
    if rendered.failed_checks > 0 {
        eprintln!("verify: {} check(s) failed", rendered.failed_checks);
        return ExitCode::from(EXIT_VERIFY_FAILED);
    }
    ExitCode::SUCCESS
}
