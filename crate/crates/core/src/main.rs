// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use photonlab::cli::{run_command, serve_port, Cli, CliError, Command, EXIT_FAILURE};

fn serve(port: Option<u16>, host: &str) -> Result<(), CliError> {
    let port = serve_port(port)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Failure(e.to_string()))?;
    eprintln!("serving on http://{host}:{port}");
    rt.block_on(photonlab::serve::serve(host, port))
        .map_err(|e| CliError::Failure(format!("{host}:{port}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { port, host } => serve(*port, host),
        other => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            run_command(other, &mut lock)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photonlab: {e}");
            let code = e.exit_code();
            ExitCode::from(u8::try_from(code).unwrap_or(EXIT_FAILURE as u8))
        }
    }
}
