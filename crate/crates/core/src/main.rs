use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use ckdist::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = cli::node_budget_from_env().and_then(|budget| {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        cli::run(args, budget, &mut out)?;
        out.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
