use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use clembed::cli::{run, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = RunConfig::parse();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let status = run(&config, &mut out).and_then(|()| out.flush().map_err(Into::into));
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clembed: {e}");
            ExitCode::from(1)
        }
    }
}
