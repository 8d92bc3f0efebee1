use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stablesemi::scenarios::ScenarioConfig;
use stablesemi::{Error, Execution};

#[derive(Parser)]
#[command(name = "stablesemi", version, about = "Stability experiments for unitary and isometric semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory for CSV tables and the JSON summary.
        #[arg(long, env = "STABLESEMI_OUT", default_value = "out")]
        out: PathBuf,
        /// Override the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
        /// Run every loop on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, out, seed, quiet, sequential } = cli.command;
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let result = ScenarioConfig::load(&config).and_then(|mut cfg| {
        if let Some(s) = seed {
            cfg.set_seed(s);
        }
        let output = cfg.run(exec)?;
        output.write(&out)?;
        Ok(output)
    });
    match result {
        Ok(output) => {
            let s = &output.summary;
            if !quiet {
                for (name, ok) in &s.checks {
                    println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
                }
                println!(
                    "{}: {} -> {}",
                    s.scenario,
                    if s.pass { "all bounds held" } else { "VIOLATION" },
                    out.display()
                );
            }
            if s.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            match &e {
                Error::Config(_) => eprintln!("stablesemi: {e}"),
                _ => eprintln!("stablesemi: run failed: {e}"),
            }
            ExitCode::from(2)
        }
    }
}
