use clap::Parser;
use solitonkit::cli::args::Cli;
use solitonkit::cli::{run, Status};

fn main() {
    let cli = Cli::parse();
    let prepared = cli.config().and_then(|cfg| Ok((cfg, cli.command()?)));
    let (config, command) = match prepared {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(Status::of_error(&e).exit_code());
        }
    };
    let report = run(&command, &config);
    for r in &report.results {
        println!("{}", r.message);
    }
    std::process::exit(report.status().exit_code());
}
