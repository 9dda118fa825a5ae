use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = fluctwave_cli::Cli::parse();
    match fluctwave_cli::run(cli) {
        Ok(outcome) => {
            for name in &outcome.outputs {
                println!("{}", outcome.out_dir.join(name).display());
            }
            if !outcome.passed {
                eprintln!("{}: one or more checks failed", outcome.command);
                std::process::exit(1);
            }
        }
        Err(e) => {
            eprintln!("fluctwave: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
