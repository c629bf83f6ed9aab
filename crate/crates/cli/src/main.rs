use clap::Parser;
use esu_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(out) => {
            for p in out.tables.iter().chain(out.record.iter()) {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("esu: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
