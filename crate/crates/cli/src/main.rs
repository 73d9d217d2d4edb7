use clap::error::ErrorKind;
use clap::Parser;
use tinysocp_cli::{run, Cli, EXIT_INPUT, EXIT_OK};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            e.print().ok();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                // usage errors are input errors; 2 is reserved for the iteration cap
                _ => EXIT_INPUT,
            };
            std::process::exit(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let code = match run(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    };
    std::process::exit(code);
}
