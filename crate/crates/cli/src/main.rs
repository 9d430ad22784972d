use crewlab_cli::{parse_cli, run_command, CliError, EXIT_ERROR, EXIT_OK};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = match parse_cli(&args) {
        Ok(config) => run_command(&config),
        Err(CliError::Help(text)) => {
            use std::io::Write;
            let _ = write!(std::io::stdout(), "{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
