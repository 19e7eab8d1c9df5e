use clap::Parser;

fn main() {
    hcpinn_cli::init_logging();
    let cli = hcpinn_cli::Cli::parse();
    let code = match hcpinn_cli::execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
