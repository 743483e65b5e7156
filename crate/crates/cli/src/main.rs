use clap::Parser;

fn main() {
    let cli = flatsurf_cli::Cli::parse();
    let outcome = flatsurf_cli::run(cli);
    print!("{}", outcome.text);
    std::process::exit(outcome.code);
}
