use clap::Parser;

fn main() {
    let cli = subshift_cli::Cli::parse();
    let mut out = std::io::stdout();
    std::process::exit(subshift_cli::run(&cli, &mut out));
}
