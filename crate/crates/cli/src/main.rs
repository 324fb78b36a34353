use clap::Parser;

fn main() {
    let cli = ecs_cli::args::Cli::parse();
    if let Err(e) = ecs_cli::commands::run(cli) {
        eprintln!("ecs: {e}");
        std::process::exit(e.exit_code());
    }
}
