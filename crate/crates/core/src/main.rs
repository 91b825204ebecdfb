use clap::Parser;

fn main() {
    let args = twotime::cli::Args::parse();
    std::process::exit(twotime::cli::main_with(&args));
}
