use std::process;

fn main() {
    process::exit(pigeonsim::cli::run(std::env::args_os()));
}
