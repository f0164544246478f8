use std::process;

fn main() {
    process::exit(pandora_core::cli::run());
}
