//! Thin binary over [`trimer::cli`]; all logic lives in the library.

fn main() {
    std::process::exit(trimer::cli::run(std::env::args_os()));
}
