fn main() {
    std::process::exit(plis::cli::run(std::env::args_os()));
}
