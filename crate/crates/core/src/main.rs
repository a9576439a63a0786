fn main() {
    std::process::exit(polarlab::cli::run_cli(std::env::args_os()))
}
