fn main() {
    std::process::exit(lrsd::cli::run_cli(std::env::args_os()));
}
