fn main() {
    std::process::exit(tiltgait::cli::run_cli(std::env::args_os()));
}
