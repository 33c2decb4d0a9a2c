fn main() {
    std::process::exit(xrr_cli::run(std::env::args_os()));
}
