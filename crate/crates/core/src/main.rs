fn main() {
    std::process::exit(powertsp::cli::run_command(std::env::args_os()));
}
