fn main() {
    std::process::exit(cuspsum_cli::main_with_args(std::env::args_os()));
}
