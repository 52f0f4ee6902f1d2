fn main() {
    std::process::exit(basisrisk_cli::main_with_args(std::env::args_os()));
}
