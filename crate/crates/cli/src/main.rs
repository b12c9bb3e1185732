fn main() {
    std::process::exit(isac_cli::app::main_with_args(std::env::args_os()));
}
