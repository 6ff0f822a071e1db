fn main() {
    std::process::exit(fraclayer_cli::main_with_args(std::env::args_os()));
}
