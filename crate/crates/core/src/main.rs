fn main() {
    std::process::exit(klprox::cli::main_with_args(std::env::args_os()));
}
