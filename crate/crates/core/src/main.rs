fn main() {
    std::process::exit(corrmac::cli::main_with_args(std::env::args_os()));
}
