fn main() {
    std::process::exit(spinqudit::cli::main_with_args(std::env::args_os()));
}
