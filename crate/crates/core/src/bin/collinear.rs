fn main() {
    std::process::exit(collinear_core::cli::main_with_args(std::env::args_os()));
}
