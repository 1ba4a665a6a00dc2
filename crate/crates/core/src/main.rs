fn main() {
    std::process::exit(helmholtz_cauchy::cli::main_with_args(std::env::args_os()));
}
