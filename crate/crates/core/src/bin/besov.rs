fn main() {
    std::process::exit(besov_classify::cli::main_with_args(std::env::args_os()));
}
