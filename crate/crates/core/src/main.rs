fn main() {
    std::process::exit(corrected_ei::cli::main_with_args(std::env::args_os()));
}
