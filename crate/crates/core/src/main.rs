fn main() {
    std::process::exit(delayfront_core::cli::main_with_args(std::env::args_os()));
}
