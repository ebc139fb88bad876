fn main() {
    std::process::exit(omvid::cli::main_with_args(std::env::args_os()));
}
