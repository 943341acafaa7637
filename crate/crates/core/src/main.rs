fn main() {
    std::process::exit(shadowproj::cli::main_with_args(std::env::args_os()));
}
