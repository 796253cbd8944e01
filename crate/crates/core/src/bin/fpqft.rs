fn main() {
    std::process::exit(fpqft::cli::main_with_args(std::env::args_os()));
}
