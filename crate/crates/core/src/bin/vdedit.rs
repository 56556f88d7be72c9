fn main() {
    std::process::exit(vdedit::cli::main_with_args(std::env::args_os()));
}
