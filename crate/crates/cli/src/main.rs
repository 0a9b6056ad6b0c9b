fn main() {
    std::process::exit(empbridge_cli::main_with_args(std::env::args_os()));
}
