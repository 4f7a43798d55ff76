fn main() {
    std::process::exit(uniest_cli::main_with(std::env::args_os()));
}
