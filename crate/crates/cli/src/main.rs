fn main() {
    std::process::exit(stackptr_cli::run(std::env::args_os()));
}
