fn main() {
    std::process::exit(rigkit_cli::run(std::env::args_os()));
}
