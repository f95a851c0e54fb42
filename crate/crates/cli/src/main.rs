fn main() {
    std::process::exit(geodesica_cli::run(std::env::args_os()));
}
