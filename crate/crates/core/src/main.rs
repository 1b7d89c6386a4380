fn main() {
    std::process::exit(cascadesim::cli::run(std::env::args_os()));
}
