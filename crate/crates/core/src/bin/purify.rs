fn main() {
    std::process::exit(purification::cli::run(std::env::args_os()));
}
