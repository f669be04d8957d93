fn main() {
    std::process::exit(aaslab::cli::run(std::env::args_os()));
}
