fn main() {
    std::process::exit(ackplan::cli::run(std::env::args_os()));
}
