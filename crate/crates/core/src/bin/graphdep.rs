fn main() {
    std::process::exit(graphdep::cli::run(std::env::args_os()));
}
