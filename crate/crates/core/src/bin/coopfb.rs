fn main() {
    std::process::exit(coopfb::cli::run(std::env::args_os()));
}
