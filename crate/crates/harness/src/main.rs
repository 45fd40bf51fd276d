fn main() {
    std::process::exit(optlab::cli::cli(std::env::args()));
}
