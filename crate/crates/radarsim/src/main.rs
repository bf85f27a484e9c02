fn main() {
    std::process::exit(radarsim::cli::main_with_args(std::env::args().collect()));
}
