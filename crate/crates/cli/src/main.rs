fn main() {
    std::process::exit(becvortex_cli::run(std::env::args().collect()));
}
