fn main() {
    std::process::exit(cochain_flow::cli::cli_main(std::env::args().collect()));
}
