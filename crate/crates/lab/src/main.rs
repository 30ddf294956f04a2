fn main() {
    std::process::exit(frele_lab::cli::run(std::env::args()));
}
