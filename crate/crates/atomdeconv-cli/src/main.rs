fn main() {
    std::process::exit(atomdeconv_cli::run(std::env::args().collect()));
}
