fn main() {
    std::process::exit(shiftra::cli::run());
}
