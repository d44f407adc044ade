fn main() {
    std::process::exit(abdiv_cli::run());
}
