fn main() {
    std::process::exit(crossent::cli::run());
}
