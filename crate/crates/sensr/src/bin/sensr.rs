fn main() {
    std::process::exit(sensr::cli::main());
}
