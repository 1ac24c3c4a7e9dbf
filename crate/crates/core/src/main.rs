fn main() {
    std::process::exit(symcone::cli::main());
}
