fn main() {
    std::process::exit(idxray::cli::main());
}
