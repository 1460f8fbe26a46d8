fn main() {
    std::process::exit(normcase::cli::main());
}
