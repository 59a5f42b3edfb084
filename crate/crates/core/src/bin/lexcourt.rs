fn main() {
    std::process::exit(lexcourt::cli::main());
}
