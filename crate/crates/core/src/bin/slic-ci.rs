fn main() {
    std::process::exit(slic::cli::main_exit());
}
