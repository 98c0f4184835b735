fn main() {
    std::process::exit(mprsel::cli::main_entry());
}
