fn main() {
    std::process::exit(ap3_core::cli::main_entry());
}
