fn main() {
    std::process::exit(nonvanishing::cli::main_entry());
}
