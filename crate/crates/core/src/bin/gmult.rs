fn main() {
    std::process::exit(gmult::cli::main_with(std::env::args_os()));
}
