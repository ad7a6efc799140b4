fn main() {
    std::process::exit(xplain::cli::main_with(std::env::args_os()));
}
