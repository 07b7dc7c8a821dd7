fn main() {
    std::process::exit(prgbm::cli::run(std::env::args_os()));
}
