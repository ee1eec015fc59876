fn main() {
    std::process::exit(fpdgm::cli::run(std::env::args_os()));
}
