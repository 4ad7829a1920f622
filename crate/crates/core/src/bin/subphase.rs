fn main() {
    std::process::exit(subphase::cli::run(std::env::args_os()));
}
