fn main() {
    std::process::exit(wbary::cli::run(std::env::args_os()));
}
