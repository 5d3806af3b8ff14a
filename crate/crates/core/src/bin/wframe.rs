fn main() {
    std::process::exit(wframe::cli::run(std::env::args_os()));
}
