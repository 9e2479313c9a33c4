fn main() {
    std::process::exit(nnfir::cli::run(std::env::args_os()));
}
