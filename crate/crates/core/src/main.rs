fn main() {
    std::process::exit(adeqnn::cli::run(std::env::args_os()));
}
