fn main() {
    std::process::exit(proxlogit::cli::run(std::env::args_os()));
}
