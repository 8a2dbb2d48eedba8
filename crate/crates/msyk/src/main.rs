fn main() {
    std::process::exit(msyk::cli::run(std::env::args_os()));
}
