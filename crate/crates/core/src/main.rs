fn main() {
    std::process::exit(requisites::cli::run(std::env::args_os()));
}
