fn main() {
    std::process::exit(flipkljn_cli::run(std::env::args_os()));
}
