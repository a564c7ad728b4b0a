fn main() {
    std::process::exit(qsu2_cli::run(std::env::args_os()));
}
