fn main() {
    std::process::exit(bqcd::cli::main(std::env::args_os()));
}
