fn main() {
    std::process::exit(snls_lab::harness::cli::run(std::env::args_os()));
}
