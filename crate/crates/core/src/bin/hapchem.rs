fn main() {
    std::process::exit(hapchem::harness::cli(std::env::args_os()));
}
