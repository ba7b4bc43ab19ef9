fn main() {
    std::process::exit(hyperlyap::cli::run_main());
}
