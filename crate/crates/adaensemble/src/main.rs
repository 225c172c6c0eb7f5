fn main() {
    std::process::exit(adaensemble::cli_main());
}
