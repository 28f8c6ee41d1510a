fn main() {
    std::process::exit(robust_bcs::cli::cli_main(std::env::args_os()));
}
