fn main() {
    std::process::exit(ftoc_cli::run_cli(std::env::args_os()));
}
