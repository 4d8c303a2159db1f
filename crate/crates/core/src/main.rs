fn main() {
    std::process::exit(eg_active::cli::cli_main(std::env::args_os()));
}
