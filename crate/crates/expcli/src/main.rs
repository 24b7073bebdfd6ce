fn main() {
    std::process::exit(expcli::cli_main(std::env::args_os()));
}
