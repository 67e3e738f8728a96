fn main() {
    std::process::exit(mmhp_cli::run(std::env::args_os()));
}
