fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(demix_cli::run(&argv));
}
