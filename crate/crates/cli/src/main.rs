fn main() {
    std::process::exit(specedge_cli::run(std::env::args_os()));
}
