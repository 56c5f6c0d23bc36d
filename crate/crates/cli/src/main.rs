fn main() {
    std::process::exit(noncollide_cli::run(std::env::args_os()));
}
