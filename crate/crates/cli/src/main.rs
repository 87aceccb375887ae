fn main() {
    std::process::exit(entropic_tail_cli::run(std::env::args_os()));
}
