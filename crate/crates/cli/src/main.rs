fn main() {
    std::process::exit(dirtrace_cli::run(std::env::args_os()));
}
