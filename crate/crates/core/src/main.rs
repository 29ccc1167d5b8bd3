fn main() {
    std::process::exit(ctl::cli::run(std::env::args_os()));
}
