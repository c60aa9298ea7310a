fn main() {
    std::process::exit(dynbt::cli::run(std::env::args_os()));
}
