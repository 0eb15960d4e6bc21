fn main() {
    std::process::exit(faciesnet::cli::run(std::env::args_os()));
}
