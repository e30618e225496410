fn main() {
    std::process::exit(catnet::cli::main_with_args(std::env::args_os()));
}
