fn main() {
    std::process::exit(fleetsim::cli::main_with_args(std::env::args_os()));
}
