fn main() {
    std::process::exit(eegtriage::cli::main_with_args(std::env::args_os()));
}
