fn main() {
    std::process::exit(halo::cli::main_with(std::env::args_os()));
}
