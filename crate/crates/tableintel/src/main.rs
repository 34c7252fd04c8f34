fn main() {
    std::process::exit(tableintel::cli::main_with(std::env::args_os()));
}
