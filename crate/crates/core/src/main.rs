fn main() {
    std::process::exit(lfpp::io::main_with_args(std::env::args_os()));
}
