fn main() {
    std::process::exit(cheriot_core::campaign::cli::main_with(std::env::args_os()));
}
