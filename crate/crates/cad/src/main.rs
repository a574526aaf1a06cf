fn main() {
    std::process::exit(lesion_cad::cli::main_with_args(std::env::args_os()));
}
