fn main() {
    std::process::exit(psdcone_cli::commands::main_with(std::env::args_os()));
}
