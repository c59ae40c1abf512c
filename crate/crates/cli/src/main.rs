fn main() {
    std::process::exit(tsch_cli::main_with_args(std::env::args_os()));
}
