fn main() {
    std::process::exit(thermo_cli::run(std::env::args_os()));
}
