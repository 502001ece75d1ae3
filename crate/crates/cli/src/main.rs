fn main() {
    std::process::exit(helmholtz_hp_cli::run(std::env::args_os()));
}
