fn main() {
    std::process::exit(switchstab_cli::run(std::env::args_os()));
}
