fn main() {
    std::process::exit(nash_elim_cli::run(std::env::args_os()));
}
