fn main() {
    std::process::exit(cue_janossy::cli::run(std::env::args_os()));
}
