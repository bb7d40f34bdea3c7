fn main() {
    std::process::exit(trauma_triage::cli::run(std::env::args_os()));
}
