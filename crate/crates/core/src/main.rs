fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(qc_horizon::cli::run_command(&args));
}
