fn main() {
    std::process::exit(impulse_iqc::cli::run(std::env::args_os()));
}
