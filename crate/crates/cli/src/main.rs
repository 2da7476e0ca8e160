fn main() {
    std::process::exit(ion_autocorr_cli::run(std::env::args_os()));
}
