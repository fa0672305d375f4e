fn main() {
    std::process::exit(nonlocal_spectrum::cli::run(std::env::args_os()));
}
