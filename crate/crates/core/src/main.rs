fn main() {
    std::process::exit(geolift::cli::run(std::env::args_os()));
}
