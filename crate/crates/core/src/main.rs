fn main() {
    std::process::exit(geolatent::cli::run(std::env::args_os()));
}
