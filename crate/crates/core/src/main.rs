fn main() {
    env_logger::init();
    std::process::exit(gmmot::cli::run(std::env::args_os()));
}
