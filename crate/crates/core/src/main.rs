fn main() {
    std::process::exit(scenesim::cli::run(std::env::args_os()));
}
