fn main() {
    mflow::cli::init_logging();
    std::process::exit(mflow::cli::run(std::env::args_os()));
}
