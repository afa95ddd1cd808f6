fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FRACPME_LOG", "error")).init();
    std::process::exit(fracpme::cli::run(std::env::args_os()));
}
