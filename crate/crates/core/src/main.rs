fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = mgsim::cli::init_threads() {
        eprintln!("error: {e}");
        std::process::exit(mgsim::cli::EXIT_USAGE);
    }
    std::process::exit(mgsim::cli::main(std::env::args_os()));
}
