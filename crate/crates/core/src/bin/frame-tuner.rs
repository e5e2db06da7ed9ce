fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FRAME_TUNER_LOG", "error"))
        .init();
    std::process::exit(frame_tuner::cli::main_exit_code());
}
