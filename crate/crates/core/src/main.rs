fn main() {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .init();
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr();
    let code = rulemine::cli::run_from_args(std::env::args_os(), &mut stdout, &mut stderr);
    std::process::exit(code);
}
