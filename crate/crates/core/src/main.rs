use std::io::Write;

fn main() {
    let level = std::env::var("UPDTYPE_LOG").unwrap_or_else(|_| "off".into());
    env_logger::Builder::new().parse_filters(&level).target(env_logger::Target::Stderr).init();
    let (out, status) = updtype::cli::run(std::env::args_os());
    let _ = std::io::stdout().write_all(out.as_bytes());
    std::process::exit(status);
}
