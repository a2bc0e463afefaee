fn main() {
    if let Err(e) = beamtrack::cli::run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
