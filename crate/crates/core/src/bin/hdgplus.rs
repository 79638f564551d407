fn main() {
    if let Err(e) = hdgplus::cli::init_threads() {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
    let code = hdgplus::cli::main_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
