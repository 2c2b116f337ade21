fn main() {
    let code = wassreg::cli::run(std::env::args_os());
    std::process::exit(code);
}
