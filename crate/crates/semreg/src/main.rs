fn main() {
    std::process::exit(semreg::cli::run(std::env::args_os()));
}
