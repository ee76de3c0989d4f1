fn main() {
    std::process::exit(starcalc::cli::run(std::env::args_os()));
}
