fn main() {
    std::process::exit(nonlinq::cli::run(std::env::args_os()));
}
