fn main() {
    std::process::exit(flowdiff::cli::run(std::env::args_os()));
}
