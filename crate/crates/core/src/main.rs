fn main() {
    std::process::exit(ghzsim::cli::run(std::env::args_os()));
}
