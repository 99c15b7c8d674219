fn main() {
    std::process::exit(hgsmc::cli::run(std::env::args_os()));
}
