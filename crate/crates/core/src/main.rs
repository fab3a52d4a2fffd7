fn main() {
    std::process::exit(maskgrid::cli::run(std::env::args_os()));
}
