fn main() {
    std::process::exit(terzaghi_deeponet::cli::run(std::env::args_os()));
}
