fn main() {
    std::process::exit(amsvrg::cli::main());
}
