fn main() {
    std::process::exit(dimer_vqt::cli::run(std::env::args_os()));
}
