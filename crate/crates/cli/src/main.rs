fn main() {
    std::process::exit(lagsynth_cli::run(std::env::args_os()));
}
