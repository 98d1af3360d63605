fn main() {
    std::process::exit(mbtrain_cli::run(std::env::args_os()));
}
