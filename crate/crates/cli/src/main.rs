fn main() {
    std::process::exit(pshkit::run(std::env::args_os()));
}
