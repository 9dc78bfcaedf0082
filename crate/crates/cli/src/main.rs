fn main() {
    std::process::exit(demguard::run(std::env::args_os()));
}
