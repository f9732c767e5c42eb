fn main() {
    std::process::exit(swe_ldp::run(std::env::args_os()));
}
