fn main() {
    std::process::exit(robust_ofo_bench::run(std::env::args_os()));
}
