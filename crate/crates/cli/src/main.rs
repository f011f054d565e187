fn main() {
    std::process::exit(qctl_cli::run_main(std::env::args_os().skip(1)));
}
