fn main() {
    std::process::exit(metric_proto::harness::cli::run_cli(std::env::args_os()));
}
