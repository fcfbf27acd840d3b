fn main() {
    std::process::exit(xray_cluster_cli::run(std::env::args_os()));
}
