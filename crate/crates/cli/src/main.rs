fn main() {
    std::process::exit(pnp_stability_cli::run(std::env::args_os()));
}
