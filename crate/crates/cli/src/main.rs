fn main() {
    std::process::exit(hesc_cli::run());
}
