fn main() {
    std::process::exit(vortexpacket::cli::dispatch(std::env::args_os()));
}
