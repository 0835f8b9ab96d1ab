fn main() {
    std::process::exit(passive_bb84::cli::dispatch(std::env::args()));
}
