fn main() {
    std::process::exit(trajcurate::cli::dispatch(std::env::args_os()));
}
