fn main() {
    std::process::exit(metawisdom::cli::run(std::env::args_os()));
}
