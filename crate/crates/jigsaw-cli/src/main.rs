fn main() {
    std::process::exit(jigsaw_cli::cli_run(std::env::args_os()));
}
