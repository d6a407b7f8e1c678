fn main() -> std::process::ExitCode {
    bqpref::cli::run(std::env::args_os())
}
