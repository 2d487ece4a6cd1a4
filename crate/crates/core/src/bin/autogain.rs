fn main() -> std::process::ExitCode {
    autogain::cli::main()
}
