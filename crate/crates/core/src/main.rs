fn main() -> std::process::ExitCode {
    stochint::cli::main()
}
