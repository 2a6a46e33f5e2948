fn main() -> std::process::ExitCode {
    homdip::cli::main()
}
