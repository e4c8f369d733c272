fn main() -> std::process::ExitCode {
    vmkdv::cli::main()
}
