fn main() -> std::process::ExitCode {
    seaclone::cli::main()
}
