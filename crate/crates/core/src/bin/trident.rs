fn main() -> std::process::ExitCode {
    trident_nilpotent::cli::main()
}
