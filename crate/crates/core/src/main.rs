fn main() -> std::process::ExitCode {
    lfmhd::cli::main()
}
