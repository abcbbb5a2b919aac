fn main() -> std::process::ExitCode {
    fgl::main_with_args(std::env::args_os())
}
