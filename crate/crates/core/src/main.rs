fn main() {
    std::process::exit(mems_fold::cli::main_exit_code());
}
