fn main() {
    std::process::exit(irc_lab::cli::main());
}
