fn main() {
    eprintln!("csd: not yet wired up");
    std::process::exit(2);
}
