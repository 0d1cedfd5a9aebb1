fn main() {
    bubblereduce::cli::main()
}
