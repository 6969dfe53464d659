//! `minir script.R`: runs a script with the bundled interpreter, standing in for `Rscript`.

fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(minir::run_cli(&args));
}
