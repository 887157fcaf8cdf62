//! Prints the canonical form of each `.pde` file given on the command line.

fn main() {
    for path in std::env::args().skip(1) {
        let text = std::fs::read_to_string(&path).expect("readable file");
        match jetcalc::syslang::parse(&text) {
            Ok(f) => print!("{}", jetcalc::syslang::print(&f)),
            Err(e) => eprintln!("{path}:{e}"),
        }
    }
}
