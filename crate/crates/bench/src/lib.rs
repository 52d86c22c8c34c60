//! Corpus access for the benchmarks.

use sizax::pipeline::load;
use sizax::Program;

pub const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/corpus");

pub fn source(name: &str) -> String {
    std::fs::read_to_string(format!("{CORPUS}/{name}.fp")).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn program(name: &str) -> Program {
    load(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[cfg(test)]
mod tests {
    #[test]
    fn corpus_loads() {
        for name in ["append", "reverse", "product", "tree"] {
            assert!(!super::program(name).functions.is_empty());
        }
    }
}
