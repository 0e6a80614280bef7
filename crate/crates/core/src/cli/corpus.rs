//! Builtin problem definitions.

use super::{CliError, Manifest};

const CORPUS: [(&str, &str); 6] = [
    ("oscillator-scrambled", include_str!("../../corpus/oscillator-scrambled.toml")),
    ("timedep-scrambled", include_str!("../../corpus/timedep-scrambled.toml")),
    ("quadratic-demo", include_str!("../../corpus/quadratic-demo.toml")),
    ("cubic-demo", include_str!("../../corpus/cubic-demo.toml")),
    ("beta-rescaled", include_str!("../../corpus/beta-rescaled.toml")),
    ("routh-abelian", include_str!("../../corpus/routh-abelian.toml")),
];

pub fn corpus_list() -> Vec<&'static str> {
    CORPUS.iter().map(|(n, _)| *n).collect()
}

/// The manifest text of a builtin instance.
pub fn corpus_source(name: &str) -> Result<&'static str, CliError> {
    CORPUS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| CliError::CorpusNotFound(name.to_string()))
}

pub fn corpus_get(name: &str) -> Result<Manifest, CliError> {
    Manifest::from_toml(corpus_source(name)?)
}
