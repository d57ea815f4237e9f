use serde::Serialize;
use sha2::{Digest, Sha256};

use cuelens_core::ENGINE_VERSION;

/// Echo of one invocation: everything that determines the outputs. The
/// output directory and thread count are excluded.
#[derive(Debug, Serialize)]
pub struct AnalysisConfig<'a, A: Serialize> {
    pub subcommand: &'a str,
    pub engine_version: &'a str,
    pub parameters: &'a A,
}

impl<'a, A: Serialize> AnalysisConfig<'a, A> {
    pub fn new(subcommand: &'a str, parameters: &'a A) -> Self {
        Self {
            subcommand,
            engine_version: ENGINE_VERSION,
            parameters,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
