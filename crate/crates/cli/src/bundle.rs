//! Certificate files holding one or more certificates separated by `---` lines.

use certificate_engine::{parse_certificate, print_certificate, Certificate};
use eqsys_core::EquationSystem;

use crate::error::{CliError, Result};

pub const SEPARATOR: &str = "---";

pub fn print_bundle(certs: &[Certificate]) -> String {
    certs
        .iter()
        .map(print_certificate)
        .collect::<Vec<_>>()
        .join(&format!("{SEPARATOR}\n"))
}

pub fn split_bundle(src: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    for line in src.lines() {
        if line.trim() == SEPARATOR {
            parts.push(String::new());
        } else {
            let last = parts.last_mut().unwrap();
            last.push_str(line);
            last.push('\n');
        }
    }
    parts
}

pub fn parse_bundle(src: &str, sys: &EquationSystem) -> Result<Vec<Certificate>> {
    if src.lines().all(|l| {
        let l = l.trim();
        l.is_empty() || l.starts_with('#')
    }) {
        return Err(CliError::Input("certificate file is empty".into()));
    }
    split_bundle(src)
        .iter()
        .map(|part| parse_certificate(part, sys).map_err(CliError::from))
        .collect()
}
