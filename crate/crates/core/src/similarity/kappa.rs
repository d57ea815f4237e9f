use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappa {
    pub value: f64,
    pub observed: f64,
    pub expected: f64,
    /// Chance agreement is 1, so κ is undefined; `value` is reported as 0.
    pub degenerate: bool,
}

/// Cohen's κ between two correctness vectors.
pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<Kappa> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("kappa inputs differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InsufficientData("kappa of empty vectors".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pa = a.iter().filter(|&&x| x).count() as f64 / n;
    let pb = b.iter().filter(|&&x| x).count() as f64 / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    if expected >= 1.0 {
        return Ok(Kappa {
            value: 0.0,
            observed: agree,
            expected,
            degenerate: true,
        });
    }
    Ok(Kappa {
        value: (agree - expected) / (1.0 - expected),
        observed: agree,
        expected,
        degenerate: false,
    })
}
