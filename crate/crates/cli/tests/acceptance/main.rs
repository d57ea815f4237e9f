//! Acceptance criteria of the engine, one PASS/FAIL line each.

mod calibration;
mod cka;
mod determinism;
mod eu;
mod frequency;
mod hardness;
mod manifold;
mod oracles;

use std::process::ExitCode;
use std::time::{Duration, Instant};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Records named sub-checks; the verdict passes when all of them do.
#[derive(Default)]
pub struct Checks {
    parts: Vec<(String, bool)>,
}

impl Checks {
    pub fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.parts.push((name.into(), ok));
    }

    pub fn verdict(self) -> Verdict {
        let pass = self.parts.iter().all(|(_, ok)| *ok);
        let failed: Vec<&str> = self.parts.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect();
        let detail = if failed.is_empty() {
            self.parts.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join("; ")
        } else {
            let passed: Vec<&str> = self.parts.iter().filter(|(_, ok)| *ok).map(|(n, _)| n.as_str()).collect();
            format!("failed: {} | passed: {}", failed.join("; "), passed.join("; "))
        };
        Verdict { pass, detail }
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("formula oracles", Some(Duration::from_secs(60)), oracles::run),
        ("manifold recovery", Some(Duration::from_secs(120)), manifold::run),
        ("frequency bands", Some(Duration::from_secs(30)), frequency::run),
        ("calibration and alignment", Some(Duration::from_secs(120)), calibration::run),
        ("epistemic estimators", None, eu::run),
        ("cka", None, cka::run),
        ("cli determinism", None, determinism::run),
        ("hardness ranking", None, hardness::run),
    ];
    let mut passed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let ok = v.pass && in_time;
        passed += usize::from(ok);
        let timing = match budget {
            Some(b) if !in_time => format!("{:.1} s, over the {} s budget", elapsed.as_secs_f64(), b.as_secs()),
            _ => format!("{:.1} s", elapsed.as_secs_f64()),
        };
        println!("{} {name}: {} [{timing}]", if ok { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("{passed}/{} acceptance criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(a.abs()) + 1e-12
}
