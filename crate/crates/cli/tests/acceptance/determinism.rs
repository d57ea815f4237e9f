use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::{Checks, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_cuelens");

fn cuelens(threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(BIN)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) => Ok(()),
        code => Err(format!("{args:?} exited {code:?}: {}", String::from_utf8_lossy(&out.stderr).trim())),
    }
}

/// Every non-plot file of a directory, by name.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !name.ends_with(".svg") && !name.ends_with(".svg.prov.json") {
            out.insert(name, fs::read(&path).unwrap());
        }
    }
    out
}

fn differing(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut names: Vec<&String> = a.keys().chain(b.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.get(*n) != b.get(*n))
        .cloned()
        .collect()
}

pub fn run() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let path = |p: &str| -> PathBuf { root.join(p) };
    let s = |p: &Path| p.to_string_lossy().into_owned();
    let mut checks = Checks::default();

    for (threads, dir) in [(1, "run_t1"), (8, "run_t8")] {
        if let Err(e) = cuelens(threads, &["synth", "--preset", "smoke", "--seed", "5", "--out", &s(&path(dir))]) {
            return Verdict::new(false, e);
        }
    }
    let bad = differing(&snapshot(&path("run_t1")), &snapshot(&path("run_t8")));
    checks.check(format!("synth ({} differing files)", bad.len()), bad.is_empty());
    if let Err(e) = cuelens(1, &["synth", "--preset", "smoke", "--seed", "6", "--out", &s(&path("other"))]) {
        return Verdict::new(false, e);
    }
    let manifest = s(&path("run_t1/manifest.json"));
    let other = s(&path("other/manifest.json"));

    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("sensitivity", vec!["--export-perturbed"]),
        ("hardness", vec![]),
        ("memorize", vec![]),
        ("dims", vec!["--pca-components", "2"]),
        ("similarity", vec!["--minibatch", "64", "--compare", &other]),
        ("uq", vec![]),
        ("saliency", vec!["--write-maps"]),
    ];
    for (cmd, extra) in &commands {
        let mut runs = Vec::new();
        for (k, threads) in [1usize, 8, 8].into_iter().enumerate() {
            let out = s(&path(&format!("{cmd}_{k}")));
            let mut args = vec![*cmd, "--manifest", &manifest, "--out", &out, "--seed", "3"];
            args.extend(extra.iter().copied());
            if let Err(e) = cuelens(threads, &args) {
                return Verdict::new(false, e);
            }
            runs.push(snapshot(Path::new(&out)));
        }
        let mut bad = differing(&runs[0], &runs[1]);
        bad.extend(differing(&runs[1], &runs[2]));
        checks.check(format!("{cmd} ({} files)", runs[0].len()), bad.is_empty() && !runs[0].is_empty());
    }

    let inputs: Vec<String> = commands.iter().map(|(c, _)| s(&path(&format!("{c}_0")))).collect();
    let mut reports = Vec::new();
    for (k, threads) in [1usize, 8].into_iter().enumerate() {
        let out = s(&path(&format!("report_{k}")));
        let mut args = vec!["report", "--out", &out];
        for i in &inputs {
            args.extend(["--from", i.as_str()]);
        }
        if let Err(e) = cuelens(threads, &args) {
            return Verdict::new(false, e);
        }
        reports.push(snapshot(Path::new(&out)));
    }
    checks.check("report", differing(&reports[0], &reports[1]).is_empty());
    let mut v = checks.verdict();
    v.detail = format!("threads 1 vs 8 vs 8: {}", v.detail);
    v
}
