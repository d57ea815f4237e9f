use std::fmt::Write;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::Outcome;
use crate::cli::ReportArgs;
use crate::error::{CliError, CliResult};
use crate::output::Output;
use crate::svg;

const SECTIONS: [&str; 7] = ["sensitivity", "hardness", "memorization", "dims", "similarity", "uq", "saliency"];

#[derive(Serialize)]
struct Entry {
    source: String,
    section: &'static str,
    data: Value,
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("malformed {}: {e}", path.display())))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn fmt(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.4}"),
        None => "n/a".into(),
    }
}

fn suffix(count: usize) -> String {
    if count == 0 {
        String::new()
    } else {
        format!("_{count}")
    }
}

fn sensitivity_plot(d: &Value) -> String {
    let rows = d["per_manipulation"].as_array().cloned().unwrap_or_default();
    let labels: Vec<String> = rows.iter().map(|r| r["manipulation"].as_str().unwrap_or("?").to_string()).collect();
    let values: Vec<f64> = rows.iter().map(|r| f(&r["mean_djs"])).collect();
    let groups: Vec<usize> = labels
        .iter()
        .map(|l| match l.split(':').next() {
            Some("freq") => 0,
            Some("shape") => 1,
            Some("texture") => 2,
            _ => 3,
        })
        .collect();
    svg::bar_chart("Prediction sensitivity per manipulation", &labels, &values, &groups, "mean D_JS")
}

fn abstention_plot(d: &Value) -> String {
    let series: Vec<(String, Vec<(f64, f64)>)> = d["estimators"]
        .as_array()
        .map(|list| {
            list.iter()
                .map(|e| {
                    let q = e["curve"]["q"].as_array().cloned().unwrap_or_default();
                    let r = e["curve"]["ratio"].as_array().cloned().unwrap_or_default();
                    let pts = q.iter().zip(&r).map(|(q, r)| (f(q), f(r))).collect();
                    (e["estimator"].as_str().unwrap_or("?").to_string(), pts)
                })
                .collect()
        })
        .unwrap_or_default();
    svg::line_chart("Abstention curves", &series, "rejected (%)", "ECE_q / ECE_0")
}

fn cka_plot(m: &Value) -> String {
    let names = |key: &str| -> Vec<String> {
        m[key]
            .as_array()
            .map(|a| a.iter().map(|v| format!("L{}", v)).collect())
            .unwrap_or_default()
    };
    let values: Vec<Vec<f64>> = m["values"]
        .as_array()
        .map(|rows| rows.iter().map(|r| r.as_array().map(|c| c.iter().map(f).collect()).unwrap_or_default()).collect())
        .unwrap_or_default();
    svg::heatmap("Linear CKA between layers", &names("rows"), &names("cols"), &values)
}

fn summarize(md: &mut String, e: &Entry) {
    let d = &e.data;
    let _ = writeln!(md, "## {} ({})\n", e.section, e.source);
    match e.section {
        "sensitivity" => {
            for axis in ["frequency", "hvs"] {
                let labels = d[axis]["labels"].as_array().cloned().unwrap_or_default();
                let shares = d[axis]["shares"].as_array().cloned().unwrap_or_default();
                let parts: Vec<String> = labels
                    .iter()
                    .zip(&shares)
                    .map(|(l, s)| format!("{} {}", l.as_str().unwrap_or("?"), fmt(s)))
                    .collect();
                let _ = writeln!(md, "- {axis} shares: {}", parts.join(", "));
            }
        }
        "hardness" => {
            let _ = writeln!(md, "- samples: {}", d["num_samples"]);
            let _ = writeln!(md, "- mean composite: {}", fmt(&d["mean_composite"]));
            let names: Vec<&str> = d["metrics"]
                .as_array()
                .map(|m| m.iter().filter_map(|x| x["name"].as_str()).collect())
                .unwrap_or_default();
            let _ = writeln!(md, "- metrics: {}", names.join(", "));
        }
        "memorization" => {
            let _ = writeln!(md, "- hard subset: {} samples", d["hard_subset_size"]);
            let _ = writeln!(md, "- MT_H: {}", fmt(&d["mt_hard"]));
        }
        "dims" => {
            for s in d["sources"].as_array().cloned().unwrap_or_default() {
                let parts: Vec<String> = s["estimates"]
                    .as_array()
                    .map(|es| {
                        es.iter()
                            .map(|x| format!("{} {}", x["estimator"].as_str().unwrap_or("?"), fmt(&x["value"])))
                            .collect()
                    })
                    .unwrap_or_default();
                let _ = writeln!(md, "- {}: {}", s["source"].as_str().unwrap_or("?"), parts.join(", "));
            }
        }
        "similarity" => {
            let kappas: Vec<String> = d["kappa_consecutive"]
                .as_array()
                .map(|k| k.iter().map(|x| fmt(&x["value"])).collect())
                .unwrap_or_default();
            let _ = writeln!(md, "- consecutive-checkpoint kappa: {}", kappas.join(", "));
            if let Some(disp) = d["weight_displacement"].as_array() {
                let v: Vec<String> = disp.iter().map(fmt).collect();
                let _ = writeln!(md, "- weight displacement: {}", v.join(", "));
            }
        }
        "uq" => {
            let _ = writeln!(md, "- smECE: {} (bandwidth {})", fmt(&d["calibration"]["value"]), fmt(&d["calibration"]["bandwidth"]));
            let c = &d["classification"];
            let _ = writeln!(md, "- accuracy {}, AUROC {}, AUPRC {}", fmt(&c["accuracy"]), fmt(&c["auroc"]), fmt(&c["auprc"]));
            for e in d["estimators"].as_array().cloned().unwrap_or_default() {
                let _ = writeln!(md, "- AS {}: {}", e["estimator"].as_str().unwrap_or("?"), fmt(&e["alignment_score"]));
            }
        }
        "saliency" => {
            let _ = writeln!(md, "- mean concordance: {} over {} samples", fmt(&d["mean_concordance"]), d["samples"]);
        }
        _ => {}
    }
    md.push('\n');
}

pub fn run(args: &ReportArgs) -> CliResult<Outcome> {
    let mut entries = Vec::new();
    for dir in &args.inputs {
        if !dir.is_dir() {
            return Err(CliError::Validation(format!("report input not found: {}", dir.display())));
        }
        for section in SECTIONS {
            let path = dir.join(format!("{section}.json"));
            if path.exists() {
                entries.push(Entry {
                    source: dir.display().to_string(),
                    section,
                    data: read_json(&path)?,
                });
            }
        }
    }
    if entries.is_empty() {
        return Err(CliError::Validation("no analysis outputs found in the report inputs".into()));
    }

    let out = Output::create(&args.out, "report", args)?;
    let mut md = String::from("# cuelens report\n\n");
    let (mut n_sens, mut n_abst, mut n_cka) = (0, 0, 0);
    for e in &entries {
        summarize(&mut md, e);
        match e.section {
            "sensitivity" => {
                let name = format!("sensitivity{}.svg", suffix(n_sens));
                out.bytes(&name, sensitivity_plot(&e.data).as_bytes())?;
                let _ = writeln!(md, "![sensitivity]({name})\n");
                n_sens += 1;
            }
            "uq" => {
                let name = format!("abstention{}.svg", suffix(n_abst));
                out.bytes(&name, abstention_plot(&e.data).as_bytes())?;
                let _ = writeln!(md, "![abstention]({name})\n");
                n_abst += 1;
            }
            "similarity" if !e.data["cka"].is_null() => {
                let name = format!("cka{}.svg", suffix(n_cka));
                out.bytes(&name, cka_plot(&e.data["cka"]).as_bytes())?;
                let _ = writeln!(md, "![cka]({name})\n");
                n_cka += 1;
            }
            _ => {}
        }
    }
    out.bytes("report.md", md.as_bytes())?;
    out.json("report.json", &entries)?;
    Ok(Outcome::default())
}
