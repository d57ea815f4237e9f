use std::fs;

use cuelens_core::synth::write_smoke_preset;

use super::Outcome;
use crate::cli::{Preset, SynthArgs};
use crate::error::CliResult;
use crate::output::{io_error, Output};

pub fn run(args: &SynthArgs) -> CliResult<Outcome> {
    let manifest = match args.preset {
        Preset::Smoke => write_smoke_preset(&args.out, args.seed)?,
    };
    let out = Output::create(&args.out, "synth", args)?;
    let mut names: Vec<String> = fs::read_dir(&args.out)
        .map_err(|e| io_error(&args.out, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| !n.ends_with(".prov.json") && n != "config.json")
        .collect();
    names.sort();
    for name in names {
        let path = out.dir().join(&name);
        let bytes = fs::read(&path).map_err(|e| io_error(&path, e))?;
        out.provenance(&name, &bytes)?;
    }
    println!("{}", manifest.display());
    Ok(Outcome::default())
}
