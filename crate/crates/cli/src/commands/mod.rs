mod dims;
mod hardness;
mod memorize;
mod report;
mod saliency;
mod sensitivity;
mod similarity;
mod synth;
mod uq;

use cuelens_core::telemetry::{load_run, Run};

use crate::cli::{Command, RunArgs};
use crate::error::CliResult;

/// Analyses that completed but flagged their input as degenerate.
#[derive(Debug, Default)]
pub struct Outcome {
    pub degenerate: Vec<String>,
}

impl Outcome {
    pub fn flag(&mut self, cond: bool, what: impl Into<String>) {
        if cond {
            self.degenerate.push(what.into());
        }
    }
}

pub fn dispatch(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Sensitivity(a) => sensitivity::run(a),
        Command::Hardness(a) => hardness::run(a),
        Command::Memorize(a) => memorize::run(a),
        Command::Dims(a) => dims::run(a),
        Command::Similarity(a) => similarity::run(a),
        Command::Uq(a) => uq::run(a),
        Command::Saliency(a) => saliency::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Report(a) => report::run(a),
    }
}

fn load(args: &RunArgs) -> CliResult<Run> {
    Ok(load_run(&args.manifest)?)
}
