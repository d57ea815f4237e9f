use cuelens_core::perturb::{perturb_stack, sensitivity_profile, Manipulation};
use cuelens_core::telemetry::TensorFile;

use super::{load, Outcome};
use crate::cli::SensitivityArgs;
use crate::error::{CliError, CliResult};
use crate::output::{num, Output};

pub fn run(args: &SensitivityArgs) -> CliResult<Outcome> {
    let run = load(&args.run)?;
    let telemetry = run.sensitivity.as_ref().ok_or_else(|| CliError::missing("sensitivity"))?;
    let profile = sensitivity_profile(&telemetry.clean, &telemetry.perturbed)?;
    let out = Output::create(&args.run.out, "sensitivity", args)?;

    out.csv(
        "sensitivity.csv",
        &["manipulation", "mean_djs"],
        profile
            .per_manipulation
            .iter()
            .map(|m| vec![m.manipulation.clone(), num(m.mean_djs)]),
    )?;
    let axes = [("frequency", &profile.frequency), ("hvs", &profile.hvs)];
    out.csv(
        "sensitivity_shares.csv",
        &["axis", "label", "total", "share"],
        axes.iter().flat_map(|(axis, s)| {
            (0..s.labels.len()).map(move |i| vec![axis.to_string(), s.labels[i].clone(), num(s.totals[i]), num(s.shares[i])])
        }),
    )?;
    out.json("sensitivity.json", &profile)?;

    if args.export_perturbed {
        let images = run.images.as_ref().ok_or_else(|| CliError::missing("images"))?;
        for m in Manipulation::all() {
            let stack = perturb_stack(images, m, args.run.seed)?;
            let name = format!("perturbed_{}.spt", m.to_string().replace(':', "_"));
            out.tensor(&name, &TensorFile::from_array(stack.data())?)?;
        }
    }

    let mut outcome = Outcome::default();
    outcome.flag(profile.frequency.degenerate, "no frequency manipulation changes any prediction");
    outcome.flag(profile.hvs.degenerate, "no HVS manipulation changes any prediction");
    Ok(outcome)
}
