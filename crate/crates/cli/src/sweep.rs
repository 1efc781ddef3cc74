use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use twosided_core::bench::{
    fig6_spec, fig7_spec, sweep_energy, sweep_time, BaselineKind, GeneratorSpec, SweepReport, FIG6_WINDOWS,
    FIG7_BUDGETS,
};
use twosided_core::CostKind;

use crate::error::CliError;
use crate::schedule::ObjectiveArg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Energy per successful packet against the window size.
    Fig6,
    /// Completion time per successful packet against the budget.
    Fig7,
}

pub struct SweepArgs {
    pub figure: Option<Figure>,
    pub objective: Option<ObjectiveArg>,
    pub trials: usize,
    pub seed: u64,
    pub packets: Option<usize>,
    pub reference_time: Option<f64>,
    pub window: Option<f64>,
    pub ladder: Option<Vec<f64>>,
    pub cost: CostKind,
    pub out_dir: PathBuf,
}

struct Plan {
    name: String,
    objective: ObjectiveArg,
    spec: GeneratorSpec,
    ladder: Vec<f64>,
}

fn plan(args: &SweepArgs) -> Result<Plan, CliError> {
    let (name, objective, base, ladder) = match (args.figure, args.objective) {
        (Some(Figure::Fig6), None | Some(ObjectiveArg::Energy)) => {
            ("fig6".to_string(), ObjectiveArg::Energy, fig6_spec(args.trials, args.seed), FIG6_WINDOWS.to_vec())
        }
        (Some(Figure::Fig7), None | Some(ObjectiveArg::Time)) => {
            ("fig7".to_string(), ObjectiveArg::Time, fig7_spec(args.trials, args.seed), FIG7_BUDGETS.to_vec())
        }
        (Some(f), Some(o)) => {
            return Err(CliError::Input(format!(
                "--figure {} already fixes the objective; drop --objective {}",
                f.to_possible_value().expect("figures have names").get_name(),
                o.to_possible_value().expect("objectives have names").get_name()
            )))
        }
        (None, Some(o)) => {
            let (name, spec) = match o {
                ObjectiveArg::Energy => ("sweep_energy", fig6_spec(args.trials, args.seed)),
                ObjectiveArg::Time => ("sweep_time", fig7_spec(args.trials, args.seed)),
            };
            let ladder = args
                .ladder
                .clone()
                .ok_or_else(|| CliError::Input("a custom sweep needs --ladder".into()))?;
            (name.to_string(), o, spec, ladder)
        }
        (None, None) => return Err(CliError::Input("pass --figure or --objective".into())),
    };
    if objective == ObjectiveArg::Energy && args.window.is_some() {
        return Err(CliError::Input("the window is the axis of an energy sweep; set it with --ladder".into()));
    }
    let spec = GeneratorSpec {
        packets: args.packets.unwrap_or(base.packets),
        reference_time: args.reference_time.unwrap_or(base.reference_time),
        window: args.window.unwrap_or(base.window),
        ..base
    };
    let ladder = args.ladder.clone().unwrap_or(ladder);
    if ladder.is_empty() || ladder.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(CliError::Input("--ladder needs positive finite values".into()));
    }
    if args.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    Ok(Plan {
        name,
        objective,
        spec,
        ladder,
    })
}

fn table(report: &SweepReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>8}", report.axis_name);
    for k in BaselineKind::ALL {
        let _ = write!(out, " {:>14}", k.name());
    }
    out.push('\n');
    for (i, p) in report.points.iter().enumerate() {
        let _ = write!(out, "{:>8}", p.axis);
        for k in BaselineKind::ALL {
            let _ = write!(out, " {:>14.6}", report.summary(i, k).metric_agg);
        }
        out.push('\n');
    }
    out
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let plan = plan(args)?;
    let w = args.cost.build();
    let report = match plan.objective {
        ObjectiveArg::Energy => sweep_energy(&plan.spec, &plan.ladder, w.as_ref()),
        ObjectiveArg::Time => sweep_time(&plan.spec, &plan.ladder, w.as_ref()),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;

    let io = |e: std::io::Error| CliError::Input(format!("cannot write to {}: {e}", args.out_dir.display()));
    std::fs::create_dir_all(&args.out_dir).map_err(io)?;
    let csv_path = args.out_dir.join(format!("{}.csv", plan.name));
    let json_path = args.out_dir.join(format!("{}.json", plan.name));
    std::fs::write(&csv_path, report.to_csv()?).map_err(io)?;
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    std::fs::write(&json_path, json + "\n").map_err(io)?;

    print!("{}", table(&report));
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}
