use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use twosided_core::{
    check_feasibility, classify, classify_unchecked, oracle_energy, oracle_time, schedule_energy,
    schedule_time_two_sided, BudgetedInstance, CaseTag, CostKind, GroupKind, OracleConfig, ProblemInstance, Schedule,
    ScheduleStructure, SubgroupLabel,
};

use crate::error::CliError;
use crate::instance::InstanceFile;

/// Largest accepted gap between a schedule and the oracle, relative to the
/// oracle cost (energy) or the end time (completion time).
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Energy,
    Time,
}

pub struct ScheduleArgs {
    pub path: PathBuf,
    pub objective: ObjectiveArg,
    pub oracle_check: bool,
    pub w_max: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct PacketRow {
    packet: usize,
    arrival: f64,
    duration: f64,
    departure: f64,
    group: usize,
    group_kind: GroupKind,
    subgroup: SubgroupLabel,
}

#[derive(Debug, Serialize)]
struct SubgroupRow {
    /// First and last packet, 1-based and inclusive.
    packets: [usize; 2],
    duration: f64,
    label: SubgroupLabel,
}

#[derive(Debug, Serialize)]
struct GroupRow {
    packets: [usize; 2],
    kind: GroupKind,
    subgroups: Vec<SubgroupRow>,
}

#[derive(Debug, Serialize)]
struct OracleCheck {
    cost: f64,
    t_c: f64,
    delta: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct ScheduleReport {
    objective: &'static str,
    cost_model: String,
    durations: Vec<f64>,
    departures: Vec<f64>,
    packets: Vec<PacketRow>,
    groups: Vec<GroupRow>,
    total_cost: f64,
    t_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

fn span(r: &std::ops::Range<usize>) -> [usize; 2] {
    [r.start + 1, r.end]
}

fn packet_rows(inst: &ProblemInstance, s: &Schedule, structure: &ScheduleStructure) -> Vec<PacketRow> {
    let mut rows = Vec::with_capacity(inst.len());
    for (g, group) in structure.groups.iter().enumerate() {
        for sub in &group.subgroups {
            for i in sub.packets.clone() {
                rows.push(PacketRow {
                    packet: i + 1,
                    arrival: inst.arrivals()[i],
                    duration: s.durations()[i],
                    departure: s.departures()[i],
                    group: g + 1,
                    group_kind: group.kind,
                    subgroup: sub.label,
                });
            }
        }
    }
    rows
}

fn groups(structure: &ScheduleStructure) -> Vec<GroupRow> {
    structure
        .groups
        .iter()
        .map(|g| GroupRow {
            packets: span(&g.packets),
            kind: g.kind,
            subgroups: g
                .subgroups
                .iter()
                .map(|s| SubgroupRow {
                    packets: span(&s.packets),
                    duration: s.duration,
                    label: s.label,
                })
                .collect(),
        })
        .collect()
}

fn energy_report(inst: &ProblemInstance, cost: CostKind, check: bool) -> Result<ScheduleReport, CliError> {
    let w = cost.build();
    let s = schedule_energy(inst)?;
    let structure = classify(inst, &s)?;
    let total = s.total_cost(w.as_ref());
    let oracle = if check {
        let (_, c) = oracle_energy(inst, w.as_ref(), inst.end_time(), &OracleConfig::default())?;
        let delta = (total - c).abs();
        let tolerance = ORACLE_TOLERANCE * (1.0 + c);
        Some(OracleCheck {
            cost: c,
            t_c: inst.end_time(),
            delta,
            tolerance,
            pass: delta <= tolerance,
        })
    } else {
        None
    };
    Ok(ScheduleReport {
        objective: "energy",
        cost_model: cost.to_string(),
        durations: s.durations().to_vec(),
        departures: s.departures().to_vec(),
        packets: packet_rows(inst, &s, &structure),
        groups: groups(&structure),
        total_cost: total,
        t_c: s.last_departure(),
        case: None,
        w_max: None,
        oracle,
    })
}

fn time_report(inst: &ProblemInstance, cost: CostKind, w_max: f64, check: bool) -> Result<ScheduleReport, CliError> {
    let b = BudgetedInstance::new(inst.clone(), cost, w_max)?;
    let res = schedule_time_two_sided(&b)?;
    let s = &res.schedule;
    let structure = classify_unchecked(inst, s);
    let oracle = if check {
        let w = cost.build();
        let (os, t) = oracle_time(&b, &OracleConfig::default())?;
        let delta = (res.t_c - t).abs();
        let tolerance = ORACLE_TOLERANCE * inst.end_time();
        Some(OracleCheck {
            cost: os.total_cost(w.as_ref()),
            t_c: t,
            delta,
            tolerance,
            pass: delta <= tolerance,
        })
    } else {
        None
    };
    Ok(ScheduleReport {
        objective: "time",
        cost_model: cost.to_string(),
        durations: s.durations().to_vec(),
        departures: s.departures().to_vec(),
        packets: packet_rows(inst, s, &structure),
        groups: groups(&structure),
        total_cost: res.energy_used,
        t_c: res.t_c,
        case: Some(res.case_tag),
        w_max: Some(w_max),
        oracle,
    })
}

fn to_csv(report: &ScheduleReport) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.packets {
        w.serialize(row).map_err(|e| CliError::Input(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_out(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Prints or writes the schedule. The oracle comparison, when requested,
/// is reported before a failing delta turns into an error.
pub fn run(args: &ScheduleArgs) -> Result<(), CliError> {
    let file = InstanceFile::read(&args.path)?;
    let inst = file.instance()?;
    let cost = file.cost_kind()?;
    let verdict = check_feasibility(&inst);
    if !verdict.feasible {
        return Err(CliError::Negative(format!(
            "instance is infeasible: {}",
            serde_json::to_string(&verdict.violations).expect("violations serialize")
        )));
    }
    let report = match args.objective {
        ObjectiveArg::Energy => energy_report(&inst, cost, args.oracle_check)?,
        ObjectiveArg::Time => {
            let w_max = args.w_max.or(file.w_max).ok_or_else(|| {
                CliError::Input("the time objective needs w_max in the instance file or --w-max".into())
            })?;
            time_report(&inst, cost, w_max, args.oracle_check)?
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    match &args.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => write_out(p, &to_csv(&report)?)?,
        Some(p) => write_out(p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    match &report.oracle {
        Some(o) if !o.pass => Err(CliError::Negative(format!(
            "oracle mismatch: delta {} exceeds tolerance {}",
            o.delta, o.tolerance
        ))),
        _ => Ok(()),
    }
}
