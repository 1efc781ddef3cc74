use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use twosided_core::{check_feasibility, decompose, Decomposition, FeasibilityVerdict, ProblemInstance};

use crate::error::CliError;
use crate::instance::InstanceFile;

#[derive(Debug, Serialize)]
struct Window {
    packet: usize,
    arrival: f64,
    earliest: f64,
    latest: f64,
}

#[derive(Debug, Serialize)]
struct CheckReport {
    verdict: FeasibilityVerdict,
    windows: Vec<Window>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<Decomposition>,
}

/// Valid departure interval of every packet.
fn windows(inst: &ProblemInstance) -> Vec<Window> {
    let t = inst.arrivals();
    (0..inst.len())
        .map(|i| Window {
            packet: i + 1,
            arrival: t[i],
            earliest: inst.floor(i).unwrap_or(t[i]),
            latest: inst.deadline(i).unwrap_or(inst.end_time()),
        })
        .collect()
}

fn render(report: &CheckReport) -> String {
    let mut out = String::new();
    let v = &report.verdict;
    let _ = writeln!(out, "{}", if v.feasible { "feasible" } else { "infeasible" });
    for w in &report.windows {
        let _ = writeln!(out, "packet {}: arrival {}, region [{}, {}]", w.packet, w.arrival, w.earliest, w.latest);
    }
    for x in &v.violations {
        let rule = serde_json::to_value(x.rule).expect("rules serialize");
        let _ = write!(
            out,
            "violation: rule {}, packet {}, gap {}",
            rule.as_str().unwrap_or_default(),
            x.packet + 1,
            x.gap
        );
        if let Some(j) = x.earlier {
            let _ = write!(out, ", earlier packet {}", j + 1);
        }
        out.push('\n');
    }
    if let Some(d) = &report.decomposition {
        let _ = writeln!(out, "segments: {}", d.segments.len());
        for (k, s) in d.segments.iter().enumerate() {
            let _ = writeln!(
                out,
                "segment {}: packets {}-{}, origin {}, end {}",
                k + 1,
                s.packets.start + 1,
                s.packets.end,
                s.origin,
                s.end_time
            );
        }
    }
    out
}

/// Prints the verdict; `Ok(false)` means the instance is infeasible.
pub fn run(path: &Path, json: bool) -> Result<bool, CliError> {
    let inst = InstanceFile::read(path)?.instance()?;
    let verdict = check_feasibility(&inst);
    let decomposition = if verdict.feasible { Some(decompose(&inst)?) } else { None };
    let report = CheckReport {
        verdict,
        windows: windows(&inst),
        decomposition,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    } else {
        print!("{}", render(&report));
    }
    Ok(report.verdict.feasible)
}
