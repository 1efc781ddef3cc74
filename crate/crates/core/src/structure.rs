//! Groups, subgroups and criticality labels of a schedule.
//!
//! A packet is *regular* when it departs exactly at the next arrival (or at
//! the end of its segment), *pre-critical* when it departs at its deadline
//! and *post-critical* when it departs at its floor. Subgroups are maximal
//! runs of equal durations; a group is a run of subgroups closed by a
//! regular one.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{verify_schedule, ProblemInstance, Schedule};
use crate::cost::InverseCost;

/// Relative tolerance for "equal duration".
const RUN_RTOL: f64 = 1e-9;

fn same_duration(a: f64, b: f64) -> bool {
    (a - b).abs() <= RUN_RTOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PacketLabel {
    pub index: usize,
    pub regular_end: bool,
    pub pre_critical: bool,
    pub post_critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupLabel {
    Regular,
    PreCritical,
    PostCritical,
    /// The run's last packet meets none of its bounds.
    Unbound,
}

impl SubgroupLabel {
    pub fn is_critical(self) -> bool {
        matches!(self, SubgroupLabel::PreCritical | SubgroupLabel::PostCritical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgroup {
    pub packets: Range<usize>,
    pub duration: f64,
    pub label: SubgroupLabel,
    /// Index of the independent segment (between forced idle gaps).
    pub segment: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKind {
    /// No critical subgroup.
    R,
    /// At least one pre- or post-critical subgroup.
    H,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub packets: Range<usize>,
    pub kind: GroupKind,
    pub subgroups: Vec<Subgroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleStructure {
    pub labels: Vec<PacketLabel>,
    pub groups: Vec<Group>,
}

impl ScheduleStructure {
    pub fn subgroups(&self) -> impl Iterator<Item = &Subgroup> {
        self.groups.iter().flat_map(|g| g.subgroups.iter())
    }

    pub fn subgroup_sizes(&self) -> Vec<usize> {
        self.subgroups().map(|s| s.packets.len()).collect()
    }
}

/// Bounds of a packet run as seen by the classifier.
pub(crate) struct Bounds<'a> {
    pub offset: usize,
    pub arrivals: &'a [f64],
    pub deadlines: &'a [Option<f64>],
    pub floors: &'a [Option<f64>],
    pub eps: f64,
}

pub(crate) fn classify_raw(b: &Bounds<'_>, durations: &[f64], departures: &[f64]) -> ScheduleStructure {
    let n = durations.len();
    let eps = b.eps;
    let near = |x: f64, y: f64| (x - y).abs() <= eps;
    // a segment ends where the server idles (or at the last packet)
    let segment_end = |k: usize| k + 1 == n || departures[k] < b.arrivals[k + 1] - eps;

    let labels: Vec<PacketLabel> = (0..n)
        .map(|k| PacketLabel {
            index: b.offset + k,
            regular_end: segment_end(k) || near(departures[k], b.arrivals[k + 1]),
            pre_critical: b.deadlines[k].is_some_and(|nu| near(departures[k], nu)),
            post_critical: b.floors[k].is_some_and(|f| near(departures[k], f)),
        })
        .collect();

    // maximal equal-duration runs inside segments
    let mut runs: Vec<(Range<usize>, usize)> = Vec::new();
    let mut segment = 0;
    let mut first = 0;
    for k in 0..n {
        let last_of_run = segment_end(k) || !same_duration(durations[k], durations[k + 1]);
        if last_of_run {
            runs.push((first..k + 1, segment));
            first = k + 1;
            if segment_end(k) {
                segment += 1;
            }
        }
    }

    let mut subgroups = Vec::with_capacity(runs.len());
    for (r, (packets, seg)) in runs.iter().enumerate() {
        let last = packets.end - 1;
        let l = labels[last];
        let tau = durations[last];
        let label = if segment_end(last) {
            SubgroupLabel::Regular
        } else {
            let next = durations[runs[r + 1].0.start];
            let order: [(bool, SubgroupLabel); 3] = if tau >= next {
                [
                    (l.regular_end, SubgroupLabel::Regular),
                    (l.post_critical, SubgroupLabel::PostCritical),
                    (l.pre_critical, SubgroupLabel::PreCritical),
                ]
            } else {
                [
                    (l.pre_critical, SubgroupLabel::PreCritical),
                    (l.regular_end, SubgroupLabel::Regular),
                    (l.post_critical, SubgroupLabel::PostCritical),
                ]
            };
            order
                .iter()
                .find(|(flag, _)| *flag)
                .map_or(SubgroupLabel::Unbound, |&(_, lab)| lab)
        };
        subgroups.push(Subgroup {
            packets: b.offset + packets.start..b.offset + packets.end,
            duration: tau,
            label,
            segment: *seg,
        });
    }

    let mut groups = Vec::new();
    let mut current: Vec<Subgroup> = Vec::new();
    for sg in subgroups {
        let closes = sg.label == SubgroupLabel::Regular;
        current.push(sg);
        if closes {
            groups.push(make_group(std::mem::take(&mut current)));
        }
    }
    if !current.is_empty() {
        groups.push(make_group(current));
    }

    ScheduleStructure { labels, groups }
}

fn make_group(subgroups: Vec<Subgroup>) -> Group {
    let start = subgroups[0].packets.start;
    let end = subgroups.last().unwrap().packets.end;
    let kind = if subgroups.iter().any(|s| s.label.is_critical()) {
        GroupKind::H
    } else {
        GroupKind::R
    };
    Group {
        packets: start..end,
        kind,
        subgroups,
    }
}

/// Classifies a valid energy schedule of `instance`.
pub fn classify(instance: &ProblemInstance, schedule: &Schedule) -> Result<ScheduleStructure> {
    if schedule.len() != instance.len() {
        return Err(Error::Domain("schedule and instance differ in length".into()));
    }
    let report = verify_schedule(instance, schedule, &InverseCost);
    if !report.is_valid() {
        return Err(Error::Domain(format!(
            "schedule violates its constraints: {:?}",
            report.violations()
        )));
    }
    Ok(classify_unchecked(instance, schedule))
}

/// [`classify`] without the validity precondition; also used for
/// completion-time schedules, whose last packet may leave before `t_E`.
pub fn classify_unchecked(instance: &ProblemInstance, schedule: &Schedule) -> ScheduleStructure {
    let m = instance.len();
    let deadlines: Vec<Option<f64>> = (0..m).map(|i| instance.deadline(i)).collect();
    let floors: Vec<Option<f64>> = (0..m).map(|i| instance.floor(i)).collect();
    classify_raw(
        &Bounds {
            offset: 0,
            arrivals: instance.arrivals(),
            deadlines: &deadlines,
            floors: &floors,
            eps: instance.tolerance(),
        },
        schedule.durations(),
        schedule.departures(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Violation {
    /// Index into the flattened subgroup list.
    pub subgroup: usize,
    pub label: SubgroupLabel,
    pub duration: f64,
    pub next_duration: f64,
}

/// Ordering relations between consecutive subgroups of a segment: regular
/// and post-critical subgroups are at least as long as the next one,
/// pre-critical subgroups at most as long.
pub fn check_lemma1(structure: &ScheduleStructure) -> Vec<Lemma1Violation> {
    let subs: Vec<&Subgroup> = structure.subgroups().collect();
    let mut out = Vec::new();
    for (i, pair) in subs.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if a.segment != b.segment {
            continue;
        }
        let holds = same_duration(a.duration, b.duration)
            || match a.label {
                SubgroupLabel::Regular | SubgroupLabel::PostCritical => a.duration > b.duration,
                SubgroupLabel::PreCritical => a.duration < b.duration,
                SubgroupLabel::Unbound => false,
            };
        if !holds {
            out.push(Lemma1Violation {
                subgroup: i,
                label: a.label,
                duration: a.duration,
                next_duration: b.duration,
            });
        }
    }
    out
}
