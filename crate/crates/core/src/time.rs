//! Completion-time minimization under an energy budget.
//!
//! Only the last independent segment is time-critical; earlier segments
//! end at a forced deadline anyway and get their energy-optimal schedule.
//! In the last segment an anchor is picked from the largest post-delay floor,
//! the packets up to the anchor are scheduled energy-optimally, and the
//! remaining packets share the leftover budget equally. Subgroups of the
//! prefix are then merged into that tail while the tail would be longer than
//! them, and tail packets that would miss their deadline are pinned to it.

use serde::Serialize;

use crate::cost::CostModel;
use crate::energy::{run_window, Window};
use crate::error::{Error, Result};
use crate::feasibility::{check_feasibility, decompose, Segment};
use crate::model::{BudgetedInstance, ProblemInstance, Schedule};
use crate::structure::{classify_raw, Bounds, SubgroupLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    /// Every floor is at or before the last arrival.
    Case1,
    /// The largest floor belongs to an earlier packet and lies after the last arrival.
    Case2a,
    /// The last packet's floor is the largest and the budget reaches it.
    Case2bI,
    /// The last packet's floor is the largest but out of the budget's reach.
    Case2bII,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeScheduleResult {
    pub schedule: Schedule,
    /// Last departure. Equals `Σ τ_i` unless forced idle gaps precede the
    /// last segment.
    pub t_c: f64,
    pub case_tag: CaseTag,
    pub energy_used: f64,
}

/// Slack allowed when comparing an energy against the budget.
fn budget_slack(w_max: f64) -> f64 {
    1e-12 * (1.0 + w_max)
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    tau: f64,
    label: SubgroupLabel,
    /// Ends at a deadline that a tail packet would have missed.
    repair: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MergeRule {
    /// Tail must not exceed any earlier duration (post-delays only).
    NonIncreasing,
    /// Ordering of the last subgroup against the tail.
    Boundary,
}

/// Packets of one segment, with window-relative indices.
struct Tail<'a> {
    instance: &'a ProblemInstance,
    seg: &'a Segment,
    cost: &'a dyn CostModel,
    budget: f64,
    rule: MergeRule,
}

impl Tail<'_> {
    fn len(&self) -> usize {
        self.seg.packets.len()
    }

    fn global(&self, j: usize) -> usize {
        self.seg.packets.start + j
    }

    fn window(&self, local: std::ops::Range<usize>, start: f64, end: f64) -> Window {
        let a = self.global(local.start);
        let b = self.global(local.end);
        Window::from_instance(self.instance, a..b, start, end)
    }

    /// Energy-optimal run of `local` in `[start, end]`, split into subgroups.
    fn blocks_of(&self, local: std::ops::Range<usize>, start: f64, end: f64) -> (Vec<f64>, Vec<f64>, Vec<Block>) {
        let w = self.window(local.clone(), start, end);
        let out = run_window(&w);
        let st = classify_raw(
            &Bounds {
                offset: local.start,
                arrivals: &w.arrivals,
                deadlines: &w.deadlines,
                floors: &w.floors,
                eps: self.instance.tolerance(),
            },
            &out.durations,
            &out.departures,
        );
        let blocks = st
            .subgroups()
            .map(|s| Block {
                start: s.packets.start,
                tau: s.duration,
                label: s.label,
                repair: false,
            })
            .collect();
        (out.durations, out.departures, blocks)
    }

    /// Schedules the packets after `prefix` (a window ending at `anchor`)
    /// with the budget left over, merging and repairing as needed.
    fn solve(&self, prefix: usize, anchor: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.len();
        let origin = self.seg.origin;
        let (mut durs, mut deps, mut blocks) = if prefix > 0 {
            self.blocks_of(0..prefix, origin, anchor)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };
        let mut k = prefix;
        let mut start = if prefix > 0 { anchor } else { origin };

        // every step either pops a block or pins at least one packet
        for _ in 0..4 * (n + 2) * (n + 2) {
            let rem = n - k;
            let spent: f64 = durs.iter().map(|&t| self.cost.evaluate(t)).sum();
            let left = self.budget - spent;
            let tau = if left > 0.0 {
                self.cost.inverse(left / rem as f64)
            } else {
                f64::INFINITY
            };

            if let Some(last) = blocks.last().copied() {
                let merge = !tau.is_finite()
                    || match self.rule {
                        MergeRule::NonIncreasing => durs.iter().any(|&d| tau > d && !close(tau, d)),
                        MergeRule::Boundary => {
                            !close(tau, last.tau)
                                && match last.label {
                                    SubgroupLabel::PreCritical => tau < last.tau,
                                    _ => tau > last.tau,
                                }
                        }
                    };
                if merge {
                    blocks.pop();
                    k = last.start;
                    // a repair that starts too late is redone from an earlier start
                    if last.repair {
                        if let Some(prev) = blocks.pop() {
                            k = prev.start;
                        }
                    }
                    durs.truncate(k);
                    deps.truncate(k);
                    start = deps.last().copied().unwrap_or(origin);
                    continue;
                }
            }
            if !tau.is_finite() {
                return Err(Error::InsufficientBudget {
                    required: f64::INFINITY,
                    available: self.budget,
                });
            }

            // pre-delay violations of the equalized tail
            let mut worst: Option<(f64, usize)> = None;
            for j in k..n {
                if let Some(nu) = self.instance.deadline(self.global(j)) {
                    let count = (j - k + 1) as f64;
                    let dep = start + count * tau;
                    if dep > nu && !close(dep, nu) {
                        let cap = (nu - start) / count;
                        if worst.is_none_or(|(c, _)| cap <= c) {
                            worst = Some((cap, j));
                        }
                    }
                }
            }
            if let Some((_, j)) = worst {
                let nu = self.instance.deadline(self.global(j)).unwrap();
                let (d, s, mut b) = self.blocks_of(k..j + 1, start, nu);
                for blk in &mut b {
                    blk.repair = true;
                }
                if let Some(lb) = b.last_mut() {
                    lb.label = SubgroupLabel::PreCritical;
                }
                durs.extend(d);
                deps.extend(s);
                blocks.extend(b);
                k = j + 1;
                start = nu;
                if k == n {
                    return Ok((durs, deps));
                }
                continue;
            }

            for j in k..n {
                durs.push(tau);
                deps.push(start + (j - k + 1) as f64 * tau);
            }
            return Ok((durs, deps));
        }
        Err(Error::Domain("completion-time merge loop did not settle".into()))
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn argmax_floor(instance: &ProblemInstance, seg: &Segment, upto: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for j in 0..upto {
        if let Some(f) = instance.floor(seg.packets.start + j) {
            if best.is_none_or(|(_, b)| f >= b) {
                best = Some((j, f));
            }
        }
    }
    best
}

fn solve(instance: &ProblemInstance, cost: &dyn CostModel, w_max: f64, rule: MergeRule) -> Result<TimeScheduleResult> {
    let verdict = check_feasibility(instance);
    if !verdict.feasible {
        return Err(Error::Infeasible(verdict));
    }
    let dec = decompose(instance)?;
    let (last_seg, earlier) = dec.segments.split_last().expect("at least one segment");

    let mut durations = Vec::with_capacity(instance.len());
    let mut departures = Vec::with_capacity(instance.len());
    for seg in earlier {
        let out = run_window(&Window::from_instance(instance, seg.packets.clone(), seg.origin, seg.end_time));
        durations.extend(out.durations);
        departures.extend(out.departures);
    }
    let fixed: f64 = durations.iter().map(|&t| cost.evaluate(t)).sum();

    let full = run_window(&Window::from_instance(
        instance,
        last_seg.packets.clone(),
        last_seg.origin,
        last_seg.end_time,
    ));
    let required = fixed + full.durations.iter().map(|&t| cost.evaluate(t)).sum::<f64>();
    if required > w_max + budget_slack(w_max) {
        return Err(Error::InsufficientBudget {
            required,
            available: w_max,
        });
    }

    let tail = Tail {
        instance,
        seg: last_seg,
        cost,
        budget: w_max - fixed,
        rule,
    };
    let n = tail.len();
    let t_last = instance.arrivals()[last_seg.packets.end - 1];

    let case1 = || tail.solve(n - 1, t_last);
    let case2a = |i: usize, f: f64| tail.solve(i + 1, f);

    let (tag, (d, s)) = match argmax_floor(instance, last_seg, n) {
        None => (CaseTag::Case1, case1()?),
        Some((_, f)) if f <= t_last => (CaseTag::Case1, case1()?),
        Some((i, f)) if i + 1 < n => (CaseTag::Case2a, case2a(i, f)?),
        Some((_, f)) => {
            let w = tail.window(0..n, last_seg.origin, f);
            let out = run_window(&w);
            let e: f64 = out.durations.iter().map(|&t| cost.evaluate(t)).sum();
            if e <= tail.budget + budget_slack(w_max) {
                (CaseTag::Case2bI, (out.durations, out.departures))
            } else {
                // the last floor cannot bind; fall back to the next anchor
                let r = match argmax_floor(instance, last_seg, n - 1) {
                    Some((i, f2)) if f2 > t_last => case2a(i, f2)?,
                    _ => case1()?,
                };
                (CaseTag::Case2bII, r)
            }
        }
    };
    durations.extend(d);
    departures.extend(s);
    let schedule = Schedule::from_parts(durations, departures)?;
    let energy_used = schedule.total_cost(cost);
    Ok(TimeScheduleResult {
        t_c: schedule.last_departure(),
        schedule,
        case_tag: tag,
        energy_used,
    })
}

/// Minimal completion time for instances with post-delays only.
pub fn schedule_time_post(budgeted: &BudgetedInstance) -> Result<TimeScheduleResult> {
    if budgeted.instance.has_pre_delays() {
        return Err(Error::Domain(
            "post-delay scheduling requires every pre-delay to be unbounded".into(),
        ));
    }
    let cost = budgeted.cost.build();
    solve(&budgeted.instance, cost.as_ref(), budgeted.w_max, MergeRule::NonIncreasing)
}

/// Minimal completion time under two-sided delay constraints.
pub fn schedule_time_two_sided(budgeted: &BudgetedInstance) -> Result<TimeScheduleResult> {
    let cost = budgeted.cost.build();
    schedule_time_with(&budgeted.instance, cost.as_ref(), budgeted.w_max)
}

/// [`schedule_time_two_sided`] for an arbitrary cost model.
pub fn schedule_time_with(instance: &ProblemInstance, cost: &dyn CostModel, w_max: f64) -> Result<TimeScheduleResult> {
    if !(w_max.is_finite() && w_max > 0.0) {
        return Err(Error::InvalidInstance(format!("energy budget must be positive, got {w_max}")));
    }
    solve(instance, cost, w_max, MergeRule::Boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostKind, InverseCost};
    use crate::model::verify_time_schedule;

    const INF: f64 = f64::INFINITY;

    fn budgeted(t: Vec<f64>, pre: Vec<f64>, post: Vec<f64>, t_r: f64, w_max: f64) -> BudgetedInstance {
        BudgetedInstance::new(ProblemInstance::from_f64(t, pre, post, t_r).unwrap(), CostKind::Inverse, w_max)
            .unwrap()
    }

    fn assert_durations(r: &TimeScheduleResult, want: &[f64]) {
        assert_eq!(r.schedule.len(), want.len());
        for (a, b) in r.schedule.durations().iter().zip(want) {
            assert!((a - b).abs() <= 1e-9, "{:?} vs {want:?}", r.schedule.durations());
        }
    }

    #[test]
    fn single_packet_spends_budget() {
        let b = budgeted(vec![0.0], vec![INF], vec![INF], 10.0, 0.5);
        let r = schedule_time_post(&b).unwrap();
        assert_durations(&r, &[2.0]);
        assert_eq!(r.case_tag, CaseTag::Case1);
    }

    #[test]
    fn two_packets_no_merge() {
        let b = budgeted(vec![0.0, 3.0], vec![INF; 2], vec![INF; 2], 10.0, 1.0);
        let r = schedule_time_post(&b).unwrap();
        assert_durations(&r, &[3.0, 1.5]);
        assert!((r.t_c - 4.5).abs() <= 1e-9);
        assert_eq!(r.case_tag, CaseTag::Case1);
    }

    #[test]
    fn two_packets_one_merge() {
        let b = budgeted(vec![0.0, 3.0], vec![INF; 2], vec![INF; 2], 10.0, 0.5);
        let r = schedule_time_post(&b).unwrap();
        assert_durations(&r, &[4.0, 4.0]);
        assert!((r.t_c - 8.0).abs() <= 1e-9);
    }

    #[test]
    fn floor_reachable() {
        let b = budgeted(vec![0.0], vec![INF], vec![4.0], 10.0, 1.0);
        let r = schedule_time_post(&b).unwrap();
        assert_durations(&r, &[6.0]);
        assert_eq!(r.t_c, 6.0);
        assert_eq!(r.case_tag, CaseTag::Case2bI);
    }

    #[test]
    fn floor_out_of_reach() {
        let b = budgeted(vec![0.0], vec![INF], vec![8.0], 10.0, 0.25);
        let r = schedule_time_post(&b).unwrap();
        assert_durations(&r, &[4.0]);
        assert_eq!(r.case_tag, CaseTag::Case2bII);
    }

    #[test]
    fn earlier_floor_anchors() {
        // floor of packet 1 at 6, after the last arrival 2
        let b = budgeted(vec![0.0, 2.0], vec![INF; 2], vec![4.0, INF], 10.0, 1.0);
        let r = schedule_time_post(&b).unwrap();
        assert_eq!(r.case_tag, CaseTag::Case2a);
        assert_durations(&r, &[6.0, 1.0 / (1.0 - 1.0 / 6.0)]);
    }

    #[test]
    fn pre_critical_prefix() {
        let b = budgeted(vec![0.0, 2.0, 4.0], vec![10.0, 2.0, 20.0], vec![INF; 3], 10.0, 2.0);
        let r = schedule_time_two_sided(&b).unwrap();
        assert_durations(&r, &[2.0, 2.0, 1.0]);
        assert!((r.t_c - 5.0).abs() <= 1e-9);
    }

    #[test]
    fn budget_exactly_consumed() {
        let b = budgeted(vec![0.0, 2.0], vec![10.0, 2.0], vec![INF; 2], 10.0, 1.0);
        let r = schedule_time_two_sided(&b).unwrap();
        assert_durations(&r, &[2.0, 2.0]);
        assert!((r.energy_used - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn insufficient_budget() {
        let b = budgeted(vec![0.0, 2.0], vec![10.0, 2.0], vec![INF; 2], 10.0, 0.6);
        match schedule_time_two_sided(&b) {
            Err(Error::InsufficientBudget { required, available }) => {
                assert!((required - 1.0).abs() < 1e-12);
                assert_eq!(available, 0.6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn post_only_matches_two_sided_without_pre_delays() {
        let b = budgeted(vec![0.0, 1.0, 2.5, 3.0], vec![INF; 4], vec![9.0, 7.0, 8.5, 9.5], 10.0, 2.0);
        let a = schedule_time_post(&b).unwrap();
        let c = schedule_time_two_sided(&b).unwrap();
        assert_eq!(a.schedule, c.schedule);
    }

    #[test]
    fn post_only_rejects_pre_delays() {
        let b = budgeted(vec![0.0, 2.0], vec![10.0, 2.0], vec![INF; 2], 10.0, 1.0);
        assert!(schedule_time_post(&b).is_err());
    }

    #[test]
    fn earlier_segments_stay_energy_optimal() {
        let inst = ProblemInstance::from_f64(vec![0.0, 1.0, 10.0], vec![2.0, 2.0, 5.0], vec![INF; 3], 20.0).unwrap();
        let r = schedule_time_with(&inst, &InverseCost, 2.0).unwrap();
        assert_eq!(&r.schedule.departures()[..2], &[1.5, 3.0]);
        let left = 2.0 - 2.0 / 1.5;
        assert!((r.t_c - (10.0 + 1.0 / left)).abs() <= 1e-9);
        assert!(verify_time_schedule(&inst, &r.schedule, &InverseCost).is_valid());
    }
}
