//! Feasibility of two-sided instances and decomposition at forced idle points.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Bound, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityRule {
    /// `t_i + T_pre,i ≥ t_R − T_post,i`: the packet's own window is non-empty.
    Necessary,
    /// `t_i + T_pre,i > t_R − T_post,j` for `j < i`: FIFO waiting on an
    /// earlier packet's floor must not push `i` past its deadline.
    FifoStrict,
    /// Delays must be positive.
    Validity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityViolation {
    pub rule: FeasibilityRule,
    /// 0-based packet whose deadline is violated.
    pub packet: usize,
    /// The earlier packet whose floor causes a [`FeasibilityRule::FifoStrict`] violation.
    pub earlier: Option<usize>,
    /// Deadline minus floor; negative (or zero for the strict rule) when violated.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub violations: Vec<FeasibilityViolation>,
}

/// Effective latest departure of packet `i`: its own deadline, or `t_E` when
/// it has none (no packet may depart after the last one).
fn latest_departure(instance: &ProblemInstance, i: usize) -> f64 {
    instance.deadline(i).unwrap_or_else(|| instance.end_time())
}

pub fn check_feasibility(instance: &ProblemInstance) -> FeasibilityVerdict {
    let m = instance.len();
    let eps = instance.tolerance();
    let mut violations = Vec::new();

    for (i, (pre, post)) in instance
        .pre_delays()
        .iter()
        .zip(instance.post_delays())
        .enumerate()
    {
        let bad = |b: &Bound| matches!(b, Bound::Finite(v) if !(*v > 0.0));
        if bad(pre) || bad(post) {
            violations.push(FeasibilityViolation {
                rule: FeasibilityRule::Validity,
                packet: i,
                earlier: None,
                gap: f64::NAN,
            });
        }
    }

    for i in 0..m {
        let latest = latest_departure(instance, i);
        for j in 0..i {
            if let Some(floor) = instance.floor(j) {
                let gap = latest - floor;
                if gap <= eps {
                    violations.push(FeasibilityViolation {
                        rule: FeasibilityRule::FifoStrict,
                        packet: i,
                        earlier: Some(j),
                        gap,
                    });
                }
            }
        }
        if let Some(floor) = instance.floor(i) {
            let gap = latest - floor;
            if gap < -eps {
                violations.push(FeasibilityViolation {
                    rule: FeasibilityRule::Necessary,
                    packet: i,
                    earlier: None,
                    gap,
                });
            }
        }
    }

    FeasibilityVerdict {
        feasible: violations.is_empty(),
        violations,
    }
}

/// A run of packets that can be scheduled independently of the others.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    /// 0-based packet range.
    pub packets: Range<usize>,
    /// Arrival of the first packet; the segment's local time origin.
    pub origin: f64,
    /// Segment-local end time: the last packet's deadline.
    pub end_time: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub segments: Vec<Segment>,
}

impl Decomposition {
    pub fn is_trivial(&self) -> bool {
        self.segments.len() == 1
    }
}

/// Split points: packets `i` whose successor arrives after `ν_i`
/// (`d_i > T_pre,i`), which forces the server to idle.
pub fn split_points(instance: &ProblemInstance) -> Vec<usize> {
    let m = instance.len();
    (0..m.saturating_sub(1))
        .filter(|&i| matches!(instance.deadline(i), Some(nu) if instance.arrivals()[i + 1] > nu))
        .collect()
}

/// Splits a feasible instance after every forced idle point. Each segment
/// satisfies `d_i ≤ T_pre,i` internally; floors stay absolute (`t_R` is
/// shared by all segments).
pub fn decompose(instance: &ProblemInstance) -> Result<Decomposition> {
    let verdict = check_feasibility(instance);
    if !verdict.feasible {
        return Err(Error::Infeasible(verdict));
    }
    let mut segments = Vec::new();
    let mut first = 0;
    for last in split_points(instance)
        .into_iter()
        .chain(std::iter::once(instance.len() - 1))
    {
        segments.push(Segment {
            packets: first..last + 1,
            origin: instance.arrivals()[first],
            end_time: instance.deadline(last).expect("split points and the last packet have deadlines"),
        });
        first = last + 1;
    }
    Ok(Decomposition { segments })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn single_packet_window() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![6.0], vec![9.0], 12.0).unwrap();
        assert!(check_feasibility(&inst).feasible);
    }

    #[test]
    fn necessary_condition_fails() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![1.0], vec![2.0], 10.0).unwrap();
        let v = check_feasibility(&inst);
        assert!(!v.feasible);
        assert_eq!(v.violations.len(), 1);
        assert_eq!(v.violations[0].rule, FeasibilityRule::Necessary);
        assert_eq!(v.violations[0].gap, -7.0);
    }

    #[test]
    fn fifo_condition_fails() {
        let inst = ProblemInstance::from_f64(vec![0.0, 5.0], vec![20.0, 1.0], vec![2.0, 20.0], 10.0).unwrap();
        let v = check_feasibility(&inst);
        assert!(!v.feasible);
        let fifo: Vec<_> = v
            .violations
            .iter()
            .filter(|x| x.rule == FeasibilityRule::FifoStrict)
            .collect();
        assert_eq!(fifo.len(), 1);
        assert_eq!((fifo[0].packet, fifo[0].earlier), (1, Some(0)));
        assert_eq!(fifo[0].gap, 6.0 - 8.0);
    }

    #[test]
    fn fifo_equality_is_infeasible() {
        // packet 2 must leave by 8, packet 1 not before 8: zero-length service
        let inst = ProblemInstance::from_f64(vec![0.0, 5.0], vec![20.0, 3.0], vec![2.0, 20.0], 10.0).unwrap();
        assert!(!check_feasibility(&inst).feasible);
    }

    #[test]
    fn no_split() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 2.0, 5.0], 10.0).unwrap();
        let d = decompose(&inst).unwrap();
        assert!(d.is_trivial());
        assert_eq!(d.segments[0].packets, 0..3);
        assert_eq!(d.segments[0].end_time, 10.0);
    }

    #[test]
    fn one_split() {
        let inst = ProblemInstance::from_f64(vec![0.0, 1.0, 10.0], vec![2.0, 2.0, 5.0], vec![INF; 3], 20.0).unwrap();
        let d = decompose(&inst).unwrap();
        let ranges: Vec<_> = d.segments.iter().map(|s| s.packets.clone()).collect();
        assert_eq!(ranges, vec![0..2, 2..3]);
        assert_eq!(d.segments[0].end_time, 3.0);
        assert_eq!(d.segments[1].origin, 10.0);
        assert_eq!(d.segments[1].end_time, 15.0);
    }

    #[test]
    fn two_splits() {
        let inst = ProblemInstance::from_f64(
            vec![0.0, 5.0, 6.0, 20.0],
            vec![2.0, 3.0, 2.0, 4.0],
            vec![INF; 4],
            30.0,
        )
        .unwrap();
        let d = decompose(&inst).unwrap();
        let ranges: Vec<_> = d.segments.iter().map(|s| s.packets.clone()).collect();
        assert_eq!(ranges, vec![0..1, 1..3, 3..4]);
    }

    #[test]
    fn decompose_rejects_infeasible() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![1.0], vec![2.0], 10.0).unwrap();
        assert!(matches!(decompose(&inst), Err(Error::Infeasible(_))));
    }
}
