//! Energy-minimizing offline schedulers.
//!
//! [`schedule_single_deadline`] handles a single common deadline by repeated
//! max-prefix-mean allocation. [`schedule_energy_two_sided`] is the
//! two-sided generalization; [`schedule_energy`] decomposes first and runs it
//! per segment. Neither ever evaluates the cost function: the optimum is the
//! same for every convex decreasing `w`.

use std::ops::Range;

use serde::Serialize;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::feasibility::{check_feasibility, decompose, split_points};
use crate::model::{ProblemInstance, Schedule};

/// Relative tolerance for ties between candidate durations.
const TIE_RTOL: f64 = 1e-12;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}

/// Optimal durations for packets that share the deadline `Σ d_i = end_time`.
///
/// Repeatedly takes the largest prefix mean of the remaining inter-arrival
/// times (longest prefix on ties) and gives that duration to the whole prefix.
pub fn schedule_single_deadline(d: &[f64], end_time: f64) -> Result<Schedule> {
    if d.is_empty() {
        return Err(Error::Domain("no inter-arrival times given".into()));
    }
    if let Some(i) = d.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Domain(format!(
            "inter-arrival time {} must be positive, got {}",
            i + 1,
            d[i]
        )));
    }
    let total: f64 = d.iter().sum();
    if (total - end_time).abs() > 1e-9 * end_time.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "inter-arrival times sum to {total}, expected the end time {end_time}"
        )));
    }

    let mut durations = Vec::with_capacity(d.len());
    let mut c = 0;
    while c < d.len() {
        let (mut best, mut best_k, mut sum) = (f64::NEG_INFINITY, 0, 0.0);
        for (k, x) in d[c..].iter().enumerate() {
            sum += x;
            let mean = sum / (k + 1) as f64;
            if mean > best || ties(mean, best) {
                best = mean;
                best_k = k + 1;
            }
        }
        durations.extend(std::iter::repeat_n(best, best_k));
        c += best_k;
    }
    Schedule::from_durations(durations)
}

/// How the last packet of a batch is bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    /// Ends at the next arrival, or at the end of the frame.
    Regular,
    /// Ends at its own pre-delay deadline.
    PreCritical,
    /// Ends at its post-delay floor.
    PostCritical,
}

/// One allocation step: equal durations for a run of packets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Batch {
    /// 0-based packets, in instance indices.
    pub packets: Range<usize>,
    pub duration: f64,
    pub kind: BatchKind,
    /// Departure of the batch's last packet.
    pub departure: f64,
}

/// A contiguous run of packets scheduled in `[start, end]`, with absolute
/// deadlines and floors. The last packet departs exactly at `end`.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    /// Instance index of the first packet.
    pub offset: usize,
    pub arrivals: Vec<f64>,
    pub deadlines: Vec<Option<f64>>,
    pub floors: Vec<Option<f64>>,
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn from_instance(instance: &ProblemInstance, packets: Range<usize>, start: f64, end: f64) -> Self {
        Self {
            offset: packets.start,
            arrivals: instance.arrivals()[packets.clone()].to_vec(),
            deadlines: packets.clone().map(|i| instance.deadline(i)).collect(),
            floors: packets.map(|i| instance.floor(i)).collect(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }
}

/// Working state of the two-sided allocation.
///
/// Floors and deadlines stay absolute. After each batch the cursor moves to
/// the batch's binding time and every remaining arrival is clamped to it,
/// which is all the three branch-specific rewrites amount to.
#[derive(Debug, Clone)]
pub struct Alg2State {
    /// Next unallocated packet (window-relative).
    pub cursor: usize,
    /// Time at which the next batch starts.
    pub origin: f64,
    /// Arrivals clamped to `origin`.
    pub arrivals: Vec<f64>,
    /// Pre-delays relative to the working arrivals, so `ν_i` never moves.
    pub pre_delays: Vec<Option<f64>>,
    /// Original deadlines `ν_i`.
    pub deadlines: Vec<Option<f64>>,
}

struct Candidate {
    tau: f64,
    count: usize,
    kind: BatchKind,
    binding: f64,
}

impl Alg2State {
    fn new(w: &Window) -> Self {
        Self {
            cursor: 0,
            origin: w.start,
            arrivals: w.arrivals.clone(),
            pre_delays: w
                .deadlines
                .iter()
                .zip(&w.arrivals)
                .map(|(nu, t)| nu.map(|nu| nu - t))
                .collect(),
            deadlines: w.deadlines.clone(),
        }
    }

    /// Picks the next batch: for every prefix length `k` the candidate
    /// duration is the minimum of the pre-delay caps of its first `k − 1`
    /// packets and of the larger of the arrival and floor means at packet
    /// `k`; the batch is the prefix that maximizes it.
    fn best_candidate(&self, w: &Window) -> Candidate {
        let c = self.cursor;
        let s = self.origin;
        let rem = w.len() - c;
        let mut cap: Option<(f64, usize)> = None;
        let mut best: Option<Candidate> = None;
        for k in 1..=rem {
            if k > 1 {
                if let Some(nu) = self.deadlines[c + k - 2] {
                    let v = (nu - s) / (k - 1) as f64;
                    if cap.is_none_or(|(m, _)| v < m) {
                        cap = Some((v, k - 1));
                    }
                }
            }
            let next = if c + k < w.len() { self.arrivals[c + k] } else { w.end };
            let regular = (next - s) / k as f64;
            let post = w.floors[c + k - 1].map(|f| (f - s) / k as f64);
            let last = match post {
                Some(p) if p > regular => Candidate {
                    tau: p,
                    count: k,
                    kind: BatchKind::PostCritical,
                    binding: w.floors[c + k - 1].unwrap(),
                },
                _ => Candidate {
                    tau: regular,
                    count: k,
                    kind: BatchKind::Regular,
                    binding: next,
                },
            };
            let cand = match cap {
                Some((v, j)) if v <= last.tau => Candidate {
                    tau: v,
                    count: j,
                    kind: BatchKind::PreCritical,
                    binding: self.deadlines[c + j - 1].unwrap(),
                },
                _ => last,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    if ties(cand.tau, b.tau) {
                        cand.count > b.count
                    } else {
                        cand.tau > b.tau
                    }
                }
            };
            if better {
                best = Some(cand);
            }
        }
        best.expect("at least one packet remains")
    }

    fn advance(&mut self, count: usize, binding: f64) {
        self.cursor += count;
        self.origin = binding;
        for i in self.cursor..self.arrivals.len() {
            if self.arrivals[i] < binding {
                self.arrivals[i] = binding;
                self.pre_delays[i] = self.deadlines[i].map(|nu| nu - binding);
            }
        }
    }
}

pub(crate) struct WindowSchedule {
    pub durations: Vec<f64>,
    pub departures: Vec<f64>,
    pub batches: Vec<Batch>,
}

pub(crate) fn run_window(w: &Window) -> WindowSchedule {
    let n = w.len();
    let mut st = Alg2State::new(w);
    let mut durations = Vec::with_capacity(n);
    let mut departures = Vec::with_capacity(n);
    let mut batches = Vec::new();
    while st.cursor < n {
        let cand = st.best_candidate(w);
        let s = st.origin;
        for j in 1..cand.count {
            durations.push(cand.tau);
            departures.push(s + j as f64 * cand.tau);
        }
        durations.push(cand.tau);
        departures.push(cand.binding);
        let first = w.offset + st.cursor;
        batches.push(Batch {
            packets: first..first + cand.count,
            duration: cand.tau,
            kind: cand.kind,
            departure: cand.binding,
        });
        st.advance(cand.count, cand.binding);
    }
    WindowSchedule {
        durations,
        departures,
        batches,
    }
}

/// A schedule together with the batches that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRun {
    pub schedule: Schedule,
    pub batches: Vec<Batch>,
}

/// Two-sided energy-optimal schedule of an instance without forced idle
/// points. Use [`schedule_energy`] for arbitrary feasible instances.
pub fn schedule_energy_two_sided(instance: &ProblemInstance) -> Result<Schedule> {
    let verdict = check_feasibility(instance);
    if !verdict.feasible {
        return Err(Error::Infeasible(verdict));
    }
    if let Some(&i) = split_points(instance).first() {
        return Err(Error::NotDecomposed(i));
    }
    let w = Window::from_instance(instance, 0..instance.len(), 0.0, instance.end_time());
    let out = run_window(&w);
    Schedule::from_parts(out.durations, out.departures)
}

/// Energy-optimal schedule of any feasible instance: decomposes at forced
/// idle points and concatenates the per-segment schedules.
pub fn schedule_energy(instance: &ProblemInstance) -> Result<Schedule> {
    Ok(schedule_energy_traced(instance)?.schedule)
}

pub fn schedule_energy_traced(instance: &ProblemInstance) -> Result<EnergyRun> {
    let dec = decompose(instance)?;
    let mut durations = Vec::with_capacity(instance.len());
    let mut departures = Vec::with_capacity(instance.len());
    let mut batches = Vec::new();
    for seg in &dec.segments {
        let w = Window::from_instance(instance, seg.packets.clone(), seg.origin, seg.end_time);
        let out = run_window(&w);
        durations.extend(out.durations);
        departures.extend(out.departures);
        batches.extend(out.batches);
    }
    Ok(EnergyRun {
        schedule: Schedule::from_parts(durations, departures)?,
        batches,
    })
}

/// Schedule plus its cost under `cost`. The schedule itself does not depend
/// on the cost model.
pub fn schedule_energy_with_cost(instance: &ProblemInstance, cost: &dyn CostModel) -> Result<(Schedule, f64)> {
    let s = schedule_energy(instance)?;
    let c = s.total_cost(cost);
    Ok((s, c))
}

/// True when the energy schedules under both cost models are bitwise equal.
pub fn cost_independence_check(instance: &ProblemInstance, a: &dyn CostModel, b: &dyn CostModel) -> bool {
    match (schedule_energy_with_cost(instance, a), schedule_energy_with_cost(instance, b)) {
        (Ok((sa, _)), Ok((sb, _))) => {
            let bits = |s: &Schedule| -> Vec<u64> {
                s.durations()
                    .iter()
                    .chain(s.departures())
                    .map(|x| x.to_bits())
                    .collect()
            };
            bits(&sa) == bits(&sb)
        }
        (Err(_), Err(_)) => true,
        _ => false,
    }
}
