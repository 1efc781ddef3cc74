//! Problem instances, schedules and schedule verification.

use serde::{Deserialize, Serialize};

use crate::cost::{CostKind, CostModel};
use crate::error::{Error, Result};

/// A delay bound that may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Bound::Unbounded)
    }
}

impl From<f64> for Bound {
    fn from(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            Bound::Unbounded
        } else {
            Bound::Finite(v)
        }
    }
}

/// Equality tolerance used for every tightness and criticality test on a
/// frame ending at `end_time`.
pub fn eq_tolerance(end_time: f64) -> f64 {
    1e-9 * end_time.abs().max(1.0)
}

/// An offline scheduling problem: FIFO arrivals with per-packet pre- and
/// post-transmission delay bounds relative to a reference time `t_R`.
///
/// Packet `i` must depart within `[t_R − T_post,i, t_i + T_pre,i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    arrivals: Vec<f64>,
    pre_delays: Vec<Bound>,
    post_delays: Vec<Bound>,
    reference_time: f64,
}

impl ProblemInstance {
    pub fn new(
        arrivals: Vec<f64>,
        pre_delays: Vec<Bound>,
        post_delays: Vec<Bound>,
        reference_time: f64,
    ) -> Result<Self> {
        let m = arrivals.len();
        if m == 0 {
            return Err(Error::InvalidInstance("at least one packet is required".into()));
        }
        if pre_delays.len() != m || post_delays.len() != m {
            return Err(Error::InvalidInstance(format!(
                "expected {m} pre- and post-delays, got {} and {}",
                pre_delays.len(),
                post_delays.len()
            )));
        }
        if arrivals[0] != 0.0 {
            return Err(Error::InvalidInstance("the first arrival must be at time 0".into()));
        }
        if arrivals.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInstance("arrival times must be finite".into()));
        }
        if let Some(i) = arrivals.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInstance(format!(
                "arrivals must be strictly increasing (packet {})",
                i + 2
            )));
        }
        for (name, delays) in [("pre", &pre_delays), ("post", &post_delays)] {
            for (i, d) in delays.iter().enumerate() {
                if let Bound::Finite(v) = d {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(Error::InvalidInstance(format!(
                            "{name}-delay of packet {} must be positive, got {v}",
                            i + 1
                        )));
                    }
                }
            }
        }
        if !(reference_time.is_finite() && reference_time > 0.0) {
            return Err(Error::InvalidInstance("reference time must be positive".into()));
        }
        let inst = Self {
            arrivals,
            pre_delays,
            post_delays,
            reference_time,
        };
        if inst.end_time() <= inst.arrivals[m - 1] {
            return Err(Error::InvalidInstance(
                "end time must be later than the last arrival".into(),
            ));
        }
        Ok(inst)
    }

    /// Convenience constructor taking `f64::INFINITY` for absent bounds.
    pub fn from_f64(
        arrivals: Vec<f64>,
        pre_delays: Vec<f64>,
        post_delays: Vec<f64>,
        reference_time: f64,
    ) -> Result<Self> {
        Self::new(
            arrivals,
            pre_delays.into_iter().map(Bound::from).collect(),
            post_delays.into_iter().map(Bound::from).collect(),
            reference_time,
        )
    }

    /// No individual deadlines: every packet only has to be sent by `t_R`.
    pub fn single_deadline(arrivals: Vec<f64>, reference_time: f64) -> Result<Self> {
        let m = arrivals.len();
        Self::new(
            arrivals,
            vec![Bound::Unbounded; m],
            vec![Bound::Unbounded; m],
            reference_time,
        )
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    pub fn pre_delays(&self) -> &[Bound] {
        &self.pre_delays
    }

    pub fn post_delays(&self) -> &[Bound] {
        &self.post_delays
    }

    pub fn reference_time(&self) -> f64 {
        self.reference_time
    }

    /// `t_E = t_M + T_pre,M`, or `t_R` when the last packet has no pre-delay.
    pub fn end_time(&self) -> f64 {
        let m = self.len();
        match self.pre_delays[m - 1] {
            Bound::Finite(p) => self.arrivals[m - 1] + p,
            Bound::Unbounded => self.reference_time,
        }
    }

    /// Pre-delay-induced departure deadline `ν_i` (0-based), if any.
    pub fn deadline(&self, i: usize) -> Option<f64> {
        if i + 1 == self.len() {
            return Some(self.end_time());
        }
        self.pre_delays[i].finite().map(|p| self.arrivals[i] + p)
    }

    /// Post-delay-induced departure floor `t_R − T_post,i` (0-based), if any.
    pub fn floor(&self, i: usize) -> Option<f64> {
        self.post_delays[i].finite().map(|p| self.reference_time - p)
    }

    /// The arrival after packet `i`, with `t_{M+1} = t_E`.
    pub fn next_arrival(&self, i: usize) -> f64 {
        self.arrivals.get(i + 1).copied().unwrap_or_else(|| self.end_time())
    }

    pub fn tolerance(&self) -> f64 {
        eq_tolerance(self.end_time())
    }

    /// Copy of this instance with every post-delay removed.
    pub fn without_post_delays(&self) -> Self {
        Self {
            post_delays: vec![Bound::Unbounded; self.len()],
            ..self.clone()
        }
    }

    /// Copy of this instance with every pre-delay removed (end time becomes `t_R`).
    pub fn without_pre_delays(&self) -> Result<Self> {
        Self::new(
            self.arrivals.clone(),
            vec![Bound::Unbounded; self.len()],
            self.post_delays.clone(),
            self.reference_time,
        )
    }

    pub fn has_pre_delays(&self) -> bool {
        self.pre_delays.iter().any(|b| !b.is_unbounded())
    }
}

/// An instance paired with an energy budget `w_max` for completion-time
/// minimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetedInstance {
    pub instance: ProblemInstance,
    pub cost: CostKind,
    pub w_max: f64,
}

impl BudgetedInstance {
    pub fn new(instance: ProblemInstance, cost: CostKind, w_max: f64) -> Result<Self> {
        if !(w_max.is_finite() && w_max > 0.0) {
            return Err(Error::InvalidInstance(format!("energy budget must be positive, got {w_max}")));
        }
        Ok(Self { instance, cost, w_max })
    }
}

/// Quantities derived from an instance that the schedulers work with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedBounds {
    /// `d_i = t_{i+1} − t_i`, with `t_{M+1} = t_E`.
    pub inter_arrivals: Vec<f64>,
    /// `ν_i = t_i + T_pre,i`.
    pub departure_deadlines: Vec<Bound>,
    /// `t_R − T_post,i`; unbounded means no floor.
    pub departure_floors: Vec<Bound>,
    pub end_time: f64,
}

pub fn derive_bounds(instance: &ProblemInstance) -> DerivedBounds {
    let m = instance.len();
    let end_time = instance.end_time();
    DerivedBounds {
        inter_arrivals: (0..m)
            .map(|i| instance.next_arrival(i) - instance.arrivals[i])
            .collect(),
        departure_deadlines: (0..m)
            .map(|i| match instance.pre_delays[i] {
                Bound::Finite(p) => Bound::Finite(instance.arrivals[i] + p),
                Bound::Unbounded if i + 1 == m => Bound::Finite(end_time),
                Bound::Unbounded => Bound::Unbounded,
            })
            .collect(),
        departure_floors: (0..m)
            .map(|i| match instance.floor(i) {
                Some(f) => Bound::Finite(f),
                None => Bound::Unbounded,
            })
            .collect(),
        end_time,
    }
}

/// Transmission durations with their departure times.
///
/// Built with [`Schedule::from_durations`] the packets are sent back to back
/// starting at time 0. [`Schedule::from_departures`] also allows idle gaps
/// (a packet never starts before its arrival).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    durations: Vec<f64>,
    departures: Vec<f64>,
}

impl Schedule {
    pub fn from_durations(durations: Vec<f64>) -> Result<Self> {
        check_positive(&durations)?;
        let departures = durations
            .iter()
            .scan(0.0, |acc, tau| {
                *acc += tau;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            durations,
            departures,
        })
    }

    /// Durations are `s_k − max(s_{k−1}, t_k)`.
    pub fn from_departures(arrivals: &[f64], departures: Vec<f64>) -> Result<Self> {
        if arrivals.len() != departures.len() {
            return Err(Error::Domain("one departure per arrival is required".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        let durations: Vec<f64> = departures
            .iter()
            .zip(arrivals)
            .map(|(&s, &t)| {
                let tau = s - prev.max(t);
                prev = s;
                tau
            })
            .collect();
        check_positive(&durations)?;
        Ok(Self {
            durations,
            departures,
        })
    }

    /// For schedulers that track both vectors themselves; keeps their exact
    /// departure values instead of re-deriving them from sums.
    pub(crate) fn from_parts(durations: Vec<f64>, departures: Vec<f64>) -> Result<Self> {
        check_positive(&durations)?;
        debug_assert_eq!(durations.len(), departures.len());
        Ok(Self {
            durations,
            departures,
        })
    }

    pub fn len(&self) -> usize {
        self.durations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.durations.is_empty()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn departures(&self) -> &[f64] {
        &self.departures
    }

    /// Start of packet `i`'s transmission.
    pub fn start(&self, i: usize) -> f64 {
        self.departures[i] - self.durations[i]
    }

    pub fn last_departure(&self) -> f64 {
        *self.departures.last().expect("schedules are non-empty")
    }

    pub fn total_cost(&self, cost: &dyn CostModel) -> f64 {
        self.durations.iter().map(|&t| cost.evaluate(t)).sum()
    }

    /// `Σ τ_i`.
    pub fn completion_time(&self) -> f64 {
        self.durations.iter().sum()
    }
}

fn check_positive(durations: &[f64]) -> Result<()> {
    if durations.is_empty() {
        return Err(Error::Domain("a schedule needs at least one packet".into()));
    }
    match durations.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
        Some(i) => Err(Error::Domain(format!(
            "duration of packet {} must be positive and finite, got {}",
            i + 1,
            durations[i]
        ))),
        None => Ok(()),
    }
}

/// `Σ w(τ_i)`.
pub fn total_cost(durations: &[f64], cost: &dyn CostModel) -> Result<f64> {
    check_positive(durations)?;
    Ok(durations.iter().map(|&t| cost.evaluate(t)).sum())
}

/// `T_c = Σ τ_i`.
pub fn completion_time(durations: &[f64]) -> Result<f64> {
    check_positive(durations)?;
    Ok(durations.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonIdling,
    PreDelay,
    PostDelay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 0-based packet index.
    pub packet: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub non_idling_ok: Vec<bool>,
    pub pre_ok: Vec<bool>,
    pub post_ok: Vec<bool>,
    pub total_cost: f64,
    pub completion_time: f64,
}

impl VerificationReport {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.non_idling_ok.len() {
            for (ok, kind) in [
                (self.non_idling_ok[i], ViolationKind::NonIdling),
                (self.pre_ok[i], ViolationKind::PreDelay),
                (self.post_ok[i], ViolationKind::PostDelay),
            ] {
                if !ok {
                    out.push(Violation { packet: i, kind });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.non_idling_ok
            .iter()
            .chain(&self.pre_ok)
            .chain(&self.post_ok)
            .all(|&ok| ok)
    }
}

/// Checks the energy-problem constraints: non-idling, the last departure at
/// exactly `t_E`, and every pre- and post-delay.
///
/// An idle gap after packet `k` is accepted only where it is forced, i.e. the
/// next arrival lies beyond `ν_k`; the packet must then depart exactly at `ν_k`.
pub fn verify_schedule(
    instance: &ProblemInstance,
    schedule: &Schedule,
    cost: &dyn CostModel,
) -> VerificationReport {
    verify(instance, schedule, cost, true)
}

/// Like [`verify_schedule`] but for completion-time schedules, whose last
/// departure may be anywhere up to `t_E`.
pub fn verify_time_schedule(
    instance: &ProblemInstance,
    schedule: &Schedule,
    cost: &dyn CostModel,
) -> VerificationReport {
    verify(instance, schedule, cost, false)
}

fn verify(
    instance: &ProblemInstance,
    schedule: &Schedule,
    cost: &dyn CostModel,
    fixed_end: bool,
) -> VerificationReport {
    let m = instance.len();
    assert_eq!(schedule.len(), m, "schedule length must match the instance");
    let eps = instance.tolerance();
    let s = schedule.departures();
    let t = instance.arrivals();

    let mut non_idling_ok = Vec::with_capacity(m);
    for k in 0..m {
        let ok = if k + 1 < m {
            let next_start = schedule.start(k + 1);
            if s[k] >= t[k + 1] - eps {
                (next_start - s[k]).abs() <= eps
            } else {
                match instance.deadline(k) {
                    Some(nu) if nu < t[k + 1] - eps => {
                        (s[k] - nu).abs() <= eps && (next_start - t[k + 1]).abs() <= eps
                    }
                    _ => false,
                }
            }
        } else if fixed_end {
            (s[k] - instance.end_time()).abs() <= eps
        } else {
            s[k] <= instance.end_time() + eps
        };
        let started_on_time = k > 0 || schedule.start(0) >= -eps;
        non_idling_ok.push(ok && started_on_time);
    }

    let pre_ok = (0..m)
        .map(|k| instance.deadline(k).is_none_or(|nu| s[k] <= nu + eps))
        .collect();
    let post_ok = (0..m)
        .map(|k| instance.floor(k).is_none_or(|f| s[k] >= f - eps))
        .collect();

    VerificationReport {
        non_idling_ok,
        pre_ok,
        post_ok,
        total_cost: schedule.total_cost(cost),
        completion_time: schedule.completion_time(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::InverseCost;

    const INF: f64 = f64::INFINITY;

    fn fig4() -> ProblemInstance {
        ProblemInstance::from_f64(
            vec![0.0, 4.0, 10.0, 18.0],
            vec![24.0, 16.0, 34.0, 23.0],
            vec![37.0, 31.0, 8.0, 24.0],
            41.0,
        )
        .unwrap()
    }

    #[test]
    fn derive_bounds_single_deadline() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 2.0, 5.0, 7.5], 10.0).unwrap();
        let b = derive_bounds(&inst);
        assert_eq!(b.inter_arrivals, vec![2.0, 3.0, 2.5, 2.5]);
        assert_eq!(b.end_time, 10.0);
    }

    #[test]
    fn derive_bounds_single_packet_region() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![6.0], vec![9.0], 12.0).unwrap();
        let b = derive_bounds(&inst);
        assert_eq!(b.departure_floors, vec![Bound::Finite(3.0)]);
        assert_eq!(b.departure_deadlines, vec![Bound::Finite(6.0)]);
        assert_eq!(b.end_time, 6.0);
    }

    #[test]
    fn derive_bounds_two_sided() {
        let b = derive_bounds(&fig4());
        let nu: Vec<f64> = b.departure_deadlines.iter().map(|d| d.finite().unwrap()).collect();
        assert_eq!(nu, vec![24.0, 20.0, 44.0, 41.0]);
        assert_eq!(b.end_time, 41.0);
        assert!(b.inter_arrivals.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn rejects_invalid_instances() {
        assert!(ProblemInstance::from_f64(vec![], vec![], vec![], 1.0).is_err());
        assert!(ProblemInstance::from_f64(vec![1.0], vec![INF], vec![INF], 5.0).is_err());
        assert!(ProblemInstance::from_f64(vec![0.0, 0.0], vec![INF; 2], vec![INF; 2], 5.0).is_err());
        assert!(ProblemInstance::from_f64(vec![0.0], vec![0.0], vec![INF], 5.0).is_err());
        assert!(ProblemInstance::from_f64(vec![0.0], vec![INF], vec![-1.0], 5.0).is_err());
        assert!(ProblemInstance::from_f64(vec![0.0], vec![INF], vec![INF], 0.0).is_err());
        assert!(ProblemInstance::from_f64(vec![0.0, 1.0], vec![INF, 2.0], vec![INF; 2], 5.0).is_ok());
        assert!(ProblemInstance::from_f64(vec![0.0, 6.0], vec![INF; 2], vec![INF; 2], 5.0).is_err());
    }

    #[test]
    fn verify_fig3_example2() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 4.0, 12.0, 30.0], 32.0).unwrap();
        let s = Schedule::from_durations(vec![10.0, 10.0, 10.0, 2.0]).unwrap();
        let r = verify_schedule(&inst, &s, &InverseCost);
        assert!(r.is_valid(), "{:?}", r.violations());
        assert_eq!(r.completion_time, 32.0);
    }

    #[test]
    fn verify_reports_idle_gap() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 3.0], 4.0).unwrap();
        let s = Schedule::from_durations(vec![1.0, 1.0]).unwrap();
        let r = verify_schedule(&inst, &s, &InverseCost);
        assert_eq!(r.non_idling_ok, vec![false, false]);
        assert!(r.pre_ok.iter().all(|&b| b));
    }

    #[test]
    fn verify_fig4_post_delay_tight() {
        let inst = fig4();
        let s = Schedule::from_durations(vec![10.0, 10.0, 13.0, 8.0]).unwrap();
        let r = verify_schedule(&inst, &s, &InverseCost);
        assert!(r.is_valid(), "{:?}", r.violations());
        assert_eq!(s.departures()[2], inst.floor(2).unwrap());
    }

    #[test]
    fn verify_accepts_forced_idle_only_at_deadline() {
        // d_1 = 5 > T_pre,1 = 2
        let inst = ProblemInstance::from_f64(vec![0.0, 5.0], vec![2.0, 3.0], vec![INF; 2], 20.0).unwrap();
        let good = Schedule::from_departures(inst.arrivals(), vec![2.0, 8.0]).unwrap();
        assert!(verify_schedule(&inst, &good, &InverseCost).is_valid());
        let early = Schedule::from_departures(inst.arrivals(), vec![1.5, 8.0]).unwrap();
        let r = verify_schedule(&inst, &early, &InverseCost);
        assert_eq!(r.violations(), vec![Violation { packet: 0, kind: ViolationKind::NonIdling }]);
    }

    #[test]
    fn sums() {
        assert_eq!(total_cost(&[2.0, 2.0], &InverseCost).unwrap(), 1.0);
        let c = total_cost(&[10.0, 10.0, 13.0, 8.0], &InverseCost).unwrap();
        assert!((c - (0.1 + 0.1 + 1.0 / 13.0 + 0.125)).abs() < 1e-15);
        assert!((c - 0.4019).abs() < 1e-4);
        assert_eq!(completion_time(&[8.0; 4]).unwrap(), 32.0);
        assert!(matches!(total_cost(&[1.0, 0.0], &InverseCost), Err(Error::Domain(_))));
        assert!(completion_time(&[-1.0]).is_err());
    }

    #[test]
    fn departures_strictly_increasing() {
        let s = Schedule::from_durations(vec![0.5, 3.0, 1e-3, 7.0]).unwrap();
        assert!(s.departures().windows(2).all(|w| w[1] > w[0]));
    }
}
