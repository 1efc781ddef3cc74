//! Random instances, baseline schedulers and parameter sweeps.
//!
//! Every generated packet may depart in `[t_i + T, t_i + 2T]`. Baselines
//! drop some of the constraints, schedule the reduced problem and are then
//! scored against the original one: a packet counts as successful when its
//! departure lies inside its original window. All transmissions count
//! towards the spent energy or time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cost::CostModel;
use crate::energy::{schedule_energy, schedule_single_deadline};
use crate::error::{Error, Result};
use crate::model::{Bound, ProblemInstance, Schedule};
use crate::time::schedule_time_with;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub packets: usize,
    pub reference_time: f64,
    /// Half-width `T` of the valid departure region.
    pub window: f64,
    pub seed: u64,
    pub trials: usize,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.packets == 0 {
            return Err(Error::Domain("at least one packet per trial is required".into()));
        }
        if !(self.window > 0.0 && self.reference_time.is_finite() && 2.0 * self.window < self.reference_time) {
            return Err(Error::Domain(format!(
                "need 0 < 2T < t_R, got T = {} and t_R = {}",
                self.window, self.reference_time
            )));
        }
        Ok(())
    }

    pub fn with_window(self, window: f64) -> Self {
        Self { window, ..self }
    }
}

/// Instance for trial `trial`. The generator is ChaCha8 seeded with
/// `spec.seed`, on stream `trial`, so trials can run in any order.
pub fn generate_instance(spec: &GeneratorSpec, trial: u64) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial);
    let span = spec.reference_time - 2.0 * spec.window;
    let arrivals = loop {
        let mut t: Vec<f64> = (0..spec.packets).map(|_| rng.gen_range(0.0..=span)).collect();
        t.sort_by(f64::total_cmp);
        let t0 = t[0];
        for x in &mut t {
            *x -= t0;
        }
        if t.windows(2).all(|w| w[1] > w[0]) {
            break t;
        }
    };
    let m = arrivals.len();
    let post = arrivals
        .iter()
        .map(|t| Bound::Finite(spec.reference_time - t - spec.window))
        .collect();
    ProblemInstance::new(arrivals, vec![Bound::Finite(2.0 * spec.window); m], post, spec.reference_time)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    TwoSided,
    PreOnly,
    PostOnly,
    NoIndividual,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::TwoSided,
        BaselineKind::PreOnly,
        BaselineKind::PostOnly,
        BaselineKind::NoIndividual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::TwoSided => "two_sided",
            BaselineKind::PreOnly => "pre_only",
            BaselineKind::PostOnly => "post_only",
            BaselineKind::NoIndividual => "no_individual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Energy,
    Time { w_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineOutcome {
    /// `None` when the reduced problem could not be scheduled.
    pub schedule: Option<Schedule>,
    pub successes: usize,
    /// Energy or completion time spent, if a schedule exists.
    pub total: Option<f64>,
    /// `total / successes`; infinite with zero successes or no schedule.
    #[serde(serialize_with = "inf_as_string")]
    pub metric: f64,
}

fn inf_as_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn count_successes(original: &ProblemInstance, s: &Schedule) -> usize {
    let eps = original.tolerance();
    (0..original.len())
        .filter(|&k| {
            let d = s.departures()[k];
            original.deadline(k).is_none_or(|nu| d <= nu + eps)
                && original.floor(k).is_none_or(|f| d >= f - eps)
        })
        .count()
}

/// Single-deadline instance over `arrivals` ending at `end`.
fn bare(instance: &ProblemInstance, end: f64) -> Result<ProblemInstance> {
    ProblemInstance::single_deadline(instance.arrivals().to_vec(), end)
}

/// Budget equalization without any deadline: the unconstrained problem has
/// no end time, so the frame is widened until the budget fits.
fn time_without_deadlines(instance: &ProblemInstance, cost: &dyn CostModel, w_max: f64) -> Result<Schedule> {
    let t_m = *instance.arrivals().last().unwrap();
    let mut end = instance.reference_time().max(t_m + 1.0);
    for _ in 0..200 {
        match schedule_time_with(&bare(instance, end)?, cost, w_max) {
            Ok(r) => return Ok(r.schedule),
            Err(Error::InsufficientBudget { .. }) => end = t_m + 2.0 * (end - t_m),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Domain("budget too small for any finite completion time".into()))
}

fn reduced_schedule(instance: &ProblemInstance, kind: BaselineKind, cost: &dyn CostModel, objective: Objective) -> Result<Schedule> {
    let reduced = match kind {
        BaselineKind::TwoSided => instance.clone(),
        BaselineKind::PreOnly => instance.without_post_delays(),
        BaselineKind::PostOnly => instance.without_pre_delays()?,
        BaselineKind::NoIndividual => bare(instance, instance.reference_time())?,
    };
    match (objective, kind) {
        (Objective::Energy, BaselineKind::NoIndividual) => {
            let t = reduced.arrivals();
            let d: Vec<f64> = (0..t.len()).map(|i| reduced.next_arrival(i) - t[i]).collect();
            schedule_single_deadline(&d, reduced.end_time())
        }
        (Objective::Energy, _) => schedule_energy(&reduced),
        (Objective::Time { w_max }, BaselineKind::NoIndividual) => time_without_deadlines(&reduced, cost, w_max),
        (Objective::Time { w_max }, _) => Ok(schedule_time_with(&reduced, cost, w_max)?.schedule),
    }
}

/// Runs one baseline and scores it against the original instance.
pub fn run_baseline(instance: &ProblemInstance, kind: BaselineKind, cost: &dyn CostModel, objective: Objective) -> BaselineOutcome {
    match reduced_schedule(instance, kind, cost, objective) {
        Ok(s) => {
            let successes = count_successes(instance, &s);
            let total = match objective {
                Objective::Energy => s.total_cost(cost),
                Objective::Time { .. } => s.last_departure(),
            };
            let metric = if successes == 0 {
                f64::INFINITY
            } else {
                total / successes as f64
            };
            BaselineOutcome {
                schedule: Some(s),
                successes,
                total: Some(total),
                metric,
            }
        }
        Err(_) => BaselineOutcome {
            schedule: None,
            successes: 0,
            total: None,
            metric: f64::INFINITY,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub baseline: BaselineKind,
    pub successes: usize,
    pub total: Option<f64>,
    #[serde(serialize_with = "inf_as_string")]
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub baseline: BaselineKind,
    pub trials: usize,
    pub successes_total: usize,
    /// Σ totals ÷ Σ successes over trials with a schedule.
    #[serde(serialize_with = "inf_as_string")]
    pub metric_agg: f64,
    /// Mean of per-trial metrics over trials with a finite metric.
    #[serde(serialize_with = "inf_as_string")]
    pub metric_mean_of_ratios: f64,
    /// Trials whose reduced problem could not be scheduled.
    pub infeasible_trials: usize,
    /// Scheduled trials with zero successes.
    pub zero_success_trials: usize,
    /// Successes ÷ packets over scheduled trials.
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: f64,
    pub summaries: Vec<BaselineSummary>,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// `"T"` for window sweeps, `"w_max"` for budget sweeps.
    pub axis_name: String,
    pub objective: String,
    pub cost: String,
    pub spec: GeneratorSpec,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn summary(&self, axis_index: usize, kind: BaselineKind) -> &BaselineSummary {
        self.points[axis_index]
            .summaries
            .iter()
            .find(|s| s.baseline == kind)
            .expect("every baseline is summarized")
    }

    /// One row per axis value and baseline.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
        w.write_record([
            "axis",
            "baseline",
            "trials",
            "successes_total",
            "metric_agg",
            "metric_mean_of_ratios",
            "infeasible_trials",
        ])
        .map_err(io)?;
        for p in &self.points {
            for s in &p.summaries {
                w.write_record([
                    p.axis.to_string(),
                    s.baseline.name().to_string(),
                    s.trials.to_string(),
                    s.successes_total.to_string(),
                    s.metric_agg.to_string(),
                    s.metric_mean_of_ratios.to_string(),
                    s.infeasible_trials.to_string(),
                ])
                .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn summarize(kind: BaselineKind, records: &[TrialRecord], packets: usize) -> BaselineSummary {
    let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.baseline == kind).collect();
    let scheduled: Vec<&&TrialRecord> = mine.iter().filter(|r| r.total.is_some()).collect();
    let successes_total: usize = scheduled.iter().map(|r| r.successes).sum();
    let total: f64 = scheduled.iter().map(|r| r.total.unwrap()).sum();
    let finite: Vec<f64> = scheduled.iter().map(|r| r.metric).filter(|m| m.is_finite()).collect();
    BaselineSummary {
        baseline: kind,
        trials: mine.len(),
        successes_total,
        metric_agg: if successes_total == 0 {
            f64::INFINITY
        } else {
            total / successes_total as f64
        },
        metric_mean_of_ratios: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        infeasible_trials: mine.len() - scheduled.len(),
        zero_success_trials: scheduled.iter().filter(|r| r.successes == 0).count(),
        success_rate: if scheduled.is_empty() {
            0.0
        } else {
            successes_total as f64 / (scheduled.len() * packets) as f64
        },
    }
}

fn sweep_point(spec: &GeneratorSpec, axis: f64, cost: &dyn CostModel, objective: Objective) -> Result<SweepPoint> {
    spec.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let inst = generate_instance(spec, trial)?;
            Ok(BaselineKind::ALL
                .iter()
                .map(|&kind| {
                    let o = run_baseline(&inst, kind, cost, objective);
                    TrialRecord {
                        trial,
                        baseline: kind,
                        successes: o.successes,
                        total: o.total,
                        metric: o.metric,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let trials: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let summaries = BaselineKind::ALL
        .iter()
        .map(|&k| summarize(k, &trials, spec.packets))
        .collect();
    Ok(SweepPoint {
        axis,
        summaries,
        trials,
    })
}

/// Energy per successful packet over a ladder of window sizes `T`.
pub fn sweep_energy(spec: &GeneratorSpec, windows: &[f64], cost: &dyn CostModel) -> Result<SweepReport> {
    if windows.is_empty() {
        return Err(Error::Domain("empty window ladder".into()));
    }
    let points = windows
        .iter()
        .map(|&t| sweep_point(&spec.with_window(t), t, cost, Objective::Energy))
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        axis_name: "T".into(),
        objective: "energy".into(),
        cost: cost.label(),
        spec: *spec,
        points,
    })
}

/// Completion time per successful packet over a ladder of budgets.
pub fn sweep_time(spec: &GeneratorSpec, budgets: &[f64], cost: &dyn CostModel) -> Result<SweepReport> {
    if budgets.is_empty() {
        return Err(Error::Domain("empty budget ladder".into()));
    }
    let points = budgets
        .iter()
        .map(|&w| sweep_point(spec, w, cost, Objective::Time { w_max: w }))
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        axis_name: "w_max".into(),
        objective: "time".into(),
        cost: cost.label(),
        spec: *spec,
        points,
    })
}

/// Window ladder of the energy experiment (`t_R = 100`, `M = 30`).
pub const FIG6_WINDOWS: [f64; 12] = [1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 45.0];
/// Budget ladder of the time experiment (`t_R = 20`, `M = 5`, `T = 3`).
pub const FIG7_BUDGETS: [f64; 10] = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0];

pub fn fig6_spec(trials: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        packets: 30,
        reference_time: 100.0,
        window: FIG6_WINDOWS[0],
        seed,
        trials,
    }
}

pub fn fig7_spec(trials: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        packets: 5,
        reference_time: 20.0,
        window: 3.0,
        seed,
        trials,
    }
}
