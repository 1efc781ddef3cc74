//! Reference solvers used to check the schedulers.
//!
//! The energy problem is solved directly over departure times: minimize
//! `Σ w(s_k − max(s_{k−1}, t_k))` over a nondecreasing vector inside a box,
//! with `s_M` pinned to the end time. Nothing here calls into the energy or
//! time schedulers.

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::model::{BudgetedInstance, ProblemInstance, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// Exhaustive lattice search; at most four packets.
    Grid,
    /// Spectral projected gradient.
    Descent,
    /// Grid for up to four packets, descent otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub grid_points: usize,
    pub max_iterations: usize,
    /// Relative objective change below which descent stops.
    pub convergence_tol: f64,
    pub mode: OracleMode,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_points: 200,
            max_iterations: 20_000,
            convergence_tol: 1e-14,
            mode: OracleMode::Descent,
        }
    }
}

const GRID_MAX_PACKETS: usize = 4;

/// Box `[lo_k, hi_k]` for every departure, tightened so both bound vectors
/// are nondecreasing.
struct Region<'a> {
    arrivals: &'a [f64],
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Region<'a> {
    fn new(instance: &'a ProblemInstance, end: f64) -> Result<Self> {
        let m = instance.len();
        let t = instance.arrivals();
        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        for k in 0..m {
            if k + 1 == m {
                hi[k] = end;
                lo[k] = end;
                if let Some(nu) = instance.deadline(k) {
                    if end > nu {
                        return Err(Error::OracleInfeasible(format!("end time {end} is after t_E = {nu}")));
                    }
                }
            } else {
                hi[k] = instance.deadline(k).map_or(end, |nu| nu.min(end));
                // must not idle unless the next arrival is beyond reach
                lo[k] = t[k + 1].min(hi[k]);
            }
            if let Some(f) = instance.floor(k) {
                lo[k] = lo[k].max(f);
            }
        }
        for k in 1..m {
            lo[k] = lo[k].max(lo[k - 1]);
        }
        for k in (0..m - 1).rev() {
            hi[k] = hi[k].min(hi[k + 1]);
        }
        if let Some(k) = (0..m).find(|&k| lo[k] > hi[k]) {
            return Err(Error::OracleInfeasible(format!(
                "packet {} has lower bound {} above upper bound {}",
                k + 1,
                lo[k],
                hi[k]
            )));
        }
        Ok(Self { arrivals: t, lo, hi })
    }

    fn durations(&self, s: &[f64]) -> Vec<f64> {
        let mut prev = f64::NEG_INFINITY;
        s.iter()
            .zip(self.arrivals)
            .map(|(&sk, &tk)| {
                let tau = sk - prev.max(tk);
                prev = sk;
                tau
            })
            .collect()
    }

    fn objective(&self, s: &[f64], w: &dyn CostModel) -> f64 {
        let mut total = 0.0;
        for tau in self.durations(s) {
            if !(tau > 0.0) {
                return f64::INFINITY;
            }
            total += w.evaluate(tau);
        }
        total
    }

    fn gradient(&self, s: &[f64], w: &dyn CostModel) -> Vec<f64> {
        let tau = self.durations(s);
        let m = s.len();
        (0..m)
            .map(|k| {
                let mut g = w.derivative(tau[k]);
                if k + 1 < m && s[k] >= self.arrivals[k + 1] {
                    g -= w.derivative(tau[k + 1]);
                }
                g
            })
            .collect()
    }

    /// Euclidean projection onto the nondecreasing vectors in the box.
    fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut s = y.to_vec();
        isotonic(&mut s, &self.lo, &self.hi);
        s
    }

    /// Strictly increasing interior start between the earliest and latest paths.
    fn start(&self) -> Vec<f64> {
        let m = self.lo.len();
        (0..m)
            .map(|k| {
                let theta = (k + 1) as f64 / (m + 1) as f64;
                (1.0 - theta) * self.lo[k] + theta * self.hi[k]
            })
            .collect()
    }
}

/// Pool-adjacent-violators fit of a nondecreasing sequence with
/// `lo_k ≤ y_k ≤ hi_k`, both bounds nondecreasing. A pooled block sits at its
/// mean clamped to the tightest bounds inside it.
fn isotonic(y: &mut [f64], lo: &[f64], hi: &[f64]) {
    struct Block {
        sum: f64,
        n: usize,
        lo: f64,
        hi: f64,
    }
    impl Block {
        fn value(&self) -> f64 {
            (self.sum / self.n as f64).clamp(self.lo, self.hi)
        }
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(y.len());
    for k in 0..y.len() {
        blocks.push(Block { sum: y[k], n: 1, lo: lo[k], hi: hi[k] });
        while blocks.len() > 1 && blocks[blocks.len() - 2].value() > blocks[blocks.len() - 1].value() {
            let b = blocks.pop().unwrap();
            let a = blocks.last_mut().unwrap();
            a.sum += b.sum;
            a.n += b.n;
            // bounds are nondecreasing, so the tightest ones are at the ends
            a.lo = b.lo;
        }
    }
    let mut i = 0;
    for b in blocks {
        let v = b.value();
        for x in &mut y[i..i + b.n] {
            *x = v;
        }
        i += b.n;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nonmonotone line-search window of the spectral projected gradient.
const SPG_MEMORY: usize = 10;

fn descent(region: &Region<'_>, w: &dyn CostModel, config: &OracleConfig) -> Result<(Vec<f64>, f64)> {
    let (alpha_min, alpha_max) = (1e-14, 1e14);
    let mut x = region.start();
    let mut f = region.objective(&x, w);
    if !f.is_finite() {
        return Err(Error::OracleInfeasible("no strictly increasing start point".into()));
    }
    let mut g = region.gradient(&x, w);
    let gmax = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut alpha = if gmax > 0.0 { (1.0 / gmax).clamp(alpha_min, alpha_max) } else { 1.0 };
    let mut history = vec![f];
    let scale = 1.0 + region.hi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut quiet = 0;

    for _ in 0..config.max_iterations {
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
        let p = region.project(&trial);
        let d: Vec<f64> = p.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope = dot(&g, &d);
        let step = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if slope >= 0.0 || step <= 1e-15 * scale {
            return Ok((x, f));
        }
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..100 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + lambda * b).collect();
            let fc = region.objective(&cand, w);
            if fc <= reference + 1e-4 * lambda * slope {
                accepted = Some((cand, fc));
                break;
            }
            lambda *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            return Ok((x, f));
        };
        let gn = region.gradient(&xn, w);
        let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        alpha = if sy > 0.0 {
            (dot(&sv, &sv) / sy).clamp(alpha_min, alpha_max)
        } else {
            alpha_max
        };
        let change = (f - fnew).abs();
        x = xn;
        g = gn;
        f = fnew;
        history.push(f);
        if history.len() > SPG_MEMORY {
            history.remove(0);
        }
        if change <= config.convergence_tol * (1.0 + f.abs()) {
            quiet += 1;
            if quiet >= 2 * SPG_MEMORY {
                return Ok((x, f));
            }
        } else {
            quiet = 0;
        }
    }
    Ok((x, f))
}

/// Longest run of coordinate sweeps after descent.
const POLISH_SWEEPS: usize = 200_000;

/// Cyclic exact minimization over one departure at a time. Zero durations
/// cost infinitely much, so at the optimum only box bounds are active and
/// coordinate minimization reaches it; descent just gets close fast.
fn polish(region: &Region<'_>, w: &dyn CostModel, mut x: Vec<f64>) -> (Vec<f64>, f64, bool) {
    let m = x.len();
    let t = region.arrivals;
    let scale = 1.0 + region.hi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    // d/ds_k of the two durations touching s_k
    let slope = |x: &[f64], k: usize, s: f64| -> f64 {
        let prev = if k == 0 { t[0] } else { x[k - 1].max(t[k]) };
        let mut g = w.derivative(s - prev);
        if k + 1 < m && s >= t[k + 1] {
            g -= w.derivative(x[k + 1] - s);
        }
        g
    };
    for _ in 0..POLISH_SWEEPS {
        let mut moved = 0.0_f64;
        for k in 0..m {
            let mut a = region.lo[k];
            let mut b = region.hi[k];
            if k > 0 {
                a = a.max(x[k - 1]);
            }
            if k + 1 < m {
                b = b.min(x[k + 1]);
            }
            if !(b > a) {
                continue;
            }
            // the slope is nondecreasing; find where it changes sign
            let (mut l, mut r) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                if mid <= l || mid >= r {
                    break;
                }
                if slope(&x, k, mid) < 0.0 {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            let mut best = if slope(&x, k, l) < 0.0 { r } else { l };
            // never land on a neighbour: that is an infinite-cost point
            if (k > 0 && best <= x[k - 1] && a == x[k - 1]) || (k + 1 < m && best >= x[k + 1] && b == x[k + 1]) {
                best = x[k];
            }
            let old = x[k];
            let before = region.objective(&x, w);
            x[k] = best;
            // bisection noise must not make things worse
            if !(region.objective(&x, w) <= before) {
                x[k] = old;
            }
            moved = moved.max((x[k] - old).abs());
        }
        if moved <= 1e-15 * scale {
            let f = region.objective(&x, w);
            return (x, f, true);
        }
    }
    let f = region.objective(&x, w);
    (x, f, false)
}

fn grid(region: &Region<'_>, w: &dyn CostModel, points: usize) -> Result<(Vec<f64>, f64)> {
    let m = region.lo.len();
    let levels: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let (lo, hi) = (region.lo[k], region.hi[k]);
            if hi - lo <= 0.0 {
                vec![lo]
            } else {
                (0..points)
                    .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
                    .collect()
            }
        })
        .collect();

    struct Search<'r, 'a> {
        region: &'r Region<'a>,
        levels: Vec<Vec<f64>>,
        w: &'r dyn CostModel,
        current: Vec<f64>,
        best: Option<(Vec<f64>, f64)>,
    }

    impl Search<'_, '_> {
        fn go(&mut self, k: usize, prev: f64, acc: f64) {
            if k == self.levels.len() {
                if self.best.as_ref().is_none_or(|(_, b)| acc < *b) {
                    self.best = Some((self.current.clone(), acc));
                }
                return;
            }
            let t = self.region.arrivals[k];
            for i in 0..self.levels[k].len() {
                let s = self.levels[k][i];
                let tau = s - prev.max(t);
                if !(tau > 0.0) {
                    continue;
                }
                let c = acc + self.w.evaluate(tau);
                if self.best.as_ref().is_some_and(|(_, b)| c >= *b) {
                    continue;
                }
                self.current[k] = s;
                self.go(k + 1, s, c);
            }
        }
    }

    let mut search = Search {
        region,
        levels,
        w,
        current: vec![0.0; m],
        best: None,
    };
    search.go(0, f64::NEG_INFINITY, 0.0);
    search
        .best
        .ok_or_else(|| Error::OracleInfeasible("no lattice point keeps departures increasing".into()))
}

/// Minimal-energy schedule of `instance` whose last packet departs at `end_time`.
pub fn oracle_energy(
    instance: &ProblemInstance,
    cost: &dyn CostModel,
    end_time: f64,
    config: &OracleConfig,
) -> Result<(Schedule, f64)> {
    if config.grid_points < 50 || !(config.convergence_tol > 0.0) {
        return Err(Error::Domain("oracle needs grid_points ≥ 50 and a positive tolerance".into()));
    }
    let region = Region::new(instance, end_time)?;
    let use_grid = match config.mode {
        OracleMode::Grid => {
            if instance.len() > GRID_MAX_PACKETS {
                return Err(Error::Domain(format!(
                    "grid mode supports at most {GRID_MAX_PACKETS} packets"
                )));
            }
            true
        }
        OracleMode::Descent => false,
        OracleMode::Auto => instance.len() <= GRID_MAX_PACKETS,
    };
    let (s, c) = if use_grid {
        grid(&region, cost, config.grid_points)?
    } else {
        let (start, _) = descent(&region, cost, config)?;
        let (s, c, converged) = polish(&region, cost, start);
        if !converged {
            return Err(Error::OracleNoConvergence {
                iterations: config.max_iterations,
                best: Schedule::from_departures(instance.arrivals(), s)?,
                best_cost: c,
            });
        }
        (s, c)
    };
    Ok((Schedule::from_departures(instance.arrivals(), s)?, c))
}

/// Minimal completion time under the budget, by bisection on the end time
/// of [`oracle_energy`]. Returns the schedule at the upper bracket.
pub fn oracle_time(budgeted: &BudgetedInstance, config: &OracleConfig) -> Result<(Schedule, f64)> {
    let inst = &budgeted.instance;
    let w = budgeted.cost.build();
    let m = inst.len();
    let t_e = inst.end_time();
    let energy = |end: f64| -> Result<Option<(Schedule, f64)>> {
        match oracle_energy(inst, w.as_ref(), end, config) {
            Ok(r) => Ok(Some(r)),
            Err(Error::OracleInfeasible(_)) => Ok(None),
            Err(Error::OracleNoConvergence { best, best_cost, .. }) => Ok(Some((best, best_cost))),
            Err(e) => Err(e),
        }
    };
    let fits = |r: &Option<(Schedule, f64)>| r.as_ref().is_some_and(|(_, c)| *c <= budgeted.w_max);

    let top = energy(t_e)?;
    if !fits(&top) {
        return Err(Error::InsufficientBudget {
            required: top.map_or(f64::INFINITY, |(_, c)| c),
            available: budgeted.w_max,
        });
    }
    let max_floor = (0..m).filter_map(|k| inst.floor(k)).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = inst.arrivals()[m - 1].max(max_floor);
    if lo > inst.arrivals()[m - 1] {
        let r = energy(lo)?;
        if fits(&r) {
            let (s, _) = r.unwrap();
            return Ok((s, lo));
        }
    }
    let mut hi = t_e;
    let mut best = top.unwrap().0;
    while hi - lo > 1e-9 * t_e {
        let mid = 0.5 * (lo + hi);
        let r = energy(mid)?;
        if fits(&r) {
            hi = mid;
            best = r.unwrap().0;
        } else {
            lo = mid;
        }
    }
    Ok((best, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostKind, InverseCost};
    use crate::model::verify_schedule;

    fn grid_cfg() -> OracleConfig {
        OracleConfig {
            mode: OracleMode::Grid,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn isotonic_pools_violators() {
        let mut y = [1.0, 3.0, 2.0, 0.0, 5.0];
        let open = [f64::NEG_INFINITY; 5];
        let top = [f64::INFINITY; 5];
        isotonic(&mut y, &open, &top);
        assert_eq!(y, [1.0, 5.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0, 5.0]);
    }

    #[test]
    fn isotonic_respects_pinned_bounds() {
        // the last value is pinned; pooling with its raw target would pull
        // the third value far below where it belongs
        let mut y = [9.8, 19.0, 20.9, 15.2, 26.7];
        let lo = [0.0, 20.0, 20.0, 20.8, 20.9];
        let hi = [20.9, 20.9, 20.9, 20.9, 20.9];
        isotonic(&mut y, &lo, &hi);
        assert_eq!(y, [9.8, 20.0, 20.8, 20.8, 20.9]);
    }

    #[test]
    fn fig3_example2() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 4.0, 12.0, 30.0], 32.0).unwrap();
        let want = 3.0 / 10.0 + 0.5;
        let (s, c) = oracle_energy(&inst, &InverseCost, 32.0, &OracleConfig::default()).unwrap();
        assert!((c - want).abs() < 1e-9, "{c} {:?}", s.durations());
        assert!(verify_schedule(&inst, &s, &InverseCost).is_valid());
        let (_, cg) = oracle_energy(&inst, &InverseCost, 32.0, &grid_cfg()).unwrap();
        assert!(cg >= want - 1e-12 && cg - want < 1e-3);
    }

    #[test]
    fn single_packet_at_upper_bound() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![6.0], vec![9.0], 12.0).unwrap();
        let (s, c) = oracle_energy(&inst, &InverseCost, 6.0, &OracleConfig::default()).unwrap();
        assert_eq!(s.departures(), &[6.0]);
        assert!((c - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fig4_cost() {
        let inst = ProblemInstance::from_f64(
            vec![0.0, 4.0, 10.0, 18.0],
            vec![24.0, 16.0, 34.0, 23.0],
            vec![37.0, 31.0, 8.0, 24.0],
            41.0,
        )
        .unwrap();
        let want = 0.2 + 1.0 / 13.0 + 0.125;
        let (_, c) = oracle_energy(&inst, &InverseCost, 41.0, &OracleConfig::default()).unwrap();
        assert!((c - want).abs() <= 1e-9, "{c} vs {want}");
    }

    #[test]
    fn empty_region() {
        let inst = ProblemInstance::from_f64(vec![0.0], vec![6.0], vec![9.0], 12.0).unwrap();
        assert!(matches!(
            oracle_energy(&inst, &InverseCost, 2.0, &OracleConfig::default()),
            Err(Error::OracleInfeasible(_))
        ));
    }

    #[test]
    fn grid_rejects_large_instances() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 1.0, 2.0, 3.0, 4.0], 10.0).unwrap();
        assert!(oracle_energy(&inst, &InverseCost, 10.0, &grid_cfg()).is_err());
    }

    #[test]
    fn grid_and_descent_agree() {
        let inst = ProblemInstance::from_f64(vec![0.0, 1.0, 3.5], vec![4.0, 6.0, 5.0], vec![9.0, 8.0, 7.0], 10.0)
            .unwrap();
        let cfg = grid_cfg();
        let (sg, _) = oracle_energy(&inst, &InverseCost, inst.end_time(), &cfg).unwrap();
        let (sd, _) = oracle_energy(&inst, &InverseCost, inst.end_time(), &OracleConfig::default()).unwrap();
        let h = inst.end_time() / (cfg.grid_points - 1) as f64;
        for (a, b) in sg.departures().iter().zip(sd.departures()) {
            assert!((a - b).abs() <= 2.0 * h, "{a} vs {b}");
        }
    }

    #[test]
    fn time_examples() {
        let cfg = OracleConfig::default();
        let one = ProblemInstance::single_deadline(vec![0.0], 10.0).unwrap();
        let (_, t) = oracle_time(&BudgetedInstance::new(one, CostKind::Inverse, 0.5).unwrap(), &cfg).unwrap();
        assert!((t - 2.0).abs() <= 1e-8);

        let two = ProblemInstance::single_deadline(vec![0.0, 3.0], 10.0).unwrap();
        let (_, t) = oracle_time(&BudgetedInstance::new(two, CostKind::Inverse, 0.5).unwrap(), &cfg).unwrap();
        assert!((t - 8.0).abs() <= 1e-8);

        let post = ProblemInstance::from_f64(vec![0.0], vec![f64::INFINITY], vec![4.0], 10.0).unwrap();
        let (_, t) = oracle_time(&BudgetedInstance::new(post, CostKind::Inverse, 1.0).unwrap(), &cfg).unwrap();
        assert_eq!(t, 6.0);
    }

    #[test]
    fn time_insufficient_budget() {
        let inst = ProblemInstance::from_f64(vec![0.0, 2.0], vec![10.0, 2.0], vec![f64::INFINITY; 2], 10.0).unwrap();
        let b = BudgetedInstance::new(inst, CostKind::Inverse, 0.6).unwrap();
        match oracle_time(&b, &OracleConfig::default()) {
            Err(Error::InsufficientBudget { required, .. }) => assert!((required - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_non_increasing_in_end_time() {
        let inst = ProblemInstance::single_deadline(vec![0.0, 1.0, 4.0], 20.0).unwrap();
        let cfg = OracleConfig::default();
        let mut prev = f64::INFINITY;
        for end in [4.5, 6.0, 9.0, 14.0, 20.0] {
            let (_, c) = oracle_energy(&inst, &InverseCost, end, &cfg).unwrap();
            assert!(c <= prev + 1e-12);
            prev = c;
        }
    }
}
