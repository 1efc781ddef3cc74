#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twosided_core::{
    check_feasibility, feasibility::split_points, schedule_energy, BudgetedInstance, Bound, CostKind, ProblemInstance,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy)]
pub struct Shape {
    pub max_packets: usize,
    /// Probability that a packet gets a pre-delay.
    pub pre: f64,
    /// Probability that a packet gets a post-delay.
    pub post: f64,
}

pub const TWO_SIDED: Shape = Shape { max_packets: 6, pre: 0.6, post: 0.6 };
pub const POST_ONLY: Shape = Shape { max_packets: 6, pre: 0.0, post: 0.7 };

/// Random feasible instance; retries until the feasibility check passes.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: Shape) -> ProblemInstance {
    loop {
        if let Some(inst) = raw_instance(rng, shape) {
            if check_feasibility(&inst).feasible {
                return inst;
            }
        }
    }
}

/// One draw from the generator, feasible or not.
pub fn raw_instance(rng: &mut ChaCha8Rng, shape: Shape) -> Option<ProblemInstance> {
    let m = rng.gen_range(1..=shape.max_packets);
    let mut t = vec![0.0];
    for _ in 1..m {
        let last = *t.last().unwrap();
        t.push(last + rng.gen_range(0.2..5.0));
    }
    let t_m = t[m - 1];
    let t_r = t_m + rng.gen_range(1.0..10.0);
    let pre: Vec<Bound> = t
        .iter()
        .map(|&ti| {
            if rng.gen_bool(shape.pre) {
                Bound::Finite(rng.gen_range(0.3..1.1) * (t_r - ti))
            } else {
                Bound::Unbounded
            }
        })
        .collect();
    let t_e = match pre[m - 1] {
        Bound::Finite(p) => t_m + p,
        Bound::Unbounded => t_r,
    };
    let post: Vec<Bound> = (0..m)
        .map(|i| {
            let nu = match pre[i] {
                Bound::Finite(p) if i + 1 < m => t[i] + p,
                _ => t_e,
            };
            if rng.gen_bool(shape.post) {
                let top = nu.min(t_r);
                let floor = t[i] + rng.gen_range(0.0..0.999) * (top - t[i]);
                Bound::Finite(t_r - floor)
            } else {
                Bound::Unbounded
            }
        })
        .collect();
    if post.iter().any(|p| matches!(p, Bound::Finite(v) if !(*v > 0.0))) {
        return None;
    }
    ProblemInstance::new(t, pre, post, t_r).ok()
}

/// Feasible instance with at least one forced idle gap. Pre-delays are drawn
/// against the gap to the next arrival so that some of them run out before it.
pub fn decomposable_instance(rng: &mut ChaCha8Rng, max_packets: usize) -> ProblemInstance {
    loop {
        let m = rng.gen_range(2..=max_packets);
        let mut t = vec![0.0];
        for _ in 1..m {
            let last = *t.last().unwrap();
            t.push(last + rng.gen_range(0.5..5.0));
        }
        let t_r = t[m - 1] + rng.gen_range(1.0..6.0);
        let pre: Vec<Bound> = (0..m)
            .map(|i| {
                let gap = if i + 1 < m { t[i + 1] - t[i] } else { t_r - t[i] };
                if rng.gen_bool(0.7) {
                    Bound::Finite(rng.gen_range(0.3..1.6) * gap)
                } else {
                    Bound::Unbounded
                }
            })
            .collect();
        let post: Vec<Bound> = (0..m)
            .map(|i| {
                if rng.gen_bool(0.4) {
                    // floor somewhere between the arrival and a little after it
                    Bound::Finite(t_r - t[i] - rng.gen_range(0.0..0.5))
                } else {
                    Bound::Unbounded
                }
            })
            .collect();
        let Ok(inst) = ProblemInstance::new(t, pre, post, t_r) else {
            continue;
        };
        if check_feasibility(&inst).feasible && !split_points(&inst).is_empty() {
            return inst;
        }
    }
}

/// Budget between the minimal energy and six times it; `None` when the
/// minimal energy is too large to be a sensible budget (Shannon overflow).
pub fn random_budget(rng: &mut ChaCha8Rng, inst: &ProblemInstance, cost: CostKind) -> Option<BudgetedInstance> {
    let base = schedule_energy(inst).ok()?.total_cost(cost.build().as_ref());
    if !(base < 1e6) {
        return None;
    }
    let factor = if rng.gen_bool(0.3) { rng.gen_range(1.0..1.1) } else { rng.gen_range(1.0..6.0) };
    BudgetedInstance::new(inst.clone(), cost, base * factor).ok()
}
