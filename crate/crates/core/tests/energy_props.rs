#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use common::{decomposable_instance, random_instance, raw_instance, rng, Shape, POST_ONLY, TWO_SIDED};
use twosided_core::{
    check_feasibility, check_lemma1, classify, cost_independence_check, decompose, oracle_energy, schedule_energy,
    verify_schedule, CostModel, InverseCost, OracleConfig, ShannonCost,
};

fn assert_matches_oracle(seed: u64, cases: usize, cost: &dyn CostModel) {
    let cfg = OracleConfig::default();
    let mut r = rng(seed);
    let mut checked = 0;
    for case in 0..cases {
        let inst = random_instance(&mut r, TWO_SIDED);
        let s = schedule_energy(&inst).unwrap();
        let ours = s.total_cost(cost);
        if !(ours < 1e6) {
            continue;
        }
        let report = verify_schedule(&inst, &s, cost);
        assert!(report.is_valid(), "case {case}: {:?}", report.violations());
        let (_, theirs) = oracle_energy(&inst, cost, inst.end_time(), &cfg).unwrap();
        assert!(
            (ours - theirs).abs() <= 1e-6 * (1.0 + theirs),
            "case {case}: ours {ours} oracle {theirs}\n{inst:?}"
        );
        checked += 1;
    }
    assert!(checked > cases * 9 / 10);
}

#[test]
fn energy_matches_oracle_inverse() {
    assert_matches_oracle(11, 400, &InverseCost);
}

#[test]
fn energy_matches_oracle_shannon() {
    assert_matches_oracle(12, 400, &ShannonCost::new(1.0));
}

#[test]
fn output_does_not_depend_on_cost() {
    let mut r = rng(13);
    for _ in 0..400 {
        let inst = random_instance(&mut r, TWO_SIDED);
        assert!(cost_independence_check(&inst, &InverseCost, &ShannonCost::new(1.0)));
        assert!(cost_independence_check(&inst, &ShannonCost::new(0.5), &ShannonCost::new(4.0)));
    }
}

#[test]
fn lemma1_holds_on_random_outputs() {
    let mut r = rng(14);
    for case in 0..2000 {
        let inst = random_instance(&mut r, TWO_SIDED);
        let s = schedule_energy(&inst).unwrap();
        let structure = classify(&inst, &s).unwrap();
        let bad = check_lemma1(&structure);
        assert!(bad.is_empty(), "case {case}: {bad:?}\n{inst:?}\n{:?}", s.durations());
    }
}

#[test]
fn post_only_durations_non_increasing() {
    let mut r = rng(15);
    for case in 0..2000 {
        let inst = random_instance(&mut r, POST_ONLY);
        let s = schedule_energy(&inst).unwrap();
        let tol = inst.tolerance();
        assert!(
            s.durations().windows(2).all(|p| p[1] <= p[0] + tol),
            "case {case}: {:?}",
            s.durations()
        );
        let structure = classify(&inst, &s).unwrap();
        let sizes: Vec<f64> = structure.subgroups().map(|g| g.duration).collect();
        assert!(sizes.windows(2).all(|p| p[1] <= p[0] + tol));
    }
}

#[test]
fn decomposed_schedule_matches_whole_instance_oracle() {
    let cfg = OracleConfig::default();
    let mut r = rng(16);
    for case in 0..200 {
        let inst = decomposable_instance(&mut r, 6);
        assert!(!decompose(&inst).unwrap().is_trivial());
        let s = schedule_energy(&inst).unwrap();
        assert!(verify_schedule(&inst, &s, &InverseCost).is_valid(), "case {case}");
        let ours = s.total_cost(&InverseCost);
        let (_, theirs) = oracle_energy(&inst, &InverseCost, inst.end_time(), &cfg).unwrap();
        assert!((ours - theirs).abs() <= 1e-6 * (1.0 + theirs), "case {case}: {ours} vs {theirs}");
    }
}

#[test]
fn feasibility_verdict_agrees_with_scheduler() {
    // anything the check accepts gets a valid schedule; anything it rejects
    // makes the scheduler refuse
    let mut r = rng(17);
    let shape = Shape { max_packets: 5, pre: 0.8, post: 0.8 };
    let (mut yes, mut no) = (0, 0);
    while yes < 300 || no < 300 {
        let Some(inst) = raw_instance(&mut r, shape) else { continue };
        let verdict = check_feasibility(&inst);
        match schedule_energy(&inst) {
            Ok(s) => {
                assert!(verdict.feasible, "{inst:?}");
                assert!(verify_schedule(&inst, &s, &InverseCost).is_valid());
                yes += 1;
            }
            Err(_) => {
                assert!(!verdict.feasible, "{inst:?}");
                assert!(!verdict.violations.is_empty());
                no += 1;
            }
        }
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let mut r = rng(18);
    for _ in 0..200 {
        let inst = random_instance(&mut r, TWO_SIDED);
        let a = schedule_energy(&inst).unwrap();
        let b = schedule_energy(&inst).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.durations()), bits(b.durations()));
    }
}
