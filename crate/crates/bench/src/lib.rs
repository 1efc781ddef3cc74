//! Fixed inputs shared by the criterion benches.

use twosided_core::bench::{generate_instance, GeneratorSpec};
use twosided_core::{BudgetedInstance, CostKind, ProblemInstance};

/// A generated instance with `packets` packets in the energy-sweep setup.
pub fn energy_instance(packets: usize, seed: u64) -> ProblemInstance {
    let spec = GeneratorSpec {
        packets,
        reference_time: 100.0,
        window: 10.0,
        seed,
        trials: 1,
    };
    generate_instance(&spec, 0).expect("valid generator spec")
}

/// A generated instance in the time-sweep setup with a budget that always
/// suffices (each packet may take at least `T`).
pub fn time_instance(packets: usize, seed: u64) -> BudgetedInstance {
    let spec = GeneratorSpec {
        packets,
        reference_time: 20.0 * packets as f64,
        window: 3.0,
        seed,
        trials: 1,
    };
    let inst = generate_instance(&spec, 0).expect("valid generator spec");
    let w_max = packets as f64;
    BudgetedInstance::new(inst, CostKind::Inverse, w_max).expect("positive budget")
}
