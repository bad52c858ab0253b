//! Workload builders shared by the kernel benchmarks.

use dynakernel::{corpus, NodeModel, Point, Simulation, SimulationConfig, DEFAULT_MODEL};

/// `n` nodes of `behavior` (or inert nodes) scattered uniformly over the
/// default 800×600 plane.
pub fn scattered(n: usize, behavior: Option<&str>, seed: u64) -> Simulation {
    let mut sim = Simulation::new(SimulationConfig {
        seed,
        ..SimulationConfig::default()
    });
    if let Some(name) = behavior {
        let factory = corpus::behavior(name).expect("corpus behavior");
        sim.set_model(DEFAULT_MODEL, NodeModel::with_behavior(factory))
            .expect("valid model");
    }
    let (w, h) = sim.topology().dimensions();
    for _ in 0..n {
        let rng = sim.rng_mut();
        let p = Point::new(rng.uniform(0.0, w), rng.uniform(0.0, h));
        sim.add_node(p, DEFAULT_MODEL)
            .expect("default model exists");
    }
    sim.set_recording(false);
    sim
}
