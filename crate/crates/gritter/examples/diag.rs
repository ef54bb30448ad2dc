//! Scratch diagnostics for training dynamics (not shipped docs).
use gritter::artifacts::preprocess;
use gritter::policy::{train_loop, TrainConfig};
use gritter::synth::{generate_instance, GeneratorConfig};

fn main() {
    for i in 0..4u64 {
        let nodes = 140 + (i as usize % 4) * 40;
        let cfg = GeneratorConfig {
            seed: 4000 + i,
            nodes,
            treated_fraction: 0.3,
            extent: (30_000.0, 30_000.0),
            depots: 3,
            name: format!("diag-{i}"),
            ..GeneratorConfig::default()
        };
        let inst = generate_instance(&cfg).unwrap();
        let (network, _) = preprocess(&inst.network, &inst.fleet).unwrap();
        let fleet = inst.fleet.resolve(&network).unwrap();
        let tc = TrainConfig { iterations: 10, seed: 6000 + i, ..TrainConfig::default() };
        let out = train_loop(&network, &fleet, &tc).unwrap();
        println!("== instance {i}: {} required, warm {:?}", network.required_edges().count(), out.warm_start);
        for r in &out.log {
            println!(
                "  iter {:2} z1 {:8.3} z2 {:9.3} nov {:2} reward {:9.5} best {:8.5} failed {}",
                r.iter, r.z1_minutes, r.z2_kg, r.vehicles, r.reward, r.best_so_far, r.failed
            );
        }
    }
}
