use excitable::bfgs::{minimize, BfgsOptions};
use excitable::ena::{collect_pdvs, extract_ena, ExtractConfig, GridSpec};
use excitable::esn::{build_random_esn, run_closed_loop};
use excitable::fixed_points::{aggregate, find_fixed_points, AggregateConfig, SearchConfig, VelocityField};
use excitable::task::{self, TaskConfig};
use excitable::train::{derive_seed, train, TrainConfig};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed = 4u64;
    let model = build_random_esn(500, 2, 2, 0.95, 0.9, 1.0, 1e-4, seed).unwrap();
    let task_cfg = TaskConfig { bits: 2, pulse_prob: 0.1, length: 10_000, seed: 100 + seed };
    let cfg = TrainConfig { ridge_lambda: 4.0, washout: 100, train_length: 50_000, noise_std: 1e-4 };
    let out = train(&model, &task_cfg, &cfg).unwrap();
    let tr = out.model.trained_reservoir().unwrap();
    let data = task::generate(&task_cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x51));
    let traj = run_closed_loop(&out.model, &tr, &data.inputs, Some(&data.targets), &DVector::zeros(500), 1e-4, &mut rng).unwrap();
    let sc = SearchConfig::new(500, derive_seed(seed, 0xF1));
    let fp_out = find_fixed_points(&tr, &traj, &sc).unwrap();
    let fps = aggregate(&tr, &fp_out.candidates, &AggregateConfig::new(1e-6, derive_seed(seed, 0xA6))).unwrap();
    let pdvs = collect_pdvs(&traj);
    let ecfg = ExtractConfig::new(GridSpec { dim: 3, edge_length: 18.0, points_per_edge: 12 });
    let graph = extract_ena(&tr, out.model.readout().unwrap(), &fps, &pdvs, &ecfg).unwrap();
    let field = VelocityField::new(&tr);
    for (i, n) in graph.nodes.iter().enumerate() {
        let q = field.energy(&n.location);
        let qn = field.velocity(&n.location).norm();
        println!("node {i}: energy={:.2e} |Q|={:.2e} discovered={}", q, qn, n.discovered);
    }
    // pairwise distances
    for i in 0..graph.nodes.len() {
        for j in (i + 1)..graph.nodes.len() {
            let d = (&graph.nodes[i].location - &graph.nodes[j].location).norm();
            if d < 1.0 {
                println!("close pair ({i},{j}): dist={d:.4}");
                // re-polish node j harder
                let r = minimize(|x| field.energy_and_gradient(x), &graph.nodes[j].location,
                    &BfgsOptions { max_iters: 2000, grad_tol: 1e-12, ..Default::default() });
                let di = (&r.x - &graph.nodes[i].location).norm();
                let dj = (&r.x - &graph.nodes[j].location).norm();
                println!("   harder polish: status={:?} q={:.2e} -> dist to i={di:.2e}, moved={dj:.2e}", r.status, r.value);
            }
        }
    }
}
