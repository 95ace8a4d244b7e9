// scratch probes for sphere seed robustness and deep-trunk sweep stability
use deepls::analytic::{cylinder_solution, sphere_solution};
use deepls::config::{cylinder_config, sphere_config, RunConfig};
use deepls::geometry::CollocationBatch;
use deepls::loss::WeightMode;
use deepls::optimize::train;
use deepls::transform::MaterialModel;
use deepls::verify::error_report;
use deepls::NetworkField;
use std::time::Instant;

fn run(tag: &str, seed: u64, base: RunConfig, sphere: bool, tweak: impl Fn(&mut RunConfig)) {
    let t0 = Instant::now();
    let mut cfg = base;
    cfg.network.seed = seed;
    cfg.sampling.seed = seed;
    tweak(&mut cfg);
    let resolved = cfg.resolve().unwrap();
    let batch = CollocationBatch::sample(
        &resolved.domain,
        &resolved.segments,
        cfg.sampling.n_interior,
        cfg.sampling.n_boundary,
        seed,
    )
    .unwrap();
    let theta0 = resolved.network.init_parameters(seed);
    let state = train(
        &resolved.network,
        &theta0.data,
        &batch,
        &resolved.material,
        &resolved.weights,
        &resolved.train,
    )
    .unwrap();
    let mat = MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap();
    let reference: Box<dyn deepls::Field> = if sphere {
        Box::new(sphere_solution(0.3, 1.0, 10.0, 1.0, mat.clone()).unwrap())
    } else {
        Box::new(cylinder_solution(0.3, 1.0, 10.0, 1.0, mat).unwrap())
    };
    let predicted = NetworkField::new(&resolved.network, &state.theta);
    let rep = error_report(
        &predicted,
        reference.as_ref(),
        &resolved.material,
        &resolved.domain,
        20_000,
        9,
    )
    .unwrap();
    println!(
        "{tag} seed {seed}: rel_p {:.4e} rel_u {:.4e} loss {:.3e} {:.0}s",
        rep.rel_p(),
        rep.rel_u(),
        state.final_loss,
        t0.elapsed().as_secs_f64()
    );
}

fn main() {
    for seed in [0u64, 1, 2] {
        run("cyl d6w64 n2k a1500", seed, cylinder_config(), false, |c| {
            c.network.depth = 6;
            c.network.width = 64;
            c.optimizer.adam.epochs = 1500;
            c.optimizer.lbfgs.max_iters = 300;
        });
    }
    for seed in [1u64, 2] {
        run("sph lr1e-3 a5k l800", seed, sphere_config(), true, |c| {
            c.optimizer.adam.learning_rate = 1e-3;
            c.optimizer.adam.epochs = 5000;
            c.optimizer.lbfgs.max_iters = 800;
        });
    }
    for seed in [0u64, 1, 2] {
        run("cyl d2w64 n2k a1500", seed, cylinder_config(), false, |c| {
            c.network.depth = 2;
            c.network.width = 64;
            c.optimizer.adam.epochs = 1500;
            c.optimizer.lbfgs.max_iters = 300;
        });
    }
}
