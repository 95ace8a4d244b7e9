// scratch probe for the reciprocity width trend; not part of the deliverable
use deepls::config::footing_config;
use deepls::geometry::CollocationBatch;
use deepls::optimize::train;
use deepls::verify::betti_residual;
use deepls::NetworkField;
use std::time::Instant;

fn pair_eta(width: usize, epochs: usize, lbfgs: usize, seed: u64) -> f64 {
    let make = |p1: f64, p3: f64| {
        let mut cfg = footing_config(p1, p3);
        cfg.network.width = width;
        cfg.network.seed = seed;
        cfg.sampling.seed = seed;
        cfg.optimizer.adam.epochs = epochs;
        cfg.optimizer.lbfgs.max_iters = lbfgs;
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
        (resolved, state)
    };
    let (r1, s1) = make(10.0, 1.0);
    let (r2, s2) = make(1.0, 10.0);
    let f1 = NetworkField::new(&r1.network, &s1.theta);
    let f2 = NetworkField::new(&r2.network, &s2.theta);
    betti_residual(&f1, &r1.segments, &f2, &r2.segments, &r1.material, 2000)
        .unwrap()
        .eta_b
        .unwrap()
}

fn main() {
    for seed in 0..3u64 {
        for &w in &[16usize, 32, 64] {
            let t0 = Instant::now();
            let eta = pair_eta(w, 2500, 1000, seed);
            println!("width {w:>2} seed {seed}: eta {eta:.4e}  {:.0}s", t0.elapsed().as_secs_f64());
        }
    }
}
