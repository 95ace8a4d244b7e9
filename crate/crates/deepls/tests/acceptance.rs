//! End-to-end acceptance suite. Each test prints a single pass line with the
//! measured quantities; the test name identifies the criterion. Tests run
//! sequentially (libtest defaults to one thread per core and this target is
//! calibrated for a single-core box).

use std::time::Instant;

use deepls::analytic::{cylinder_solution, layered_solution, sphere_solution, LayeredSolution};
use deepls::config::{
    cylinder_config, footing_config, layered_config, sphere_config, Resolved, RunConfig,
};
use deepls::geometry::layered_segments;
use deepls::loss::{
    adaptive_reweight, empirical_objective_field, residual_r1, residual_r2, residual_r3,
    residual_r4, LossHistory,
};
use deepls::network::{Network, NetworkConfig};
use deepls::optimize::{adam_step, lbfgs_run, train, AdamConfig, AdamState, LbfgsConfig, LbfgsStatus, TrainerState};
use deepls::transform::{hopf_cole_forward, hopf_cole_inverse, lambert_w0, MaterialModel};
use deepls::verify::{betti_residual, capacity_sweep, error_report, median};
use deepls::{
    Activation, CollocationBatch, Domain, Field, FieldEval, LossBreakdown, NetworkField, Point,
    ResidualWeights,
};

fn pass(criterion: u32, detail: &str) {
    println!("[criterion {criterion:02}] pass: {detail}");
}

/// Train a configured problem with both seeds pinned, returning everything
/// needed for evaluation.
fn run_case(mut cfg: RunConfig, seed: u64) -> (Resolved, TrainerState, CollocationBatch) {
    cfg.network.seed = seed;
    cfg.sampling.seed = seed;
    let resolved = cfg.resolve().expect("preset config resolves");
    let batch = CollocationBatch::sample(
        &resolved.domain,
        &resolved.segments,
        cfg.sampling.n_interior,
        cfg.sampling.n_boundary,
        cfg.sampling.seed,
    )
    .expect("sampling");
    let theta0 = resolved.network.init_parameters(seed);
    let state = train(
        &resolved.network,
        &theta0.data,
        &batch,
        &resolved.material,
        &resolved.weights,
        &resolved.train,
    )
    .expect("training");
    (resolved, state, batch)
}

#[test]
fn criterion_01_transform_roundtrip_and_lambert_w() {
    let t0 = Instant::now();
    // Hopf-Cole roundtrip across the physical pressure range and the full
    // slippage range from tight shale down to the Darcy limit.
    for &beta in &[0.0, 0.1, 1.0, 10.0, 200.0] {
        let material = MaterialModel::scalar(1.0, beta, 1.0, 1.0).unwrap();
        for k in -3..=3 {
            let p = 10f64.powi(k);
            let pp = hopf_cole_forward(&material, p).unwrap();
            let back = hopf_cole_inverse(&material, pp).unwrap();
            let rel = ((back - p) / p).abs();
            assert!(rel <= 1e-10, "roundtrip p={p} beta={beta}: rel={rel:e}");
        }
    }
    // Defining identity w e^w = x over the principal-branch domain.
    let mut xs: Vec<f64> = vec![
        -1.0 / std::f64::consts::E + 1e-9,
        -0.367,
        -0.3,
        -0.2,
        -0.1,
        -0.01,
        0.0,
    ];
    for k in -12..=6 {
        for &m in &[1.0, 3.0] {
            xs.push(m * 10f64.powi(k));
        }
    }
    for &x in &xs {
        let w = lambert_w0(x).unwrap();
        let resid = (w * w.exp() - x).abs();
        let rel = resid / x.abs().max(1.0);
        assert!(rel <= 1e-12, "identity at x={x}: rel={rel:e}");
    }
    // Independent bisection oracle for W(1) on w e^w - 1 = 0 over [0, 1].
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() - 1.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((oracle - 0.5671432904).abs() < 1e-9);
    assert!((lambert_w0(1.0).unwrap() - oracle).abs() <= 1e-12);
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "criterion 1 took {elapsed:.3}s (limit 1 s)");
    pass(1, &format!("roundtrip<=1e-10, W identity<=1e-12, W(1) vs bisection<=1e-12, {elapsed:.3}s"));
}

#[test]
fn criterion_02_derivatives_match_finite_differences() {
    let t0 = Instant::now();
    let net = Network::new(NetworkConfig {
        depth: 3,
        width: 16,
        frequencies: NetworkConfig::default_frequencies(2, 2.0 * 2f64.sqrt()),
        activation: Activation::Tanh,
        nd: 2,
        seed: 5,
    })
    .unwrap();
    let theta = net.init_parameters(5).data;
    let mut ws = net.workspace();
    let domain = Domain::Annulus { r_i: 0.3, r_o: 1.0 };
    let pts = domain.sample_interior(100, 42).unwrap();
    let h = 1e-5;
    let mut worst_spatial = 0.0f64;
    for x in &pts {
        let e = net.forward_with_spatial_derivs(&theta, x, &mut ws);
        for d in 0..2 {
            let mut xp = *x;
            let mut xm = *x;
            xp[d] += h;
            xm[d] -= h;
            let ep = net.forward_with_spatial_derivs(&theta, &xp, &mut ws);
            let em = net.forward_with_spatial_derivs(&theta, &xm, &mut ws);
            let fd_gp = (ep.p - em.p) / (2.0 * h);
            let rel = (e.grad_p[d] - fd_gp).abs() / fd_gp.abs().max(1e-3);
            worst_spatial = worst_spatial.max(rel);
        }
        // divergence against summed central differences of the velocity head
        let mut fd_div = 0.0;
        for d in 0..2 {
            let mut xp = *x;
            let mut xm = *x;
            xp[d] += h;
            xm[d] -= h;
            fd_div += (net.forward_with_spatial_derivs(&theta, &xp, &mut ws).u[d]
                - net.forward_with_spatial_derivs(&theta, &xm, &mut ws).u[d])
                / (2.0 * h);
        }
        worst_spatial = worst_spatial.max((e.div_u - fd_div).abs() / fd_div.abs().max(1e-3));
    }
    assert!(worst_spatial <= 1e-6, "spatial FD mismatch {worst_spatial:e}");

    // Parameter gradients: directional derivatives of the empirical objective.
    let cfg = cylinder_config();
    let resolved = cfg.resolve().unwrap();
    let batch =
        CollocationBatch::sample(&resolved.domain, &resolved.segments, 120, 30, 7).unwrap();
    let theta = resolved.network.init_parameters(3).data;
    let weights = ResidualWeights::default();
    let mut ws = resolved.network.workspace();
    let mut grad = vec![0.0; theta.len()];
    deepls::loss::objective_gradient(
        &resolved.network,
        &theta,
        &batch,
        &resolved.material,
        &weights,
        &mut ws,
        &mut grad,
    )
    .unwrap();
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let obj = |th: &[f64]| {
        deepls::loss::empirical_objective(&resolved.network, th, &batch, &resolved.material, &weights)
            .unwrap()
            .total
    };
    let hp = 1e-6;
    let mut worst_param = 0.0f64;
    for _ in 0..20 {
        let dir: Vec<f64> = (0..theta.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let tp: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + hp * d / norm).collect();
        let tm: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t - hp * d / norm).collect();
        let fd = (obj(&tp) - obj(&tm)) / (2.0 * hp);
        let an: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d / norm).sum();
        worst_param = worst_param.max((an - fd).abs() / fd.abs().max(1e-3));
    }
    assert!(worst_param <= 1e-5, "parameter FD mismatch {worst_param:e}");
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 2 took {elapsed:.3}s (limit 10 s)");
    pass(2, &format!("spatial rel {worst_spatial:.2e} (<=1e-6), param rel {worst_param:.2e} (<=1e-5), {elapsed:.2}s"));
}

#[test]
fn criterion_03_analytic_fields_annihilate_residuals() {
    let t0 = Instant::now();
    let cases: Vec<(&str, RunConfig, Box<dyn Field>)> = {
        let m = || MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap();
        vec![
            (
                "cylinder",
                cylinder_config(),
                Box::new(cylinder_solution(0.3, 1.0, 10.0, 1.0, m()).unwrap()) as Box<dyn Field>,
            ),
            (
                "sphere",
                sphere_config(),
                Box::new(sphere_solution(0.3, 1.0, 10.0, 1.0, m()).unwrap()),
            ),
            (
                "layered",
                layered_config(),
                Box::new(
                    layered_solution(5.0, 4.0, 10.0, 1.0, layered_config().material.to_material().unwrap())
                        .unwrap(),
                ),
            ),
        ]
    };
    for (name, cfg, field) in &cases {
        let resolved = cfg.resolve().unwrap();
        let nd = resolved.domain.dim();
        let batch =
            CollocationBatch::sample(&resolved.domain, &resolved.segments, 1000, 100, 13).unwrap();
        for x in &batch.interior {
            let e = field.eval(x);
            let r1 = residual_r1(&e, &resolved.material, x, nd);
            let n1 = r1.iter().take(nd).map(|r| r * r).sum::<f64>().sqrt();
            assert!(n1 <= 1e-10, "{name}: |R1|={n1:e} at {x:?}");
            assert!(residual_r2(&e).abs() <= 1e-10, "{name}: R2 at {x:?}");
        }
        for seg in &batch.segments {
            for (i, x) in seg.points.iter().enumerate() {
                let e = field.eval(x);
                if seg.is_pressure {
                    let pp = deepls::transform::transform_boundary_pressure(
                        &resolved.material,
                        seg.data[i],
                    )
                    .unwrap();
                    assert!(residual_r4(&e, pp).abs() <= 1e-10, "{name}: R4");
                } else {
                    assert!(
                        residual_r3(&e, &seg.normals[i], seg.data[i]).abs() <= 1e-10,
                        "{name}: R3"
                    );
                }
            }
        }
        let breakdown = empirical_objective_field(
            field.as_ref(),
            &batch,
            &resolved.material,
            &ResidualWeights::default(),
            nd,
        )
        .unwrap();
        assert!(breakdown.total <= 1e-12, "{name}: objective {:e}", breakdown.total);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "criterion 3 took {elapsed:.3}s (limit 5 s)");
    pass(3, &format!("all residuals <=1e-10 and objectives <=1e-12 on 3 benchmarks, {elapsed:.2}s"));
}

#[test]
fn criterion_04_cylinder_benchmark_accuracy() {
    let t0 = Instant::now();
    let reference =
        cylinder_solution(0.3, 1.0, 10.0, 1.0, MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap())
            .unwrap();
    let mut rel_p = Vec::new();
    let mut rel_u = Vec::new();
    for seed in 0..3 {
        let (resolved, state, _) = run_case(cylinder_config(), seed);
        let predicted = NetworkField::new(&resolved.network, &state.theta);
        let rep = error_report(&predicted, &reference, &resolved.material, &resolved.domain, 20_000, 9)
            .unwrap();
        rel_p.push(rep.rel_p());
        rel_u.push(rep.rel_u());
    }
    let (mp, mu) = (median(&rel_p), median(&rel_u));
    assert!(mp <= 5e-2, "median rel L2 pressure {mp:e} > 5e-2 ({rel_p:?})");
    assert!(mu <= 5e-2, "median rel L2 velocity {mu:e} > 5e-2 ({rel_u:?})");
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 900.0, "criterion 4 took {elapsed:.0}s (limit 900 s)");
    pass(4, &format!("median rel_l2_p {mp:.2e}, rel_l2_u {mu:.2e} (<=5e-2), {elapsed:.0}s"));
}

#[test]
fn criterion_05_sphere_benchmark_accuracy() {
    let t0 = Instant::now();
    let reference =
        sphere_solution(0.3, 1.0, 10.0, 1.0, MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap())
            .unwrap();
    let u_r_exact = reference.u_r(1.0).unwrap();
    let mut rel_p = Vec::new();
    let mut rel_u = Vec::new();
    let mut u_r_outer = Vec::new();
    for seed in 0..3 {
        let (resolved, state, _) = run_case(sphere_config(), seed);
        let predicted = NetworkField::new(&resolved.network, &state.theta);
        let rep = error_report(&predicted, &reference, &resolved.material, &resolved.domain, 20_000, 9)
            .unwrap();
        rel_p.push(rep.rel_p());
        rel_u.push(rep.rel_u());
        // mean radial velocity over a golden-spiral sample of the outer shell
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let n = 200;
        let mut acc = 0.0;
        for k in 0..n {
            let z = (k as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            let dir = [rho * phi.cos(), rho * phi.sin(), z];
            let e = predicted.eval(&dir);
            acc += e.u[0] * dir[0] + e.u[1] * dir[1] + e.u[2] * dir[2];
        }
        u_r_outer.push(acc / n as f64);
    }
    let (mp, mu, mur) = (median(&rel_p), median(&rel_u), median(&u_r_outer));
    assert!(mp <= 1e-1, "median rel L2 pressure {mp:e} > 1e-1 ({rel_p:?})");
    assert!(mu <= 1e-1, "median rel L2 velocity {mu:e} > 1e-1 ({rel_u:?})");
    let dev = ((mur - u_r_exact) / u_r_exact).abs();
    assert!(dev <= 0.1, "outer-shell u_r {mur} vs {u_r_exact} off by {dev:.3}");
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "criterion 5 took {elapsed:.0}s (limit 1800 s)");
    pass(5, &format!("median rel_l2_p {mp:.2e}, rel_l2_u {mu:.2e} (<=1e-1), u_r(1.0) {mur:.3} vs {u_r_exact:.5}, {elapsed:.0}s"));
}

#[test]
fn criterion_06_layered_step_profile() {
    let cfg = layered_config();
    let oracle: LayeredSolution =
        layered_solution(5.0, 4.0, 10.0, 1.0, cfg.material.to_material().unwrap()).unwrap();
    let (resolved, state, _) = run_case(cfg, 0);
    let predicted = NetworkField::new(&resolved.network, &state.theta);
    // layer mid-heights for breaks [0.8, 1.6, 2.4, 3.2] on H = 4
    let mids = [0.4, 1.2, 2.0, 2.8, 3.6];
    let xs: Vec<f64> = (0..9).map(|i| 0.5 + 0.5 * i as f64).collect();
    let mut ux_all = Vec::new();
    let mut uy_sq = 0.0;
    let mut n_samples = 0;
    for (layer, &y) in mids.iter().enumerate() {
        let exact = oracle.u_x(y);
        let mut ux = 0.0;
        for &x in &xs {
            let e = predicted.eval(&[x, y, 0.0]);
            ux += e.u[0];
            uy_sq += e.u[1] * e.u[1];
            n_samples += 1;
        }
        ux /= xs.len() as f64;
        let dev = ((ux - exact) / exact).abs();
        assert!(dev <= 0.1, "layer {layer}: u_x {ux:.4} vs {exact:.4} off by {dev:.3}");
        ux_all.push(ux.abs());
    }
    let mean_ux = ux_all.iter().sum::<f64>() / ux_all.len() as f64;
    let rms_uy = (uy_sq / n_samples as f64).sqrt();
    assert!(
        rms_uy <= 0.05 * mean_ux,
        "u_y RMS {rms_uy:.4} exceeds 5% of mean |u_x| {mean_ux:.4}"
    );
    pass(6, &format!("all 5 layers within 10% of step oracle; u_y RMS {:.2}% of mean |u_x|", 100.0 * rms_uy / mean_ux));
}

#[test]
fn criterion_07_capacity_trends() {
    let t0 = Instant::now();
    let depths = [2usize, 4, 6];
    let widths = [8usize, 16, 32, 64];
    let seeds = [0u64, 1, 2];
    let reference =
        cylinder_solution(0.3, 1.0, 10.0, 1.0, MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap())
            .unwrap();
    let rows = capacity_sweep(&depths, &widths, &seeds, |depth, width, seed| {
        let mut cfg = cylinder_config();
        cfg.network.depth = depth;
        cfg.network.width = width;
        cfg.sampling.n_interior = 1000;
        cfg.sampling.n_boundary = 100;
        cfg.optimizer.adam.epochs = 800;
        cfg.optimizer.lbfgs.max_iters = 200;
        let (resolved, state, _) = run_case(cfg, seed);
        let predicted = NetworkField::new(&resolved.network, &state.theta);
        error_report(&predicted, &reference, &resolved.material, &resolved.domain, 20_000, 9)
    })
    .unwrap();
    let med = |depth: usize, width: usize| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.depth == depth && r.width == width)
            .map(|r| r.l2_p)
            .collect();
        median(&v)
    };
    for &depth in &depths {
        assert!(
            med(depth, 64) <= med(depth, 8),
            "depth {depth}: median l2_p at m=64 ({:.3e}) > at m=8 ({:.3e})",
            med(depth, 64),
            med(depth, 8)
        );
    }
    assert!(
        med(6, 64) <= med(2, 64),
        "L=6,m=64 ({:.3e}) > L=2,m=64 ({:.3e})",
        med(6, 64),
        med(2, 64)
    );
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 7200.0, "criterion 7 took {elapsed:.0}s (limit 2 h)");
    pass(7, &format!(
        "width trend holds at all depths (e.g. depth 4: {:.2e} -> {:.2e}); depth trend {:.2e} <= {:.2e}; {elapsed:.0}s",
        med(4, 8), med(4, 64), med(6, 64), med(2, 64)
    ));
}

#[test]
fn criterion_08_footing_loss_vs_collocation_density() {
    let densities = [3000usize, 6000, 9000, 12000];
    // Terminal loss is read on one fixed fine quadrature batch with unit
    // weights so runs trained at different densities are commensurable.
    // Every run is driven to the same empirical loss level tau on its own
    // collocation set (small trunk, deep quasi-Newton stage), which isolates
    // what density buys: a sparser set is a poorer surrogate for the true
    // residual functional, so its terminal loss on the fine batch stays
    // higher. Density scales the whole budget (interior + boundary).
    let tau = 1e-2;
    let eval_cfg = footing_config(10.0, 1.0);
    let eval_resolved = eval_cfg.resolve().unwrap();
    let eval_batch = CollocationBatch::sample(
        &eval_resolved.domain,
        &eval_resolved.segments,
        20_000,
        600,
        99,
    )
    .unwrap();
    let unit = ResidualWeights::default();
    let mut medians = Vec::new();
    for &n in &densities {
        let mut finals = Vec::new();
        for seed in 0..3u64 {
            let mut cfg = footing_config(10.0, 1.0);
            cfg.network.width = 8;
            cfg.network.seed = seed;
            cfg.sampling.n_interior = n;
            cfg.sampling.n_boundary = n / 30;
            cfg.sampling.seed = seed;
            cfg.weights.mode = deepls::loss::WeightMode::Fixed;
            cfg.optimizer.adam.epochs = 2000;
            cfg.optimizer.lbfgs.max_iters = 1; // warm start; chunks below
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
                &ResidualWeights::default(),
                &resolved.train,
            )
            .unwrap();
            let mut theta = state.theta;
            let mut ws = resolved.network.workspace();
            let chunk = LbfgsConfig { max_iters: 500, ..Default::default() };
            let mut train_loss = state.final_loss;
            let mut iters = 0usize;
            while train_loss > tau && iters < 12_000 {
                let out = lbfgs_run(
                    &theta,
                    |th, grad| {
                        deepls::loss::objective_gradient(
                            &resolved.network,
                            th,
                            &batch,
                            &resolved.material,
                            &unit,
                            &mut ws,
                            grad,
                        )
                        .unwrap()
                        .total
                    },
                    &chunk,
                )
                .unwrap();
                theta = out.theta;
                train_loss = out.final_value;
                iters += out.iterations;
                if out.iterations < chunk.max_iters {
                    break; // converged or stalled inside the chunk
                }
            }
            let b = deepls::loss::empirical_objective(
                &resolved.network,
                &theta,
                &eval_batch,
                &resolved.material,
                &unit,
            )
            .unwrap();
            println!(
                "  density {n:>5} seed {seed}: matched loss {train_loss:.3e}, terminal loss {:.4e}",
                b.total
            );
            finals.push(b.total);
        }
        medians.push(median(&finals));
    }
    for w in medians.windows(2) {
        assert!(
            w[1] <= w[0] * 1.000001,
            "terminal loss increased with density: {medians:?}"
        );
    }
    pass(8, &format!("median terminal loss nonincreasing over densities {densities:?}: {medians:?}"));
}

#[test]
fn criterion_09_betti_reciprocity() {
    // (a) exact analytic pair: machine-precision reciprocity
    let material = layered_config().material.to_material().unwrap();
    let sol_a = layered_solution(5.0, 4.0, 10.0, 1.0, material.clone()).unwrap();
    let sol_b = layered_solution(5.0, 4.0, 5.0, 2.0, material.clone()).unwrap();
    let segs_a = layered_segments(5.0, 4.0, 10.0, 1.0);
    let segs_b = layered_segments(5.0, 4.0, 5.0, 2.0);
    let exact = betti_residual(&sol_a, &segs_a, &sol_b, &segs_b, &material, 2000).unwrap();
    let eta_exact = exact.eta_b.expect("nondegenerate");
    assert!(eta_exact <= 1e-10, "exact pair eta_B = {eta_exact:e}");

    // trained footing pair eta at a given width/budget, median over 3 seeds
    let pair_eta = |width: usize, epochs: usize, lbfgs: usize, seed: u64| -> f64 {
        let make = |p1: f64, p3: f64| {
            let mut cfg = footing_config(p1, p3);
            cfg.network.width = width;
            cfg.optimizer.adam.epochs = epochs;
            cfg.optimizer.lbfgs.max_iters = lbfgs;
            run_case(cfg, seed)
        };
        let (r1, s1, _) = make(10.0, 1.0);
        let (r2, s2, _) = make(1.0, 10.0);
        let f1 = NetworkField::new(&r1.network, &s1.theta);
        let f2 = NetworkField::new(&r2.network, &s2.theta);
        betti_residual(&f1, &r1.segments, &f2, &r2.segments, &r1.material, 2000)
            .unwrap()
            .eta_b
            .expect("nondegenerate trained pair")
    };

    // (b) desk scale: the full footing preset budget at width 32
    let desk = footing_config(10.0, 1.0);
    let desk_etas: Vec<f64> = (0..3)
        .map(|s| pair_eta(32, desk.optimizer.adam.epochs, desk.optimizer.lbfgs.max_iters, s))
        .collect();
    let desk_med = median(&desk_etas);
    assert!(desk_med <= 1e-2, "desk-scale median eta_B = {desk_med:.3e} ({desk_etas:?})");

    // (c) width trend at a fixed half budget
    let widths = [16usize, 32, 64];
    let mut medians = Vec::new();
    for &w in &widths {
        let etas: Vec<f64> = (0..3).map(|s| pair_eta(w, 1500, 300, s)).collect();
        medians.push(median(&etas));
    }
    for w in medians.windows(2) {
        assert!(w[1] <= w[0], "eta_B not monotone over widths: {medians:?}");
    }
    pass(9, &format!("exact eta_B {eta_exact:.1e}; desk median {desk_med:.2e}; width medians {widths:?} -> {medians:?}"));
}

#[test]
fn criterion_10_quadratic_growth_exponent() {
    let material = MaterialModel::scalar(1.0, 1.0, 1.0, 1.0).unwrap();
    let exact = cylinder_solution(0.3, 1.0, 10.0, 1.0, material).unwrap();
    let cfg = cylinder_config();
    let resolved = cfg.resolve().unwrap();
    // fine quadrature: one fixed dense batch
    let batch =
        CollocationBatch::sample(&resolved.domain, &resolved.segments, 20_000, 1000, 21).unwrap();
    let weights = ResidualWeights::default();
    // smooth perturbation with consistent gradient and divergence entries
    let delta = |x: &Point| {
        let (a, b) = (x[0], x[1]);
        let s = (a + 0.5 * b).sin();
        let c = (a + 0.5 * b).cos();
        FieldEval {
            p: s,
            grad_p: [c, 0.5 * c, 0.0],
            u: [b * b - a, a * b, 0.0],
            div_u: -1.0 + a,
        }
    };
    let objective_at = |t: f64| -> f64 {
        let perturbed = |x: &Point| {
            let mut e = exact.field_eval(x);
            let d = delta(x);
            e.p += t * d.p;
            e.div_u += t * d.div_u;
            for i in 0..3 {
                e.u[i] += t * d.u[i];
                e.grad_p[i] += t * d.grad_p[i];
            }
            e
        };
        empirical_objective_field(&perturbed, &batch, &resolved.material, &weights, 2)
            .unwrap()
            .total
    };
    let base = objective_at(0.0);
    let ts: Vec<f64> = (0..13).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &t in &ts {
        let gap = objective_at(t) - base;
        assert!(gap > 0.0, "objective gap must be positive at t={t}");
        let (lx, ly) = (t.ln(), gap.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let n = ts.len() as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        (slope - 2.0).abs() <= 0.05,
        "fitted growth exponent {slope} outside 2.0 +/- 0.05"
    );
    pass(10, &format!("fitted exponent {slope:.4} over t in [1e-3, 1]"));
}

#[test]
fn criterion_11_optimizer_oracles() {
    // L-BFGS on the convex quadratic 0.5 |x - a|^2 with minimizer (1, -2, 3)
    let target = [1.0, -2.0, 3.0];
    let quad = |x: &[f64], g: &mut [f64]| {
        let mut f = 0.0;
        for i in 0..3 {
            let d = x[i] - target[i];
            f += 0.5 * d * d;
            g[i] = d;
        }
        f
    };
    let out = lbfgs_run(&[0.0, 0.0, 0.0], quad, &LbfgsConfig::default()).unwrap();
    assert!(out.iterations <= 5, "quadratic needed {} iterations", out.iterations);
    assert_eq!(out.status, LbfgsStatus::Converged);
    for i in 0..3 {
        assert!((out.theta[i] - target[i]).abs() <= 1e-10);
    }

    // Rosenbrock from the classical start
    let rosen = |x: &[f64], g: &mut [f64]| {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    };
    let cfg = LbfgsConfig { max_iters: 200, grad_tol: 1e-9, ..Default::default() };
    let out = lbfgs_run(&[-1.2, 1.0], rosen, &cfg).unwrap();
    assert!(out.iterations <= 200);
    assert!(
        (out.theta[0] - 1.0).abs() <= 1e-6 && (out.theta[1] - 1.0).abs() <= 1e-6,
        "Rosenbrock ended at {:?}",
        out.theta
    );

    // Adam single step against the hand recurrence: with zero state,
    // m_hat = g, v_hat = g^2, so dtheta = -lr * g / (|g| + eps)
    let cfg = AdamConfig::default();
    let mut st = AdamState::new(2);
    let mut theta = vec![0.7, -0.4];
    let g = vec![0.3, -0.02];
    adam_step(&mut st, &mut theta, &g, &cfg, cfg.learning_rate).unwrap();
    for i in 0..2 {
        let expect = [0.7, -0.4][i] - cfg.learning_rate * g[i] / (g[i].abs() + cfg.eps_hat);
        assert!((theta[i] - expect).abs() <= 1e-12);
    }
    pass(11, "L-BFGS quadratic <=5 iters @1e-10, Rosenbrock <=200 @1e-6, Adam step matches recurrence @1e-12");
}

#[test]
fn criterion_12_adaptive_weighting_behavior() {
    let weights = ResidualWeights::unit_adaptive();
    let record = |pi: [f64; 4]| LossBreakdown {
        pi,
        lambda: [1.0; 4],
        total: pi.iter().sum(),
        n_interior: 1,
        n_gamma_u: 1,
        n_gamma_p: 1,
    };
    // equal decrease histories: spread ratio 1, no rebalance, weights stay unit
    let mut hist = LossHistory::default();
    for t in 0..(weights.window + 1) {
        let v = 1.0 / (1.0 + t as f64);
        hist.push(record([v; 4]));
    }
    let w = adaptive_reweight(&hist, &weights);
    assert_eq!(w.lambda, [1.0; 4]);

    // distinct histories: component 0 stalls, the rest decay fast
    let mut hist = LossHistory::default();
    for t in 0..(weights.window + 1) {
        let v = 0.5f64.powi(t as i32);
        hist.push(record([1.0, v, v, v]));
    }
    let w = adaptive_reweight(&hist, &weights);
    // exact up to the epsilon regularizer in the rebalancing denominator
    assert!((w.lambda[0] - (1.0 + weights.alpha)).abs() <= 1e-6, "slowest got {}", w.lambda[0]);
    assert!((w.lambda[1] - 1.0).abs() <= 1e-12);

    // frozen during L-BFGS: every stage-2 history record carries the same
    // weight vector, and it equals the vector at the freeze point
    let mut cfg = cylinder_config();
    cfg.network.depth = 2;
    cfg.network.width = 8;
    cfg.sampling.n_interior = 200;
    cfg.sampling.n_boundary = 40;
    cfg.optimizer.adam.epochs = 80;
    cfg.optimizer.lbfgs.max_iters = 15;
    let (_, state, _) = run_case(cfg, 0);
    let frozen = state.frozen_at.expect("two-stage run records the freeze point");
    assert_eq!(frozen, 80);
    let stage2 = &state.history.records[frozen..];
    assert!(!stage2.is_empty(), "stage 2 must log iterations");
    let lam = stage2[0].lambda;
    for r in stage2 {
        assert_eq!(r.lambda, lam, "weights changed during L-BFGS");
    }
    pass(12, &format!("equal histories -> unit weights; slowest -> 1+alpha; {} stage-2 records frozen at {:?}", stage2.len(), lam));
}
