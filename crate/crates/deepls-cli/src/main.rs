//! Configuration-driven command-line front end for the deepls solver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deepls::analytic::{cylinder_solution, layered_solution, sphere_solution};
use deepls::config::{benchmark_config, RunConfig};
use deepls::geometry::CollocationBatch;
use deepls::loss::NetworkField;
use deepls::network::{load_checkpoint, save_checkpoint, ParameterVector};
use deepls::optimize::train;
use deepls::verify::{betti_residual, capacity_sweep, error_report, median, sweep_csv};
use deepls::{hopf_cole_inverse, Domain, Error, Field};

#[derive(Parser)]
#[command(name = "deepls", version, about = "Klinkenberg porous-media flow solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override the network and sampling seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory (default: out).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the Adam epoch budget.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the L-BFGS iteration budget.
    #[arg(long)]
    lbfgs_iters: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train on a JSON problem configuration and export all artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
    },
    /// Run a named built-in benchmark and report errors.
    Benchmark {
        /// cylinder, sphere, layered, or footing.
        name: String,
        /// Optional config file replacing the preset (same geometry expected).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Overrides,
    },
    /// Capacity sweep over network depths and widths.
    Sweep {
        #[arg(long, default_value = "cylinder")]
        case: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        depths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        widths: Vec<usize>,
        /// Seeds per cell.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[command(flatten)]
        common: Overrides,
    },
    /// Betti reciprocity check between two configured problems.
    Betti {
        #[arg(long)]
        config1: PathBuf,
        #[arg(long)]
        config2: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n_quad: usize,
        #[command(flatten)]
        common: Overrides,
    },
    /// Sample an analytic solution or a trained checkpoint to CSV.
    ExportField {
        /// Analytic reference: cylinder, sphere, or layered.
        #[arg(long, conflicts_with = "checkpoint")]
        analytic: Option<String>,
        /// Trained checkpoint (.dlsp); requires --config for the domain.
        #[arg(long, requires = "config")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[command(flatten)]
        common: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Training(_) | Error::LambertDomain(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn dispatch(cli: Cli) -> deepls::Result<()> {
    let threads: usize = std::env::var("DEEPLS_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);
    let _ = threads.max(1); // computation is single-threaded per process
    match cli.cmd {
        Cmd::Solve { config, common } => cmd_solve(&config, &common),
        Cmd::Benchmark { name, config, common } => cmd_benchmark(&name, config.as_deref(), &common),
        Cmd::Sweep { case, depths, widths, seeds, common } => {
            cmd_sweep(&case, &depths, &widths, seeds, &common)
        }
        Cmd::Betti { config1, config2, n_quad, common } => {
            cmd_betti(&config1, &config2, n_quad, &common)
        }
        Cmd::ExportField { analytic, checkpoint, config, grid, common } => {
            cmd_export_field(analytic.as_deref(), checkpoint.as_deref(), config.as_deref(), grid, &common)
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, common: &Overrides) {
    if let Some(seed) = common.seed {
        cfg.network.seed = seed;
        cfg.sampling.seed = seed;
    }
    if let Some(epochs) = common.epochs {
        cfg.optimizer.adam.epochs = epochs;
    }
    if let Some(iters) = common.lbfgs_iters {
        cfg.optimizer.lbfgs.max_iters = iters;
    }
    if let Some(dir) = &common.out_dir {
        cfg.output.out_dir = Some(dir.display().to_string());
    }
}

struct RunOutput {
    cfg: RunConfig,
    resolved: deepls::config::Resolved,
    state: deepls::optimize::TrainerState,
    batch: CollocationBatch,
}

fn run_training(mut cfg: RunConfig, common: &Overrides) -> deepls::Result<RunOutput> {
    apply_overrides(&mut cfg, common);
    let resolved = cfg.resolve()?;
    let batch = CollocationBatch::sample(
        &resolved.domain,
        &resolved.segments,
        cfg.sampling.n_interior,
        cfg.sampling.n_boundary,
        cfg.sampling.seed,
    )?;
    let theta0 = resolved.network.init_parameters(cfg.network.seed);
    if !common.quiet {
        eprintln!(
            "training: {} params, {} interior + {} boundary points, {} epochs + {} L-BFGS",
            resolved.network.param_count(),
            batch.n_interior(),
            batch.n_gamma_u() + batch.n_gamma_p(),
            cfg.optimizer.adam.epochs,
            cfg.optimizer.lbfgs.max_iters,
        );
    }
    let state = train(
        &resolved.network,
        &theta0.data,
        &batch,
        &resolved.material,
        &resolved.weights,
        &resolved.train,
    )?;
    if !common.quiet {
        eprintln!("terminal loss {:.6e}", state.final_loss);
    }
    Ok(RunOutput { cfg, resolved, state, batch })
}

fn out_dir(cfg: &RunConfig, common: &Overrides) -> PathBuf {
    common
        .out_dir
        .clone()
        .or_else(|| cfg.output.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn domain_bbox(domain: &Domain) -> ([f64; 3], [f64; 3]) {
    match domain {
        Domain::Annulus { r_o, .. } => ([-r_o, -r_o, 0.0], [*r_o, *r_o, 0.0]),
        Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => {
            ([0.0, 0.0, 0.0], [*l, *h, 0.0])
        }
        Domain::HalfSphericalShell { r_o, .. } => ([-r_o, -r_o, 0.0], [*r_o, *r_o, *r_o]),
    }
}

/// Tensor-product grid over the bounding box, clipped to the domain.
fn field_csv(
    field: &dyn Field,
    material: &deepls::MaterialModel,
    domain: &Domain,
    grid: usize,
) -> deepls::Result<String> {
    let nd = domain.dim();
    let (lo, hi) = domain_bbox(domain);
    let mut out = String::from(if nd == 2 {
        "x,y,P,p,u_x,u_y\n"
    } else {
        "x,y,z,P,p,u_x,u_y,u_z\n"
    });
    let coord = |i: usize, axis: usize, n: usize| {
        lo[axis] + (hi[axis] - lo[axis]) * (i as f64 + 0.5) / n as f64
    };
    let nz = if nd == 3 { grid / 2 } else { 1 };
    for iz in 0..nz {
        for iy in 0..grid {
            for ix in 0..grid {
                let x = [
                    coord(ix, 0, grid),
                    coord(iy, 1, grid),
                    if nd == 3 { coord(iz, 2, nz) } else { 0.0 },
                ];
                if !domain.contains(&x) {
                    continue;
                }
                let e = field.eval(&x);
                let p = hopf_cole_inverse(material, e.p)?;
                if nd == 2 {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        x[0], x[1], e.p, p, e.u[0], e.u[1]
                    ));
                } else {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        x[0], x[1], x[2], e.p, p, e.u[0], e.u[1], e.u[2]
                    ));
                }
            }
        }
    }
    Ok(out)
}

fn write_artifacts(run: &RunOutput, dir: &Path, grid: usize) -> deepls::Result<()> {
    std::fs::create_dir_all(dir)?;
    let pv = ParameterVector {
        data: run.state.theta.clone(),
        shape: run.resolved.network.shape_map(),
    };
    save_checkpoint(&dir.join("final.dlsp"), &run.resolved.network, &pv)?;
    std::fs::write(dir.join("loss_history.csv"), run.state.history.to_csv())?;
    // resolved config + seeds sidecar for reproducibility
    std::fs::write(dir.join("config.resolved.json"), run.cfg.to_json()?)?;
    let summary = serde_json::json!({
        "adam_epochs": run.state.adam_epochs_run,
        "lbfgs_iterations": run.state.lbfgs.as_ref().map(|o| o.iterations),
        "lbfgs_status": run.state.lbfgs.as_ref().map(|o| format!("{:?}", o.status)),
        "loss_after_adam": run.state.loss_after_adam,
        "terminal_loss": run.state.final_loss,
        "weights": run.state.weights.lambda,
        "network_seed": run.cfg.network.seed,
        "sampling_seed": run.cfg.sampling.seed,
        "n_interior": run.batch.n_interior(),
        "n_gamma_u": run.batch.n_gamma_u(),
        "n_gamma_p": run.batch.n_gamma_p(),
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let field = NetworkField::new(&run.resolved.network, &run.state.theta);
    let csv = field_csv(&field, &run.resolved.material, &run.resolved.domain, grid)?;
    std::fs::write(dir.join("field.csv"), csv)?;
    Ok(())
}

fn cmd_solve(config_path: &Path, common: &Overrides) -> deepls::Result<()> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let cfg = RunConfig::from_json(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", config_path.display())))?;
    let grid = cfg.output.export_grid;
    let run = run_training(cfg, common)?;
    let dir = out_dir(&run.cfg, common);
    write_artifacts(&run, &dir, grid)?;
    if !common.quiet {
        eprintln!("artifacts written to {}", dir.display());
    }
    Ok(())
}

fn reference_solution(name: &str, cfg: &RunConfig) -> deepls::Result<Box<dyn Field>> {
    let material = cfg.material.to_material()?;
    Ok(match name {
        "cylinder" => Box::new(cylinder_solution(0.3, 1.0, 10.0, 1.0, material)?),
        "sphere" => Box::new(sphere_solution(0.3, 1.0, 10.0, 1.0, material)?),
        "layered" => Box::new(layered_solution(5.0, 4.0, 10.0, 1.0, material)?),
        other => return Err(Error::Config(format!("no analytic reference for '{other}'"))),
    })
}

fn cmd_benchmark(name: &str, config: Option<&Path>, common: &Overrides) -> deepls::Result<()> {
    let cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => benchmark_config(name)?,
    };
    let dir = out_dir(&cfg, common);
    if name == "footing" {
        return footing_betti_benchmark(cfg, common, &dir);
    }
    let grid = cfg.output.export_grid;
    let run = run_training(cfg, common)?;
    let reference = reference_solution(name, &run.cfg)?;
    let predicted = NetworkField::new(&run.resolved.network, &run.state.theta);
    let report = error_report(
        &predicted,
        reference.as_ref(),
        &run.resolved.material,
        &run.resolved.domain,
        20_000,
        9,
    )?;
    write_artifacts(&run, &dir, grid)?;
    std::fs::write(dir.join("benchmark.json"), serde_json::to_string_pretty(&report)?)?;
    println!(
        "{name}: rel_l2_p = {:.4e}, rel_l2_u = {:.4e}",
        report.rel_p(),
        report.rel_u()
    );
    if name == "layered" {
        let material = run.cfg.material.to_material()?;
        let oracle = layered_solution(5.0, 4.0, 10.0, 1.0, material)?;
        println!("layer mid-height u_x (predicted vs oracle):");
        for (i, y) in [0.4, 1.2, 2.0, 2.8, 3.6].iter().enumerate() {
            let e = predicted.eval(&[2.5, *y, 0.0]);
            println!("  layer {}: {:.5} vs {:.5}", i + 1, e.u[0], oracle.u_x(*y));
        }
    }
    Ok(())
}

fn footing_betti_benchmark(cfg: RunConfig, common: &Overrides, dir: &Path) -> deepls::Result<()> {
    // two stored load patterns: the configured one, and its mirror with the
    // T1 / T3 tract pressures swapped
    let mut mirror = cfg.clone();
    let (t1, t3) = (
        cfg.boundaries.iter().position(|s| s.id == "T1"),
        cfg.boundaries.iter().position(|s| s.id == "T3"),
    );
    match (t1, t3) {
        (Some(a), Some(b)) => {
            mirror.boundaries[a].value = cfg.boundaries[b].value;
            mirror.boundaries[b].value = cfg.boundaries[a].value;
        }
        _ => {
            return Err(Error::Config(
                "footing benchmark needs segments with ids T1 and T3".into(),
            ))
        }
    }
    let run1 = run_training(cfg, common)?;
    let run2 = run_training(mirror, common)?;
    let f1 = NetworkField::new(&run1.resolved.network, &run1.state.theta);
    let f2 = NetworkField::new(&run2.resolved.network, &run2.state.theta);
    let report = betti_residual(
        &f1,
        &run1.resolved.segments,
        &f2,
        &run2.resolved.segments,
        &run1.resolved.material,
        2000,
    )?;
    std::fs::create_dir_all(dir)?;
    write_artifacts(&run1, &dir.join("pattern1"), run1.cfg.output.export_grid)?;
    write_artifacts(&run2, &dir.join("pattern2"), run2.cfg.output.export_grid)?;
    std::fs::write(dir.join("betti.json"), serde_json::to_string_pretty(&report)?)?;
    println!(
        "footing: I12 = {:.6e}, I21 = {:.6e}, R_B = {:.3e}, eta_B = {}",
        report.i12,
        report.i21,
        report.r_b,
        report
            .eta_b
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "degenerate".into())
    );
    Ok(())
}

fn cmd_sweep(
    case: &str,
    depths: &[usize],
    widths: &[usize],
    n_seeds: usize,
    common: &Overrides,
) -> deepls::Result<()> {
    if case != "cylinder" {
        return Err(Error::Config(format!(
            "sweep requires an analytic reference; only 'cylinder' is supported, got '{case}'"
        )));
    }
    let base = benchmark_config(case)?;
    let dir = out_dir(&base, common);
    let seeds: Vec<u64> = (0..n_seeds as u64).collect();
    let quiet = common.quiet;
    let rows = capacity_sweep(depths, widths, &seeds, |depth, width, seed| {
        let mut cfg = base.clone();
        cfg.network.depth = depth;
        cfg.network.width = width;
        let mut c = common.clone();
        c.seed = Some(seed);
        c.quiet = true;
        let run = run_training(cfg, &c)?;
        let reference = reference_solution(case, &run.cfg)?;
        let predicted = NetworkField::new(&run.resolved.network, &run.state.theta);
        let report = error_report(
            &predicted,
            reference.as_ref(),
            &run.resolved.material,
            &run.resolved.domain,
            20_000,
            9,
        )?;
        if !quiet {
            eprintln!(
                "depth {depth} width {width} seed {seed}: rel_l2_p = {:.3e}",
                report.rel_p()
            );
        }
        Ok(report)
    })?;
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("sweep.csv"), sweep_csv(&rows))?;
    for &depth in depths {
        let med = |w: usize| {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.depth == depth && r.width == w)
                .map(|r| r.l2_p)
                .collect();
            median(&v)
        };
        println!(
            "depth {depth}: median rel_l2_p {:.3e} (m={}) -> {:.3e} (m={})",
            med(widths[0]),
            widths[0],
            med(*widths.last().unwrap()),
            widths.last().unwrap()
        );
    }
    Ok(())
}

fn cmd_betti(config1: &Path, config2: &Path, n_quad: usize, common: &Overrides) -> deepls::Result<()> {
    let load = |p: &Path| -> deepls::Result<RunConfig> {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
        RunConfig::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
    };
    let run1 = run_training(load(config1)?, common)?;
    let run2 = run_training(load(config2)?, common)?;
    let f1 = NetworkField::new(&run1.resolved.network, &run1.state.theta);
    let f2 = NetworkField::new(&run2.resolved.network, &run2.state.theta);
    let report = betti_residual(
        &f1,
        &run1.resolved.segments,
        &f2,
        &run2.resolved.segments,
        &run1.resolved.material,
        n_quad,
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_export_field(
    analytic: Option<&str>,
    checkpoint: Option<&Path>,
    config: Option<&Path>,
    grid: usize,
    common: &Overrides,
) -> deepls::Result<()> {
    let (field, material, domain): (Box<dyn Field>, _, _) = match (analytic, checkpoint) {
        (Some(name), None) => {
            let cfg = benchmark_config(name)?;
            let material = cfg.material.to_material()?;
            let domain = cfg.domain.to_domain();
            (reference_solution(name, &cfg)?, material, domain)
        }
        (None, Some(ckpt)) => {
            let cfg_path = config.expect("clap enforces --config with --checkpoint");
            let text = std::fs::read_to_string(cfg_path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", cfg_path.display())))?;
            let cfg = RunConfig::from_json(&text)?;
            let material = cfg.material.to_material()?;
            let domain = cfg.domain.to_domain();
            let (network, params) = load_checkpoint(ckpt)?;
            let network = Box::leak(Box::new(network));
            let theta = Box::leak(params.data.into_boxed_slice());
            (Box::new(NetworkField::new(network, theta)), material, domain)
        }
        _ => {
            return Err(Error::Config(
                "export-field needs exactly one of --analytic or --checkpoint".into(),
            ))
        }
    };
    let csv = field_csv(field.as_ref(), &material, &domain, grid)?;
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("export_field.csv");
    std::fs::write(&path, csv)?;
    if !common.quiet {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
