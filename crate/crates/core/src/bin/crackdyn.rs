use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crackdyn::config::{parse_scenario, ScenarioConfig};
use crackdyn::convergence::{build_sequence, fixedpoint_convergence_check, run_convergence_with_threads};
use crackdyn::korn::estimate_korn_constant;
use crackdyn::memory::{element_ops, memory_history, trajectory_strains};
use crackdyn::output::{self, RunManifest, Table};
use crackdyn::scenario::{H15Policy, Scenario};
use crackdyn::trajectory::TrajectoryState;
use crackdyn::viscoelastic::{measure_contraction, solve_fixedpoint, solve_monolithic, FixedPointMap};
use crackdyn::{Error, Result};

#[derive(Parser)]
#[command(name = "crackdyn", version, about = "Elastodynamics and Maxwell viscoelasticity on domains with growing cracks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scenario document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files, the manifest and the plot script.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent member solves in `converge`; 1 runs everything in order.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Treat a failed crack speed check as an error.
    #[arg(long, global = true)]
    strict_h15: bool,
    /// Overrides `[time] dt`.
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monolithic viscoelastic solve with an energy audit.
    Simulate {
        /// Also write the per-element memory at every node.
        #[arg(long)]
        dump_memory: bool,
    },
    /// Picard iteration on the fixed-point map.
    Fixedpoint {
        /// Number of subintervals; adaptive when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Relative Picard tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Measured contraction ratio of the fixed-point map per horizon.
    Contraction {
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
    },
    /// Distances of a perturbed scenario sequence to its limit.
    Converge {
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Korn constant of the uncracked and fully cracked spaces.
    Korn,
    /// Parse the configuration and certify the scenario.
    Validate,
}

fn load(g: &Global) -> Result<(ScenarioConfig, String)> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| Error::Precondition("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let mut cfg = parse_scenario(&text)?;
    if let Some(seed) = g.seed {
        cfg.experiment.seed = seed;
    }
    if g.strict_h15 {
        cfg.solver.h15 = H15Policy::Strict;
    }
    if let Some(dt) = g.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Precondition(format!("--dt must be positive, got {dt}")));
        }
        cfg.time.dt = dt;
    }
    if g.threads == 0 {
        return Err(Error::Precondition("--threads must be at least 1".into()));
    }
    let echo = cfg.to_string();
    Ok((cfg, echo))
}

fn certified(cfg: &ScenarioConfig) -> Result<Scenario> {
    let sc = cfg.scenario()?;
    let cert = sc.certify()?;
    for w in &cert.warnings {
        eprintln!("warning: {w}");
    }
    Ok(sc)
}

fn finish(out: &Path, tables: Vec<Table>, mut manifest: RunManifest, started: Instant) -> Result<()> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let manifest = output::write_results(out, &tables, manifest)?;
    let plottable: Vec<PathBuf> = manifest.files.iter().map(|f| out.join(&f.name)).collect();
    let script = output::emit_plot_script(&plottable)?;
    let path = out.join("plot.gp");
    std::fs::write(&path, script).map_err(|e| Error::Io { path, source: e })?;
    for f in &manifest.files {
        println!("{}  {} ({} rows)", f.sha256, out.join(&f.name).display(), f.rows);
    }
    Ok(())
}

/// Adds the energy (or plain norm) table; a violated energy inequality is
/// returned so the files can still be written.
fn audit(sc: &Scenario, u: &TrajectoryState, tables: &mut Vec<Table>) -> Result<Option<Error>> {
    if sc.data.has_dirichlet_datum() {
        tables.push(output::trajectory_table(u));
        return Ok(None);
    }
    let report = FixedPointMap::new(sc, &sc.data, u.dt)?.energy_audit(u)?;
    tables.push(output::energy_table(&report, u));
    Ok((!report.holds()).then(|| {
        Error::Invariant(format!(
            "energy inequality violated: slack {:e} exceeds {:e}",
            report.max_slack(),
            report.tol
        ))
    }))
}

fn run(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let g = &cli.global;
    let (cfg, echo) = load(g)?;
    let seed = cfg.experiment.seed;
    let dt = cfg.time.dt;
    let name = match &cli.command {
        Command::Simulate { .. } => "simulate",
        Command::Fixedpoint { .. } => "fixedpoint",
        Command::Contraction { .. } => "contraction",
        Command::Converge { .. } => "converge",
        Command::Korn => "korn",
        Command::Validate => "validate",
    };
    let mut manifest = RunManifest::new(name, echo, vec![], g.threads);
    let mut tables = Vec::new();
    let mut violation = None;
    match cli.command {
        Command::Simulate { dump_memory } => {
            let sc = certified(&cfg)?;
            let u = solve_monolithic(&sc, dt)?;
            violation = audit(&sc, &u, &mut tables)?;
            if dump_memory {
                let ops = element_ops(sc.family.mesh(), &sc.viscosity)?;
                let h = memory_history(&trajectory_strains(&u), &ops, dt)?;
                tables.push(output::memory_table(&u.times(), &h));
            }
        }
        Command::Fixedpoint { k, tol } => {
            let sc = certified(&cfg)?;
            let mut fp = cfg.fixed_point();
            if k.is_some() {
                fp.k = k;
            }
            if let Some(tol) = tol {
                fp.tol = tol;
            }
            let (u, report) = solve_fixedpoint(&sc, dt, &fp)?;
            println!(
                "converged on {} subinterval(s), {} Picard iterations, largest ratio {:.3}",
                report.subintervals(),
                report.total_iterations(),
                report.ratio
            );
            violation = audit(&sc, &u, &mut tables)?;
            tables.push(output::picard_table(&report));
        }
        Command::Contraction { horizons } => {
            let sc = certified(&cfg)?;
            let horizons = horizons.unwrap_or_else(|| cfg.experiment.horizons.clone());
            manifest.seeds = vec![seed, seed + 1];
            let samples = measure_contraction(&sc, dt, &horizons, seed)?;
            tables.push(output::contraction_table(&samples));
        }
        Command::Converge { n } => {
            let sc = certified(&cfg)?;
            let ns = n.unwrap_or_else(|| cfg.experiment.ns.clone());
            let seq = build_sequence(&sc, cfg.decay_law(), &ns)?;
            let report = run_convergence_with_threads(&seq, dt, &cfg.fixed_point(), g.threads)?;
            println!("uniform bound C = {:.6e}", report.c);
            let steps = sc.steps(dt)?;
            manifest.seeds = vec![seed];
            let probe = TrajectoryState::random_smooth(sc.family.clone(), &sc.schedule, 0.0, dt, steps, seed);
            let dists = fixedpoint_convergence_check(&seq, dt, &probe)?;
            tables.push(output::convergence_table(&report));
            tables.push(output::map_convergence_table(&dists));
        }
        Command::Korn => {
            let sc = cfg.scenario()?;
            let h = cfg.domain.h;
            let uncracked = estimate_korn_constant(sc.family.space(0))?;
            let cracked = estimate_korn_constant(sc.family.fully_open())?;
            println!("K uncracked = {:.10}, K fully cracked = {:.10}", uncracked.k, cracked.k);
            tables.push(output::korn_table(&[(h, false, uncracked), (h, true, cracked)]));
        }
        Command::Validate => {
            let sc = cfg.scenario()?;
            let cert = sc.certify()?;
            println!("alpha0 = {:.6e}, M0 = {:.6e}, K = {:.6e}", cert.alpha0, cert.m0, cert.korn.k);
            if let Some(s) = &cert.speed {
                println!(
                    "crack speed check: max v^2 = {:.6e}, threshold = {:.6e}, {}",
                    s.max_speed_sq,
                    s.threshold,
                    if s.passed { "passed" } else { "failed" }
                );
            }
            for w in &cert.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    finish(&g.out, tables, manifest, started)?;
    violation.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
