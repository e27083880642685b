//! Command-line front end.
//!
//! ```text
//! layerlab <subcommand> [--config <path>] [--out <dir>] [--eps <list>] [--quiet]
//! ```
//!
//! Subcommands: `solve-full`, `solve-outer`, `solve-layers`, `assemble`,
//! `sweep`, `check`. Exit status: 0 success, 1 invariant failure, 2
//! configuration or usage error, 3 numerical abort.
//!
//! Presets (`model.preset`):
//! - `paper_poly8`: `u0 = x^8 (1-x)^8`, `v0 = v_* + x^6 (1-x)^6`.
//! - `polynomial`: `model.u0_coeffs` and `model.v0_coeffs`, monomial
//!   coefficients lowest degree first.
//! - `tabulated`: `model.u0_path` and `model.v0_path`, each a text file whose
//!   first non-comment line names the field and whose remaining lines hold
//!   `x, value` pairs (comma or whitespace separated, `#` starts a comment,
//!   `x` increasing over `[0, 1]`). Paths are relative to the config file.
//!
//! Every run writes `config.effective` (the fully resolved configuration)
//! into the output directory, next to its artifacts.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    cells_for, invariant_battery, run_sweep_with_artifacts, solve_profiles, sweep_stepper, ConvergenceReport,
    InvariantEntry, ProfileSet, SweepPlan,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expansion::assemble;
use crate::interval::{solve_full, OuterProfiles, TimeStepper, Trajectory, NEGATIVITY_TOL};
use crate::io::{write_csv, write_json, write_text, Cell};
use crate::layers::LayerProfiles;
use crate::model::{build_initial_data, check_compatibility, CompatibilityReport, ModelParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default step count for the `check` battery.
pub const CHECK_STEPS: usize = 250;

#[derive(Debug, Parser)]
#[command(name = "layerlab", version, about = "Boundary layers of a 1-D chemotaxis system with small oxygen diffusivity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (`section.key = value`); defaults apply without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated epsilon list overriding `model.epsilon_list`
    /// (`2^-8` syntax accepted).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Full system for each epsilon > 0.
    SolveFull,
    /// Leading outer problem (epsilon = 0).
    SolveOuter,
    /// Outer profiles plus both boundary layers.
    SolveLayers,
    /// Composite approximation for each epsilon.
    Assemble,
    /// Epsilon sweep with rate fits and the invariant battery.
    Sweep,
    /// Compatibility report and invariant battery.
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveFull => "solve-full",
            Command::SolveOuter => "solve-outer",
            Command::SolveLayers => "solve-layers",
            Command::Assemble => "assemble",
            Command::Sweep => "sweep",
            Command::Check => "check",
        }
    }
}

/// Exit status for an error, looking through context wrappers.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config { .. } | Error::Input(_) | Error::Grid(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// Resolved configuration with command-line overrides applied.
pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(list) = &cli.eps {
        let over = RunConfig::parse(&format!("model.epsilon_list = {list}"))?;
        cfg.model.epsilon_list = over.model.epsilon_list;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> i32 {
    let result = load_config(cli).and_then(|cfg| run_with(cli.command, &cfg, !cli.quiet));
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INVARIANT,
        Err(e) => {
            eprintln!("layerlab {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}

/// Runs one subcommand; `Ok(false)` means a hard invariant failed.
pub fn run_with(command: Command, cfg: &RunConfig, verbose: bool) -> Result<bool> {
    let out = PathBuf::from(&cfg.output.directory);
    std::fs::create_dir_all(&out).map_err(|e| Error::from(e).context(format!("creating {}", out.display())))?;
    write_text(&out.join("config.effective"), &cfg.render())?;
    let ctx = |e: Error| e.context(command.name());
    match command {
        Command::SolveFull => solve_full_cmd(cfg, &out, verbose),
        Command::SolveOuter => solve_outer_cmd(cfg, &out, verbose),
        Command::SolveLayers => solve_layers_cmd(cfg, &out, verbose),
        Command::Assemble => assemble_cmd(cfg, &out, verbose),
        Command::Sweep => sweep_cmd(cfg, &out, verbose),
        Command::Check => check_cmd(cfg, &out, verbose),
    }
    .map_err(ctx)
}

fn wants(cfg: &RunConfig, fmt: &str) -> bool {
    cfg.output.formats.iter().any(|f| f == fmt)
}

/// Cells for one epsilon, clamped to the cap.
fn cells_at(cfg: &RunConfig, eps: f64) -> usize {
    let n = cells_for(eps, cfg.grid.cells_per_layer);
    if n > cfg.grid.max_cells {
        warn!("eps = {eps:e} needs {n} cells; clamping to {}", cfg.grid.max_cells);
        cfg.grid.max_cells
    } else {
        n
    }
}

/// Grid for epsilon-independent solves: `analysis.outer_cells`, else the
/// finest sweep grid.
fn profile_cells(cfg: &RunConfig) -> usize {
    if cfg.analysis.outer_cells > 0 {
        return cfg.analysis.outer_cells;
    }
    cfg.epsilons()
        .iter()
        .filter(|e| **e > 0.0)
        .map(|e| cells_at(cfg, *e))
        .max()
        .unwrap_or(1024.min(cfg.grid.max_cells))
}

fn positive_epsilons(cfg: &RunConfig, what: &str) -> Result<Vec<f64>> {
    let eps = cfg.epsilons();
    if eps.contains(&0.0) {
        return Err(Error::Input(format!(
            "{what} needs epsilon > 0; epsilon = 0 is the outer problem, run `layerlab solve-outer`"
        )));
    }
    Ok(eps)
}

fn report_ledger(ledger: &[InvariantEntry], verbose: bool) -> bool {
    let mut ok = true;
    for e in ledger {
        if !e.pass && e.hard {
            ok = false;
            eprintln!("invariant FAILED: {} residual {:e} > {:e}", e.name, e.residual, e.bound);
        } else if verbose {
            info!("invariant {} {}: residual {:e} (bound {:e})", if e.pass { "ok" } else { "soft-fail" }, e.name, e.residual, e.bound);
        }
    }
    ok
}

fn field_rows(t: f64, x: &[f64], cols: &[&[f64]]) -> Vec<Vec<Cell>> {
    (0..x.len())
        .map(|i| {
            let mut row = vec![Cell::Real(t), Cell::Real(x[i])];
            row.extend(cols.iter().map(|c| Cell::Real(c[i])));
            row
        })
        .collect()
}

fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<Cell>> {
    let x = traj.grid.nodes();
    traj.states
        .iter()
        .enumerate()
        .flat_map(|(k, s)| field_rows(s.t, x, &[&s.u, &s.v, &traj.phi(k)]))
        .collect()
}

#[derive(Debug, Serialize)]
struct FullSummary {
    epsilon: f64,
    n: usize,
    steps: usize,
    dt: f64,
    mass: f64,
    max_mass_drift: f64,
    u_min: f64,
    v_min: f64,
    v_max: f64,
}

fn full_ledger(traj: &Trajectory, v_bound: f64, u_scale: f64) -> Vec<InvariantEntry> {
    let eps = traj.epsilon;
    let entry = |name: String, residual: f64, bound: f64| InvariantEntry {
        name,
        residual,
        bound,
        pass: residual <= bound,
        hard: true,
    };
    vec![
        entry(format!("mass.full[{eps:e}]"), traj.max_mass_drift, crate::analysis::MASS_TOL),
        entry(format!("full.nonnegative[{eps:e}]"), (-traj.u_min).max(0.0), NEGATIVITY_TOL * u_scale),
        entry(
            format!("full.max_principle[{eps:e}]"),
            (-traj.v_min).max(traj.v_max - v_bound).max(0.0),
            1e-10 * v_bound.max(1.0),
        ),
    ]
}

fn stepper_for(cfg: &RunConfig, grid: &crate::grids::IntervalGrid, v0: &[f64]) -> Result<TimeStepper> {
    let mut s = if cfg.time.steps > 0 {
        TimeStepper::new(cfg.model.horizon, cfg.time.steps, cfg.time.outputs)?
    } else {
        TimeStepper::with_default_dt(cfg.model.horizon, grid, v0, cfg.time.outputs, cfg.time.cfl)?
    };
    s.strict_resolution = cfg.grid.strict_resolution;
    Ok(s)
}

fn solve_full_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let eps = positive_epsilons(cfg, "solve-full")?;
    let preset = cfg.preset()?;
    let runs: Vec<Result<Trajectory>> = eps
        .par_iter()
        .map(|&e| {
            let params = ModelParams::new(e, cfg.model.v_star, cfg.model.horizon, preset.clone())?;
            let grid = crate::grids::make_interval_grid(cells_at(cfg, e), cfg.grading())?;
            let data = build_initial_data(&preset, &params, &grid)?;
            let stepper = stepper_for(cfg, &grid, &data.v0)?;
            solve_full(&params, &data, &stepper).map_err(|err| err.context(format!("eps = {e:e}")))
        })
        .collect();
    let mut ok = true;
    let mut summary = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let traj = r?;
        let v0 = &traj.states[0].v;
        let v_bound = v0.iter().copied().fold(cfg.model.v_star, f64::max);
        let u_scale = traj.states[0].u.iter().copied().fold(1.0, f64::max);
        ok &= report_ledger(&full_ledger(&traj, v_bound, u_scale), verbose);
        if wants(cfg, "csv") {
            write_csv(&out.join(format!("full_eps{i}.csv")), &["t", "x", "u", "v", "phi"], &trajectory_rows(&traj))?;
        }
        summary.push(FullSummary {
            epsilon: traj.epsilon,
            n: traj.grid.n(),
            steps: traj.stepper.steps,
            dt: traj.stepper.dt(),
            mass: traj.mass,
            max_mass_drift: traj.max_mass_drift,
            u_min: traj.u_min,
            v_min: traj.v_min,
            v_max: traj.v_max,
        });
        if verbose {
            println!("eps = {:e}: n = {}, mass drift {:.3e}", traj.epsilon, traj.grid.n(), traj.max_mass_drift);
        }
    }
    if wants(cfg, "json") {
        write_json(&out.join("full_summary.json"), &summary)?;
    }
    Ok(ok)
}

fn plan_for(cfg: &RunConfig) -> Result<SweepPlan> {
    let mut plan = cfg.sweep_plan()?;
    plan.epsilons.retain(|e| *e > 0.0);
    Ok(plan)
}

fn profiles(cfg: &RunConfig, cells: usize) -> Result<ProfileSet> {
    let plan = plan_for(cfg)?;
    let stepper = sweep_stepper(&plan, cells)?;
    solve_profiles(&plan, cells, &stepper)
}

fn write_outer(cfg: &RunConfig, out: &Path, o: &OuterProfiles) -> Result<()> {
    if !wants(cfg, "csv") {
        return Ok(());
    }
    let x = o.grid.nodes();
    let mut rows = Vec::new();
    for step in o.output_steps() {
        rows.extend(field_rows(o.stepper.time(step), x, &[&o.u_hist[step], &o.v_hist[step], &o.phi0(step)]));
    }
    write_csv(&out.join("outer.csv"), &["t", "x", "u", "v", "phi"], &rows)?;
    let w = &o.walls;
    let walls: Vec<Vec<Cell>> = (0..w[0].u.len())
        .map(|k| {
            vec![
                Cell::Real(o.stepper.time(k)),
                Cell::Real(w[0].u[k]),
                Cell::Real(w[0].v[k]),
                Cell::Real(w[1].u[k]),
                Cell::Real(w[1].v[k]),
            ]
        })
        .collect();
    write_csv(&out.join("walls.csv"), &["t", "u_left", "v_left", "u_right", "v_right"], &walls)?;
    if let Some(first) = &o.first_order {
        let mut rows = Vec::new();
        for (k, step) in o.output_steps().into_iter().enumerate() {
            rows.extend(field_rows(o.stepper.time(step), x, &[&first.phi1[k], &first.v1[k]]));
        }
        write_csv(&out.join("outer1.csv"), &["t", "x", "phi1", "v1"], &rows)?;
    }
    Ok(())
}

fn write_layer(path: &Path, l: &LayerProfiles) -> Result<()> {
    let z = l.grid.nodes();
    let mut rows = Vec::new();
    let empty = vec![f64::NAN; z.len()];
    for (k, &step) in l.output_steps.iter().enumerate() {
        let v1 = if l.has_order2() { &l.v1[k] } else { &empty };
        let phi2 = if l.has_order2() { &l.phi2[k] } else { &empty };
        rows.extend(field_rows(l.stepper.time(step), z, &[&l.v0[k], &l.phi1[k], &l.u0[k], v1, phi2]));
    }
    write_csv(path, &["t", "z", "v0", "phi1", "u0", "v1", "phi2"], &rows)
}

fn solve_outer_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let plan = plan_for(cfg)?;
    let grid = crate::grids::make_interval_grid(profile_cells(cfg), cfg.grading())?;
    let params = ModelParams::new(0.0, cfg.model.v_star, cfg.model.horizon, plan.preset.clone())?;
    let data = build_initial_data(&plan.preset, &params, &grid)?;
    let stepper = stepper_for(cfg, &grid, &data.v0)?;
    let outer = crate::interval::solve_outer0(&params, &data, &stepper)?;
    let dt = stepper.dt();
    let u_scale = data.u0.iter().copied().fold(1.0, f64::max);
    let ledger = vec![
        InvariantEntry {
            name: "mass.outer".into(),
            residual: outer.max_mass_drift,
            bound: crate::analysis::MASS_TOL,
            pass: outer.max_mass_drift <= crate::analysis::MASS_TOL,
            hard: true,
        },
        {
            let r = outer.exponential_identity_residual();
            let b = 5.0 * dt * dt * data.max_v0();
            InvariantEntry {
                name: "outer.exponential_identity".into(),
                residual: r,
                bound: b,
                pass: r <= b,
                hard: true,
            }
        },
        InvariantEntry {
            name: "outer.nonnegative".into(),
            residual: (-outer.u_min).max(0.0),
            bound: NEGATIVITY_TOL * u_scale,
            pass: -outer.u_min <= NEGATIVITY_TOL * u_scale,
            hard: true,
        },
    ];
    let ok = report_ledger(&ledger, verbose);
    write_outer(cfg, out, &outer)?;
    if wants(cfg, "json") {
        write_json(&out.join("outer_invariants.json"), &ledger)?;
    }
    if verbose {
        println!("outer: n = {}, {} steps, mass drift {:.3e}", grid.n(), stepper.steps, outer.max_mass_drift);
    }
    Ok(ok)
}

fn solve_layers_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let set = profiles(cfg, profile_cells(cfg))?;
    let ledger = invariant_battery(&set.outer, &set.layers, &[]);
    let ok = report_ledger(&ledger, verbose);
    write_outer(cfg, out, &set.outer)?;
    if wants(cfg, "csv") {
        write_layer(&out.join("layer_left.csv"), &set.layers[0])?;
        write_layer(&out.join("layer_right.csv"), &set.layers[1])?;
    }
    if wants(cfg, "json") {
        write_json(&out.join("layer_invariants.json"), &ledger)?;
    }
    if verbose {
        for l in &set.layers {
            println!(
                "{} layer: v^B0 in [{:.3e}, {:.3e}], wall trace v^B0(0,T) = {:.6e}",
                l.side.name(),
                l.v0_min,
                l.v0_max,
                l.trace_v0.last().copied().unwrap_or(0.0)
            );
        }
    }
    Ok(ok)
}

fn assemble_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let eps = positive_epsilons(cfg, "assemble")?;
    let mut levels: Vec<usize> = eps.iter().map(|e| cells_at(cfg, *e)).collect();
    levels.sort_unstable();
    levels.dedup();
    let sets = levels.par_iter().map(|&c| profiles(cfg, c)).collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let v_star = cfg.model.v_star;
    let mut summary = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        let n = cells_at(cfg, e);
        let set = sets.iter().find(|s| s.cells == n).unwrap();
        let asm = assemble(cfg.order(), &set.outer, &set.layers, e, &set.outer.grid)?;
        let (bv, bphi) = asm.boundary_residual(v_star);
        let bound = 1e-12 * v_star.max(1.0);
        if bv.max(bphi) > bound {
            ok = false;
            eprintln!("invariant FAILED: assembly.boundary[{e:e}] residual {:e} > {bound:e}", bv.max(bphi));
        }
        if wants(cfg, "csv") {
            let x = asm.grid.nodes();
            let rows: Vec<Vec<Cell>> = asm.frames.iter().flat_map(|f| field_rows(f.t, x, &[&f.u, &f.v, &f.phi])).collect();
            write_csv(&out.join(format!("assembly_eps{i}.csv")), &["t", "x", "u", "v", "phi"], &rows)?;
        }
        summary.push(serde_json::json!({
            "epsilon": e,
            "n": n,
            "order": format!("{:?}", asm.order),
            "components": asm.components,
            "boundary_residual_v": bv,
            "boundary_residual_phi": bphi,
        }));
        if verbose {
            println!("eps = {e:e}: n = {n}, boundary residual v {bv:.2e}, phi {bphi:.2e}");
        }
    }
    if wants(cfg, "json") {
        write_json(&out.join("assembly_summary.json"), &summary)?;
    }
    Ok(ok)
}

pub fn report_rows(r: &ConvergenceReport) -> Vec<Vec<Cell>> {
    r.entries
        .iter()
        .map(|e| {
            vec![
                Cell::Real(e.epsilon),
                Cell::Int(e.n),
                Cell::Real(e.eu),
                Cell::Real(e.ev),
                Cell::Real(e.ephi),
                e.thickness[0].into(),
                e.thickness[1].into(),
                Cell::Real(e.boundary_residual),
            ]
        })
        .collect()
}

pub const REPORT_HEADER: [&str; 8] = [
    "epsilon",
    "n",
    "E_u",
    "E_v",
    "E_phi",
    "thickness_left",
    "thickness_right",
    "boundary_residual",
];

fn sweep_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let plan = plan_for(cfg)?;
    if plan.epsilons.len() < cfg.epsilons().len() {
        warn!("epsilon = 0 dropped from the sweep; it is the outer problem");
    }
    let art = run_sweep_with_artifacts(&plan)?;
    let r = &art.report;
    if wants(cfg, "csv") {
        write_csv(&out.join("report.csv"), &REPORT_HEADER, &report_rows(r))?;
    }
    if wants(cfg, "json") {
        write_json(&out.join("report.json"), r)?;
    }
    let profiles_dir = out.join("profiles");
    std::fs::create_dir_all(&profiles_dir)?;
    let finest = art.profiles.last().unwrap();
    write_outer(cfg, &profiles_dir, &finest.outer)?;
    if wants(cfg, "csv") {
        write_layer(&profiles_dir.join("layer_left.csv"), &finest.layers[0])?;
        write_layer(&profiles_dir.join("layer_right.csv"), &finest.layers[1])?;
    }
    if cfg.output.trajectories && wants(cfg, "csv") {
        let dir = out.join("trajectories");
        std::fs::create_dir_all(&dir)?;
        for (i, run) in art.runs.iter().enumerate() {
            write_csv(&dir.join(format!("eps{i}.csv")), &["t", "x", "u", "v", "phi"], &trajectory_rows(&run.trajectory))?;
        }
    }
    if verbose {
        for e in &r.entries {
            println!("eps = {:.6e}  n = {:5}  E_u = {:.3e}  E_v = {:.3e}  E_phi = {:.3e}", e.epsilon, e.n, e.eu, e.ev, e.ephi);
        }
        for c in &r.checks {
            println!("[{}] {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
        }
    }
    let ok = report_ledger(&r.invariants, verbose);
    if let Some(msg) = &r.incomplete {
        return Err(Error::numerical("sweep", 0, 0.0, format!("incomplete report written: {msg}")));
    }
    Ok(ok)
}

#[derive(Debug, Serialize)]
struct CheckReport {
    compatibility: CompatibilityReport,
    invariants: Vec<InvariantEntry>,
}

fn check_cmd(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<bool> {
    let plan = plan_for(cfg)?;
    let params = ModelParams::new(0.0, cfg.model.v_star, cfg.model.horizon, plan.preset.clone())?;
    let fit_cells = profile_cells(cfg).max(crate::model::MIN_CELLS_FOR_FIT);
    let grid = crate::grids::make_interval_grid(fit_cells, cfg.grading())?;
    let data = build_initial_data(&plan.preset, &params, &grid)?;
    let compat = check_compatibility(&data, cfg.model.v_star)?;
    if verbose || !compat.pass {
        for c in &compat.residuals {
            println!(
                "[{}] {:?}: left {:.3e}, right {:.3e} (tolerance {:.0e})",
                if c.pass { "pass" } else { "FAIL" },
                c.condition,
                c.at_left,
                c.at_right,
                compat.tolerance
            );
        }
    }
    // a quick pre-flight: coarsest sweep grid and a short time mesh unless
    // time.steps is set; `sweep` runs the battery on the real meshes
    let coarsest = plan
        .epsilons
        .iter()
        .map(|e| cells_at(cfg, *e))
        .min()
        .unwrap_or(crate::grids::MIN_INTERVAL_CELLS * 4);
    let mut plan = plan;
    if plan.steps.is_none() {
        plan.steps = Some(CHECK_STEPS.div_ceil(plan.outputs) * plan.outputs);
    }
    let stepper = sweep_stepper(&plan, coarsest)?;
    let set = solve_profiles(&plan, coarsest, &stepper)?;
    let invariants = invariant_battery(&set.outer, &set.layers, &[]);
    let ok = report_ledger(&invariants, verbose) && compat.pass;
    if wants(cfg, "json") {
        write_json(
            &out.join("check.json"),
            &CheckReport {
                compatibility: compat,
                invariants,
            },
        )?;
    }
    Ok(ok)
}
