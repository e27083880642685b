//! The epsilon sweep: profiles once, one full solve per `eps`, remainders,
//! rate fits, layer thickness, boundary and interior checks, and the
//! invariant battery.

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{assemble, compute_remainders, Assembly, Order, Remainders};
use crate::grids::{make_halfline_grid, make_interval_grid, Grading, IntervalGrid, QuadratureRule};
use crate::interval::{solve_full, solve_outer0, OuterProfiles, TimeStepper, Trajectory, NEGATIVITY_TOL};
use crate::layers::{solve_all_layers, LayerProfiles, BRACKET_SLACK};
use crate::model::{build_initial_data, InitialPreset, ModelParams};

/// Wall amplitudes below this are treated as "no layer".
pub const THICKNESS_FLOOR: f64 = 1e-11;
pub const MASS_TOL: f64 = 1e-10;

/// `eps = 2^-6, ..., 2^-14`.
pub fn default_epsilons() -> Vec<f64> {
    (6..=14).map(|k| 2f64.powi(-k)).collect()
}

/// Cell count for `dx <= sqrt(eps) / cells_per_layer`, rounded up to a power
/// of two.
pub fn cells_for(epsilon: f64, cells_per_layer: f64) -> usize {
    let raw = (cells_per_layer / epsilon.sqrt()).ceil() as usize;
    raw.max(crate::grids::MIN_INTERVAL_CELLS).next_power_of_two()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcceptanceBands {
    pub slope_ev: f64,
    pub slope_eu: f64,
    pub min_r_squared: f64,
    pub thickness: (f64, f64),
    pub slope_boundary: f64,
    /// Interior sup must be at most this fraction of the full-interval sup.
    pub interior_ratio: f64,
    /// Full-interval sup must exceed this fraction of `|v_* - v^{I,0}(0,T)|`.
    pub gap_fraction: f64,
}

impl Default for AcceptanceBands {
    fn default() -> Self {
        Self {
            slope_ev: 0.45,
            slope_eu: 0.20,
            min_r_squared: 0.95,
            thickness: (0.4, 0.6),
            slope_boundary: 0.20,
            interior_ratio: 0.1,
            gap_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub v_star: f64,
    pub horizon: f64,
    pub preset: InitialPreset,
    pub grading: Grading,
    /// `dx <= sqrt(eps) / cells_per_layer`.
    pub cells_per_layer: f64,
    pub max_cells: usize,
    /// Pins one shared profile grid; by default each sweep grid gets its own.
    pub outer_cells: Option<usize>,
    pub z_max: f64,
    pub m: usize,
    pub quadrature: QuadratureRule,
    pub outputs: usize,
    /// Fixed step count; `None` uses the default `dt` rule on the outer grid.
    pub steps: Option<usize>,
    pub cfl: f64,
    pub order: Order,
    pub threshold: f64,
    pub delta: f64,
    pub bands: AcceptanceBands,
}

impl SweepPlan {
    pub fn paper_default() -> Self {
        Self {
            epsilons: default_epsilons(),
            v_star: 1.0,
            horizon: 0.25,
            preset: InitialPreset::PaperPoly8,
            grading: Grading::Uniform,
            cells_per_layer: 8.0,
            max_cells: 1 << 15,
            outer_cells: None,
            z_max: 32.0,
            m: 2048,
            quadrature: QuadratureRule::TRAPEZOID,
            outputs: 8,
            steps: None,
            cfl: 0.5,
            order: Order::Full,
            threshold: 0.1,
            delta: 0.25,
            bands: AcceptanceBands::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Input("the sweep needs at least one epsilon".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Input("every sweep epsilon must be finite and > 0".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Input("sweep epsilons must be strictly decreasing".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Input(format!("thickness threshold must lie in (0,1), got {}", self.threshold)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Input(format!("interior delta must lie in (0,1/2), got {}", self.delta)));
        }
        if !(self.cells_per_layer > 0.0) {
            return Err(Error::Input("cells_per_layer must be > 0".into()));
        }
        ModelParams::new(0.0, self.v_star, self.horizon, self.preset.clone())?;
        Ok(())
    }

    /// `(eps, n)` pairs that fit under `max_cells`; the rest are dropped
    /// with a warning.
    pub fn resolved(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for &eps in &self.epsilons {
            let n = cells_for(eps, self.cells_per_layer);
            if n > self.max_cells {
                warn!("dropping eps = {eps:e}: needs {n} cells, cap is {}", self.max_cells);
            } else {
                out.push((eps, n));
            }
        }
        out
    }

    fn grid(&self, n: usize) -> Result<IntervalGrid> {
        make_interval_grid(n, self.grading)
    }

    fn params(&self, epsilon: f64) -> ModelParams {
        ModelParams {
            epsilon,
            v_star: self.v_star,
            horizon: self.horizon,
            preset: self.preset.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub excluded: usize,
}

/// Least-squares line through `(ln eps, ln err)`. Nonpositive errors are
/// dropped with a warning.
pub fn fit_rate(eps: &[f64], err: &[f64]) -> Result<RateFit> {
    if eps.len() != err.len() {
        return Err(Error::Input(format!("{} epsilons vs {} errors", eps.len(), err.len())));
    }
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(err)
        .filter(|(e, r)| **e > 0.0 && **r > 0.0 && r.is_finite())
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    let excluded = eps.len() - pts.len();
    if excluded > 0 {
        warn!("fit_rate: {excluded} nonpositive or nonfinite values excluded");
    }
    if pts.len() < 3 {
        return Err(Error::Input(format!("fit_rate needs >= 3 usable points, got {}", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("fit_rate needs distinct epsilons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        excluded,
    })
}

/// Distance from each wall at which `|v_full - v_outer|` first drops to
/// `threshold` times its wall value. Crossings are located by log-linear
/// interpolation, which is exact for exponential profiles.
pub fn measure_thickness(
    grid: &IntervalGrid,
    v_full: &[f64],
    v_outer: &[f64],
    threshold: f64,
) -> Result<[Option<f64>; 2]> {
    if v_full.len() != grid.len() || v_outer.len() != grid.len() {
        return Err(Error::Mismatch("thickness fields must live on the grid".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Input(format!("threshold must lie in (0,1), got {threshold}")));
    }
    let d: Vec<f64> = v_full.iter().zip(v_outer).map(|(a, b)| (a - b).abs()).collect();
    let x = grid.nodes();
    let n = grid.n();
    let one_side = |order: &mut dyn Iterator<Item = usize>, dist: &dyn Fn(f64) -> f64| -> Option<f64> {
        let idx: Vec<usize> = order.collect();
        let amp = d[idx[0]];
        if amp < THICKNESS_FLOOR {
            return None;
        }
        let target = threshold * amp;
        for w in idx.windows(2) {
            let (i, j) = (w[0], w[1]);
            if d[j] <= target {
                let (x0, x1) = (dist(x[i]), dist(x[j]));
                let frac = if d[j] > 0.0 {
                    (d[i] / target).ln() / (d[i] / d[j]).ln()
                } else {
                    (d[i] - target) / d[i]
                };
                return Some(x0 + frac * (x1 - x0));
            }
        }
        None
    };
    let left = one_side(&mut (0..=n), &|x| x);
    let right = one_side(&mut (0..=n).rev(), &|x| 1.0 - x);
    Ok([left, right])
}

/// `max_t |u(wall,t) - u^{I,0}(wall,t) exp(v_* - v^{I,0}(wall,t))|` per wall,
/// on a shared time mesh.
pub fn boundary_value_check(
    u_full: &[Vec<f64>; 2],
    u_outer: &[Vec<f64>; 2],
    v_outer: &[Vec<f64>; 2],
    v_star: f64,
) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for side in 0..2 {
        let (uf, uo, vo) = (&u_full[side], &u_outer[side], &v_outer[side]);
        if uf.len() != uo.len() || uo.len() != vo.len() {
            return Err(Error::Mismatch("boundary traces must share a time mesh".into()));
        }
        out[side] = uf
            .iter()
            .zip(uo)
            .zip(vo)
            .map(|((uf, uo), vo)| (uf - uo * (v_star - vo).exp()).abs())
            .fold(0.0, f64::max);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorCheck {
    pub u_interior: f64,
    pub u_full: f64,
    pub v_interior: f64,
    pub v_full: f64,
}

/// Sup differences on `[delta, 1 - delta]` and on `[0, 1]`.
pub fn interior_check(
    grid: &IntervalGrid,
    u_full: &[f64],
    u_outer: &[f64],
    v_full: &[f64],
    v_outer: &[f64],
    delta: f64,
) -> Result<InteriorCheck> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Input(format!("delta must lie in (0,1/2), got {delta}")));
    }
    let x = grid.nodes();
    let sup = |a: &[f64], b: &[f64], interior: bool| {
        a.iter()
            .zip(b)
            .zip(x)
            .filter(|(_, x)| !interior || (**x >= delta && **x <= 1.0 - delta))
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    Ok(InteriorCheck {
        u_interior: sup(u_full, u_outer, true),
        u_full: sup(u_full, u_outer, false),
        v_interior: sup(v_full, v_outer, true),
        v_full: sup(v_full, v_outer, false),
    })
}

/// One full solve with its assembly.
#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub trajectory: Trajectory,
    pub assembly: Assembly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantEntry {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
    /// Soft entries are reported but never fail a run.
    pub hard: bool,
}

impl InvariantEntry {
    fn new(name: impl Into<String>, residual: f64, bound: f64, hard: bool) -> Self {
        Self {
            name: name.into(),
            residual,
            bound,
            pass: residual <= bound,
            hard,
        }
    }
}

/// Fault injection for the battery's own tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// `v -> -v` in every stored snapshot.
    FlipV,
    /// `u -> -u` in every stored snapshot.
    FlipU,
}

pub fn apply_corruption(traj: &mut Trajectory, c: Corruption) {
    for s in &mut traj.states {
        let f = match c {
            Corruption::FlipV => &mut s.v,
            Corruption::FlipU => &mut s.u,
        };
        f.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Every module-level invariant with its measured residual.
pub fn invariant_battery(outer: &OuterProfiles, layers: &[LayerProfiles; 2], runs: &[EpsilonRun]) -> Vec<InvariantEntry> {
    let v_star = outer.v_star;
    let v0 = &outer.v_hist[0];
    let max_v0 = v0.iter().copied().fold(0.0, f64::max);
    let u_scale = outer.u_hist[0].iter().copied().fold(1.0, f64::max);
    let dt = outer.stepper.dt();
    let mut out = vec![
        InvariantEntry::new("mass.outer", outer.max_mass_drift, MASS_TOL, true),
        InvariantEntry::new(
            "outer.exponential_identity",
            outer.exponential_identity_residual(),
            5.0 * dt * dt * max_v0.max(f64::MIN_POSITIVE),
            true,
        ),
        InvariantEntry::new("outer.nonnegative", (-outer.u_min).max(0.0), NEGATIVITY_TOL * u_scale, true),
    ];
    for l in layers {
        let side = l.side.name();
        let below = (-l.v0_min).max(0.0);
        let above = (l.v0_max - v_star).max(0.0);
        out.push(InvariantEntry::new(format!("layer.{side}.bracket"), below.max(above), BRACKET_SLACK, true));
        out.push(InvariantEntry::new(format!("layer.{side}.decay"), l.decay_residual(), 1e-8, false));
    }
    let v_hi = max_v0.max(v_star);
    for run in runs {
        let eps = run.epsilon;
        let traj = &run.trajectory;
        out.push(InvariantEntry::new(format!("mass.full[{eps:e}]"), traj.max_mass_drift, MASS_TOL, true));
        let u_min = traj
            .states
            .iter()
            .flat_map(|s| s.u.iter())
            .copied()
            .fold(traj.u_min, f64::min);
        out.push(InvariantEntry::new(
            format!("full.nonnegative[{eps:e}]"),
            (-u_min).max(0.0),
            NEGATIVITY_TOL * u_scale,
            true,
        ));
        let (lo, hi) = traj
            .states
            .iter()
            .flat_map(|s| s.v.iter())
            .fold((traj.v_min, traj.v_max), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let violation = (-lo).max(hi - v_hi).max(0.0);
        out.push(InvariantEntry::new(
            format!("full.max_principle[{eps:e}]"),
            violation,
            1e-10 * v_hi.max(1.0),
            true,
        ));
        let (bv, bphi) = run.assembly.boundary_residual(v_star);
        out.push(InvariantEntry::new(
            format!("assembly.boundary[{eps:e}]"),
            bv.max(bphi),
            1e-12 * v_star.max(1.0),
            true,
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonEntry {
    pub epsilon: f64,
    pub n: usize,
    pub eu: f64,
    pub ev: f64,
    pub ephi: f64,
    pub ephi_x: f64,
    pub thickness: [Option<f64>; 2],
    /// Max over both walls.
    pub boundary_residual: f64,
    pub interior: InteriorCheck,
    pub mass_drift: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Slopes {
    pub eu: Option<RateFit>,
    pub ev: Option<RateFit>,
    pub ephi: Option<RateFit>,
    pub thickness_left: Option<RateFit>,
    pub thickness_right: Option<RateFit>,
    pub boundary: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub preset: String,
    pub v_star: f64,
    pub horizon: f64,
    pub steps: usize,
    pub dt: f64,
    /// Grid levels on which the profiles were computed.
    pub outer_cells: Vec<usize>,
    /// `v_* = 0`: the layers vanish and the sweep measures plain vanishing
    /// diffusion.
    pub degenerate: bool,
    pub entries: Vec<EpsilonEntry>,
    pub slopes: Slopes,
    /// `|v_* - v^{I,0}(0, T)|`.
    pub wall_gap: f64,
    pub invariants: Vec<InvariantEntry>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Set when a per-eps solve aborted; entries hold what finished.
    pub incomplete: Option<String>,
}

impl ConvergenceReport {
    pub fn invariants_pass(&self) -> bool {
        self.invariants.iter().all(|e| e.pass || !e.hard)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Outer and layer profiles on one interval grid.
pub struct ProfileSet {
    pub cells: usize,
    pub outer: OuterProfiles,
    pub layers: [LayerProfiles; 2],
}

/// Everything the sweep computes, for callers that want the fields too.
pub struct SweepArtifacts {
    /// One set per grid level, finest last.
    pub profiles: Vec<ProfileSet>,
    pub runs: Vec<EpsilonRun>,
    pub report: ConvergenceReport,
}

impl SweepArtifacts {
    /// Profiles used for a run on `n` cells.
    pub fn profiles_for(&self, n: usize) -> &ProfileSet {
        self.profiles.iter().find(|p| p.cells % n == 0).expect("every run has a nesting profile grid")
    }
}

pub fn run_sweep(plan: &SweepPlan) -> Result<ConvergenceReport> {
    run_sweep_with_artifacts(plan).map(|a| a.report)
}

/// Shared time mesh: the plan's fixed step count, or the default `dt` rule
/// on the finest grid.
pub fn sweep_stepper(plan: &SweepPlan, finest: usize) -> Result<TimeStepper> {
    match plan.steps {
        Some(steps) => TimeStepper::new(plan.horizon, steps, plan.outputs),
        None => {
            let grid = plan.grid(finest)?;
            let data = build_initial_data(&plan.preset, &plan.params(0.0), &grid)?;
            TimeStepper::with_default_dt(plan.horizon, &grid, &data.v0, plan.outputs, plan.cfl)
        }
    }
}

/// Outer and layer profiles on `cells` cells with the given time mesh.
pub fn solve_profiles(plan: &SweepPlan, cells: usize, stepper: &TimeStepper) -> Result<ProfileSet> {
    let grid = plan.grid(cells)?;
    let params = plan.params(0.0);
    let data = build_initial_data(&plan.preset, &params, &grid)?;
    let mut outer = solve_outer0(&params, &data, stepper).map_err(|e| e.context("outer profiles"))?;
    let hl = make_halfline_grid(plan.z_max, plan.m)?;
    let layers = solve_all_layers(&mut outer, &hl, plan.quadrature).map_err(|e| e.context("layer profiles"))?;
    Ok(ProfileSet { cells, outer, layers })
}

fn solve_one(plan: &SweepPlan, set: &ProfileSet, stepper: &TimeStepper, eps: f64, n: usize) -> Result<EpsilonRun> {
    let grid = plan.grid(n)?;
    let params = plan.params(eps);
    let data = build_initial_data(&plan.preset, &params, &grid)?;
    let trajectory = solve_full(&params, &data, stepper)?;
    let assembly = assemble(plan.order, &set.outer, &set.layers, eps, &grid)?;
    Ok(EpsilonRun {
        epsilon: eps,
        trajectory,
        assembly,
    })
}

fn entry_for(plan: &SweepPlan, outer: &OuterProfiles, run: &EpsilonRun) -> Result<EpsilonEntry> {
    let traj = &run.trajectory;
    let grid = &traj.grid;
    let rem: Remainders = compute_remainders(traj, &run.assembly)?;
    let last = outer.u_hist.len() - 1;
    let v_out = grid.restrict(&outer.grid, &outer.v_hist[last])?;
    let end = traj.last();
    let thickness = measure_thickness(grid, &end.v, &v_out, plan.threshold)?;
    let w = &outer.walls;
    let boundary = boundary_value_check(&traj.wall_u, &[w[0].u.clone(), w[1].u.clone()], &[w[0].v.clone(), w[1].v.clone()], plan.v_star)?;
    // interior sups over every output time
    let mut interior = InteriorCheck {
        u_interior: 0.0,
        u_full: 0.0,
        v_interior: 0.0,
        v_full: 0.0,
    };
    for (k, s) in traj.states.iter().enumerate() {
        let step = k * traj.stepper.output_every;
        let uo = grid.restrict(&outer.grid, &outer.u_hist[step])?;
        let vo = grid.restrict(&outer.grid, &outer.v_hist[step])?;
        let c = interior_check(grid, &s.u, &uo, &s.v, &vo, plan.delta)?;
        interior.u_interior = interior.u_interior.max(c.u_interior);
        interior.u_full = interior.u_full.max(c.u_full);
        interior.v_interior = interior.v_interior.max(c.v_interior);
        interior.v_full = interior.v_full.max(c.v_full);
    }
    Ok(EpsilonEntry {
        epsilon: run.epsilon,
        n: grid.n(),
        eu: rem.eu,
        ev: rem.ev,
        ephi: rem.ephi,
        ephi_x: rem.ephi_x,
        thickness,
        boundary_residual: boundary[0].max(boundary[1]),
        interior,
        mass_drift: traj.max_mass_drift,
    })
}

/// Profiles are epsilon-independent. By default they are computed once per
/// distinct sweep grid, so each full solve is compared with profiles from
/// the same spatial discretization; `outer_cells` pins a single shared grid
/// instead (restricted by injection).
pub fn run_sweep_with_artifacts(plan: &SweepPlan) -> Result<SweepArtifacts> {
    plan.validate()?;
    let resolved = plan.resolved();
    if resolved.is_empty() {
        return Err(Error::Input("no sweep epsilon fits under the cell cap".into()));
    }
    let finest = resolved.iter().map(|r| r.1).max().unwrap();
    let mut levels: Vec<usize> = match plan.outer_cells {
        Some(c) => vec![c],
        None => resolved.iter().map(|r| r.1).collect(),
    };
    levels.sort_unstable();
    levels.dedup();
    let top = *levels.last().unwrap();
    if let Some((eps, n)) = resolved.iter().find(|(_, n)| !levels.iter().any(|c| c % n == 0)) {
        return Err(Error::Input(format!(
            "outer grid of {top} cells does not nest the {n}-cell grid for eps = {eps:e}"
        )));
    }
    let stepper = sweep_stepper(plan, finest.max(top))?;
    info!("profiles on {levels:?} cells, {} steps", stepper.steps);
    let profiles = levels
        .par_iter()
        .map(|&c| solve_profiles(plan, c, &stepper))
        .collect::<Result<Vec<_>>>()?;
    let set_for = |n: usize| profiles.iter().find(|p| p.cells % n == 0).unwrap();

    let results: Vec<Result<EpsilonRun>> = resolved
        .par_iter()
        .map(|&(eps, n)| {
            info!("full solve eps = {eps:e}, n = {n}");
            solve_one(plan, set_for(n), &stepper, eps, n).map_err(|e| e.context(format!("eps = {eps:e}")))
        })
        .collect();
    let mut runs = Vec::new();
    let mut incomplete = None;
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => {
                warn!("sweep aborted: {e}");
                incomplete = Some(e.to_string());
                break;
            }
        }
    }
    let entries = runs
        .iter()
        .map(|r| entry_for(plan, &set_for(r.trajectory.grid.n()).outer, r))
        .collect::<Result<Vec<_>>>()?;
    let mut invariants = Vec::new();
    for p in &profiles {
        let mine: Vec<EpsilonRun> = runs
            .iter()
            .filter(|r| std::ptr::eq(set_for(r.trajectory.grid.n()), p))
            .cloned()
            .collect();
        for mut e in invariant_battery(&p.outer, &p.layers, &mine) {
            if levels.len() > 1 && !e.name.contains('[') {
                e.name = format!("{}[n={}]", e.name, p.cells);
            }
            invariants.push(e);
        }
    }
    let outer = &profiles.last().unwrap().outer;
    let last = outer.walls[0].v.len() - 1;
    let wall_gap = (plan.v_star - outer.walls[0].v[last]).abs();
    let degenerate = plan.v_star == 0.0;
    let mut report = ConvergenceReport {
        preset: plan.preset.name().to_string(),
        v_star: plan.v_star,
        horizon: plan.horizon,
        steps: stepper.steps,
        dt: stepper.dt(),
        outer_cells: levels,
        degenerate,
        entries,
        slopes: Slopes::default(),
        wall_gap,
        invariants,
        checks: Vec::new(),
        notes: Vec::new(),
        incomplete,
    };
    if degenerate {
        report
            .notes
            .push("v_* = 0: layer-free mode, remainders measure plain vanishing-diffusion convergence".into());
    }
    fill_slopes_and_checks(&mut report, &plan.bands);
    Ok(SweepArtifacts {
        profiles,
        runs,
        report,
    })
}

fn fit_series(eps: &[f64], vals: &[Option<f64>]) -> Option<RateFit> {
    let (e, v): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(vals)
        .filter_map(|(e, v)| v.map(|v| (*e, v)))
        .unzip();
    fit_rate(&e, &v).ok()
}

/// Allows one inversion, as resolution noise can produce a single blip.
fn nonincreasing_with_one_inversion(vals: &[f64]) -> bool {
    vals.windows(2).filter(|w| w[1] > w[0]).count() <= 1
}

fn fill_slopes_and_checks(report: &mut ConvergenceReport, bands: &AcceptanceBands) {
    let e = &report.entries;
    let eps: Vec<f64> = e.iter().map(|x| x.epsilon).collect();
    let col = |f: fn(&EpsilonEntry) -> f64| e.iter().map(|x| Some(f(x))).collect::<Vec<_>>();
    report.slopes = Slopes {
        eu: fit_series(&eps, &col(|x| x.eu)),
        ev: fit_series(&eps, &col(|x| x.ev)),
        ephi: fit_series(&eps, &col(|x| x.ephi)),
        thickness_left: fit_series(&eps, &e.iter().map(|x| x.thickness[0]).collect::<Vec<_>>()),
        thickness_right: fit_series(&eps, &e.iter().map(|x| x.thickness[1]).collect::<Vec<_>>()),
        boundary: fit_series(&eps, &col(|x| x.boundary_residual)),
    };
    if e.len() < 3 {
        warn!("{} epsilon value(s): slopes are absent", e.len());
        report.notes.push("fewer than 3 epsilons: slopes absent".into());
    }
    let s = report.slopes.clone();
    let mut checks = Vec::new();
    let floor = |name: &str, fit: Option<RateFit>, min_slope: f64| {
        let pass = fit.is_some_and(|f| f.slope >= min_slope && f.r_squared >= bands.min_r_squared);
        Check {
            name: name.into(),
            value: fit.map(|f| f.slope),
            pass,
            detail: match fit {
                Some(f) => format!("slope {:.4} (R^2 {:.4}), floor {min_slope}", f.slope, f.r_squared),
                None => "absent".into(),
            },
        }
    };
    checks.push(floor("rate.ev", s.ev, bands.slope_ev));
    checks.push(floor("rate.eu", s.eu, bands.slope_eu));
    checks.push(floor("rate.boundary_value", s.boundary, bands.slope_boundary));
    for (name, fit) in [("thickness.left", s.thickness_left), ("thickness.right", s.thickness_right)] {
        let (lo, hi) = bands.thickness;
        checks.push(Check {
            name: name.into(),
            value: fit.map(|f| f.slope),
            pass: fit.is_some_and(|f| f.slope >= lo && f.slope <= hi),
            detail: match fit {
                Some(f) => format!("exponent {:.4} (R^2 {:.4}), band [{lo}, {hi}]", f.slope, f.r_squared),
                None => "absent".into(),
            },
        });
    }
    if let Some(finest) = e.last() {
        let i = finest.interior;
        let ratio = if i.v_full > 0.0 { i.v_interior / i.v_full } else { 0.0 };
        let gap_floor = bands.gap_fraction * report.wall_gap;
        checks.push(Check {
            name: "interior.ratio".into(),
            value: Some(ratio),
            pass: ratio <= bands.interior_ratio,
            detail: format!(
                "interior sup {:.3e} / full sup {:.3e} at eps = {:e}, bound {}",
                i.v_interior, i.v_full, finest.epsilon, bands.interior_ratio
            ),
        });
        checks.push(Check {
            name: "interior.gap".into(),
            value: Some(i.v_full),
            pass: i.v_full > gap_floor,
            detail: format!("full sup {:.3e} vs floor {:.3e}", i.v_full, gap_floor),
        });
    }
    let evs: Vec<f64> = e.iter().map(|x| x.ev).collect();
    let eus: Vec<f64> = e.iter().map(|x| x.eu).collect();
    checks.push(Check {
        name: "trend.monotone".into(),
        value: None,
        pass: nonincreasing_with_one_inversion(&evs) && nonincreasing_with_one_inversion(&eus),
        detail: "Ev and Eu nonincreasing as eps decreases (one inversion allowed)".into(),
    });
    report.checks = checks;
}
