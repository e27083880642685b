//! Time integration on `[0,1]`: the full system for `eps > 0`, the leading
//! outer problem (`eps = 0`) and the first-order outer problem.
//!
//! All three use the same building blocks. The cell density is advanced in
//! conservative flux form
//!
//! ```text
//! w_i du_i/dt = F_{i+1/2} - F_{i-1/2},
//! F_{i+1/2} = (u_{i+1} - u_i)/h_i - (u_i + u_{i+1})/2 * (v_{i+1} - v_i)/h_i,
//! ```
//!
//! with `F = 0` on both walls and `w_i` the trapezoid weights, so the
//! discrete mass `sum w_i u_i` telescopes exactly. Time stepping is BDF2
//! (backward Euler for the first step), linearly implicit in each unknown,
//! with a short predictor-corrector loop for the coupling. BDF2 rather than
//! an explicit-transport IMEX step keeps the scheme second order in time so
//! that joint `(dx, dt)` halving shows the spatial order.

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::IntervalGrid;
use crate::model::{InitialData, ModelParams};
use crate::tridiag::Tridiagonal;

/// Default number of steps on `[0, T]` before any CFL refinement.
pub const DEFAULT_STEPS: usize = 2000;
/// Negative `u` below `-NEGATIVITY_TOL * max(1, max u0)` aborts a solve.
pub const NEGATIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeScheme {
    /// BDF2 with a backward-Euler start; `passes` coupling sweeps per step.
    Bdf2 { passes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeStepper {
    pub horizon: f64,
    pub steps: usize,
    /// Snapshots are kept every `output_every` steps (and at `t = 0`).
    pub output_every: usize,
    pub scheme: TimeScheme,
    /// Safety factor of the transport guard `dt <= cfl * dx / max|v_x|`.
    pub cfl: f64,
    /// Treat a violated layer-resolution guard as an error instead of a warning.
    pub strict_resolution: bool,
}

impl TimeStepper {
    pub fn new(horizon: f64, steps: usize, outputs: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Input(format!("horizon must be > 0, got {horizon}")));
        }
        if outputs == 0 || steps == 0 || !steps.is_multiple_of(outputs) {
            return Err(Error::Input(format!(
                "step count {steps} must be a positive multiple of the output count {outputs}"
            )));
        }
        Ok(Self {
            horizon,
            steps,
            output_every: steps / outputs,
            scheme: TimeScheme::Bdf2 { passes: 2 },
            cfl: 0.5,
            strict_resolution: false,
        })
    }

    /// `dt = min(T / 2000, cfl * dx_min / max|v0_x|)`, rounded so the step
    /// count is a multiple of `outputs`.
    pub fn with_default_dt(
        horizon: f64,
        grid: &IntervalGrid,
        v0: &[f64],
        outputs: usize,
        cfl: f64,
    ) -> Result<Self> {
        let vx_max = grid
            .derivative(v0)
            .iter()
            .map(|d| d.abs())
            .fold(0.0, f64::max);
        let mut dt = horizon / DEFAULT_STEPS as f64;
        if vx_max > 0.0 {
            dt = dt.min(cfl * grid.min_spacing() / vx_max);
        }
        let outputs = outputs.max(1);
        let raw = (horizon / dt).ceil() as usize;
        let steps = raw.div_ceil(outputs) * outputs;
        let mut s = Self::new(horizon, steps, outputs)?;
        s.cfl = cfl;
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        self.horizon * step as f64 / self.steps as f64
    }

    pub fn outputs(&self) -> usize {
        self.steps / self.output_every
    }

    pub fn output_steps(&self) -> Vec<usize> {
        (0..=self.steps).step_by(self.output_every).collect()
    }

    pub fn passes(&self) -> usize {
        match self.scheme {
            TimeScheme::Bdf2 { passes } => passes.max(1),
        }
    }

    /// Same horizon and outputs with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            steps: self.steps * factor,
            output_every: self.output_every * factor,
            ..self.clone()
        }
    }

    /// Same time mesh, different output cadence.
    pub fn same_mesh(&self, other: &TimeStepper) -> bool {
        self.steps == other.steps && self.horizon == other.horizon
    }
}

/// `y' ~ alpha y^{n+1} - b y^n - c y^{n-1}`.
#[derive(Debug, Clone, Copy)]
struct Bdf {
    alpha: f64,
    b: f64,
    c: f64,
}

impl Bdf {
    fn new(first: bool, dt: f64) -> Self {
        if first {
            Self {
                alpha: 1.0 / dt,
                b: 1.0 / dt,
                c: 0.0,
            }
        } else {
            Self {
                alpha: 1.5 / dt,
                b: 2.0 / dt,
                c: -0.5 / dt,
            }
        }
    }

    fn history(&self, now: f64, prev: f64) -> f64 {
        self.b * now + self.c * prev
    }

    /// Linear extrapolation to the new level (second order), or the current
    /// value on the first step.
    fn extrapolate(&self, now: f64, prev: f64) -> f64 {
        if self.c == 0.0 {
            now
        } else {
            2.0 * now - prev
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateUV {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Output of [`solve_full`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: IntervalGrid,
    pub epsilon: f64,
    pub mass: f64,
    pub stepper: TimeStepper,
    /// Snapshots at `stepper.output_steps()`.
    pub states: Vec<StateUV>,
    /// `u(0, t_k)` and `u(1, t_k)` at every step.
    pub wall_u: [Vec<f64>; 2],
    /// Largest `|sum w u - M| / M` seen over all steps.
    pub max_mass_drift: f64,
    pub u_min: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Trajectory {
    pub fn last(&self) -> &StateUV {
        self.states.last().unwrap()
    }

    pub fn phi(&self, k: usize) -> Vec<f64> {
        crate::model::antiderivative_transform(&self.states[k].u, self.mass, &self.grid)
    }
}

fn relative_drift(mass_now: f64, mass: f64) -> f64 {
    if mass > 0.0 {
        (mass_now - mass).abs() / mass
    } else {
        mass_now.abs()
    }
}

/// Flux-form operator rows for `u` with a given `v`, assembled into
/// `alpha W - A(v)`.
fn assemble_u_matrix(grid: &IntervalGrid, w: &[f64], v: &[f64], alpha: f64, m: &mut Tridiagonal) {
    let n = grid.n();
    m.lower.fill(0.0);
    m.upper.fill(0.0);
    for (d, wi) in m.diag.iter_mut().zip(w) {
        *d = alpha * wi;
    }
    for i in 0..n {
        // flux through the face between i and i+1
        let h = grid.h(i);
        let g = (v[i + 1] - v[i]) / h;
        let cu_i = -1.0 / h - 0.5 * g;
        let cu_ip = 1.0 / h - 0.5 * g;
        // +F for row i, -F for row i+1
        m.diag[i] -= cu_i;
        m.upper[i] -= cu_ip;
        m.lower[i + 1] += cu_i;
        m.diag[i + 1] += cu_ip;
    }
}

fn check_finite(stage: &'static str, step: usize, t: f64, f: &[f64], name: &str) -> Result<()> {
    if let Some(i) = f.iter().position(|x| !x.is_finite()) {
        return Err(Error::numerical(stage, step, t, format!("{name} is not finite at node {i}")));
    }
    Ok(())
}

fn check_negativity(stage: &'static str, step: usize, t: f64, u: &[f64], tol: f64) -> Result<f64> {
    let (i, &min) = u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if min < -tol {
        return Err(Error::numerical(
            stage,
            step,
            t,
            format!("u = {min:e} at node {i} is below -{tol:e}"),
        ));
    }
    Ok(min)
}

/// Layer-resolution guard `dx <= sqrt(eps) / 8`.
pub fn resolution_ok(grid: &IntervalGrid, epsilon: f64) -> bool {
    grid.max_spacing() <= epsilon.sqrt() / 8.0 * (1.0 + 1e-12)
}

/// Full system for `eps > 0`: flux-form `u`, implicit diffusion and
/// reaction for `v` with Dirichlet `v_*`.
pub fn solve_full(params: &ModelParams, data: &InitialData, stepper: &TimeStepper) -> Result<Trajectory> {
    const STAGE: &str = "solve_full";
    let eps = params.epsilon;
    if !(eps > 0.0) {
        return Err(Error::Input(
            "solve_full needs epsilon > 0; use the outer solver for epsilon = 0".into(),
        ));
    }
    let grid = &data.grid;
    if !resolution_ok(grid, eps) {
        let msg = format!(
            "dx = {:.3e} exceeds sqrt(eps)/8 = {:.3e}; the layer is under-resolved",
            grid.max_spacing(),
            eps.sqrt() / 8.0
        );
        if stepper.strict_resolution {
            return Err(Error::Input(msg));
        }
        warn!("{msg}");
    }
    let n = grid.n();
    let w = grid.weights();
    let dt = stepper.dt();
    let mass = data.mass;
    let tol = NEGATIVITY_TOL * data.u0.iter().copied().fold(1.0, f64::max);
    let v_lo = data.min_v0().min(0.0);
    let v_hi = data.max_v0().max(params.v_star);

    let mut u = data.u0.clone();
    let mut v = data.v0.clone();
    // walls carry v_* from the first step on
    let (mut u_prev, mut v_prev) = (u.clone(), v.clone());
    let mut mu = Tridiagonal::zeros(n + 1);
    let mut mv = Tridiagonal::zeros(n + 1);
    let mut u_new = vec![0.0; n + 1];
    let mut v_new = vec![0.0; n + 1];
    let mut u_guess = vec![0.0; n + 1];

    let mut states = vec![StateUV {
        t: 0.0,
        u: u.clone(),
        v: v.clone(),
    }];
    let mut wall_u = [vec![u[0]], vec![u[n]]];
    let (mut max_drift, mut u_min) = (0.0f64, u.iter().copied().fold(f64::INFINITY, f64::min));
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);

    for step in 0..stepper.steps {
        let t_new = stepper.time(step + 1);
        let bdf = Bdf::new(step == 0, dt);
        for i in 0..=n {
            u_guess[i] = bdf.extrapolate(u[i], u_prev[i]);
        }
        for _ in 0..stepper.passes() {
            // v: (alpha + u) w v - eps D v = w * history
            for i in 1..n {
                let hm = grid.h(i - 1);
                let hp = grid.h(i);
                mv.lower[i] = -eps / hm;
                mv.upper[i] = -eps / hp;
                mv.diag[i] = (bdf.alpha + u_guess[i]) * w[i] + eps * (1.0 / hm + 1.0 / hp);
                v_new[i] = w[i] * bdf.history(v[i], v_prev[i]);
            }
            mv.set_identity_row(0);
            mv.set_identity_row(n);
            v_new[0] = params.v_star;
            v_new[n] = params.v_star;
            mv.solve_in_place(&mut v_new);

            assemble_u_matrix(grid, &w, &v_new, bdf.alpha, &mut mu);
            for i in 0..=n {
                u_new[i] = w[i] * bdf.history(u[i], u_prev[i]);
            }
            mu.solve_in_place(&mut u_new);
            u_guess.copy_from_slice(&u_new);
        }
        check_finite(STAGE, step + 1, t_new, &u_new, "u")?;
        check_finite(STAGE, step + 1, t_new, &v_new, "v")?;
        u_min = u_min.min(check_negativity(STAGE, step + 1, t_new, &u_new, tol)?);
        for &x in &v_new {
            v_min = v_min.min(x);
            v_max = v_max.max(x);
        }
        if v_min < v_lo - 1e-12 || v_max > v_hi + 1e-12 {
            warn!("{STAGE}: v left [{v_lo}, {v_hi}] at step {}: [{v_min}, {v_max}]", step + 1);
        }
        max_drift = max_drift.max(relative_drift(grid.integrate(&u_new), mass));

        std::mem::swap(&mut u_prev, &mut u);
        std::mem::swap(&mut v_prev, &mut v);
        u.copy_from_slice(&u_new);
        v.copy_from_slice(&v_new);
        wall_u[0].push(u[0]);
        wall_u[1].push(u[n]);
        if (step + 1) % stepper.output_every == 0 {
            states.push(StateUV {
                t: t_new,
                u: u.clone(),
                v: v.clone(),
            });
        }
    }
    Ok(Trajectory {
        grid: grid.clone(),
        epsilon: eps,
        mass,
        stepper: stepper.clone(),
        states,
        wall_u,
        max_mass_drift: max_drift,
        u_min,
        v_min,
        v_max,
    })
}

/// Boundary traces of the outer profiles at one wall, one value per step.
#[derive(Debug, Clone, Default, Serialize)]
pub struct WallTraces {
    /// `u^{I,0} = phi_x^{I,0} + M`
    pub u: Vec<f64>,
    /// `phi_xx^{I,0} = u_x^{I,0}`
    pub u_x: Vec<f64>,
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    /// `phi_x^{I,1}` (empty until the first-order solve)
    pub phi1_x: Vec<f64>,
    /// `v^{I,1}` (empty until the first-order solve)
    pub v1: Vec<f64>,
}

/// First-order outer fields at the output steps.
#[derive(Debug, Clone)]
pub struct FirstOrderOuter {
    pub phi1: Vec<Vec<f64>>,
    pub v1: Vec<Vec<f64>>,
}

/// Leading (and, once computed, first-order) outer profiles.
#[derive(Debug, Clone)]
pub struct OuterProfiles {
    pub grid: IntervalGrid,
    pub stepper: TimeStepper,
    pub mass: f64,
    pub v_star: f64,
    /// `u^{I,0}` and `v^{I,0}` at every step.
    pub u_hist: Vec<Vec<f64>>,
    pub v_hist: Vec<Vec<f64>>,
    /// Index 0 is `x = 0`, index 1 is `x = 1`.
    pub walls: [WallTraces; 2],
    pub first_order: Option<FirstOrderOuter>,
    pub max_mass_drift: f64,
    pub u_min: f64,
}

impl OuterProfiles {
    pub fn output_steps(&self) -> Vec<usize> {
        self.stepper.output_steps()
    }

    pub fn phi0(&self, step: usize) -> Vec<f64> {
        crate::model::antiderivative_transform(&self.u_hist[step], self.mass, &self.grid)
    }

    /// Max over the grid of `|v(T) - v0 exp(-int_0^T u)|`, the time integral
    /// taken by the trapezoid rule over the stored steps.
    pub fn exponential_identity_residual(&self) -> f64 {
        let dt = self.stepper.dt();
        let steps = self.u_hist.len() - 1;
        let v0 = &self.v_hist[0];
        let vt = &self.v_hist[steps];
        (0..v0.len())
            .map(|i| {
                let mut integral = 0.0;
                for k in 0..steps {
                    integral += 0.5 * dt * (self.u_hist[k][i] + self.u_hist[k + 1][i]);
                }
                (vt[i] - v0[i] * (-integral).exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max over steps of `|v(0,t) - v_* exp(-int_0^t u(0,.))|` (and the same at
    /// `x = 1`).
    pub fn wall_trace_residual(&self) -> f64 {
        let dt = self.stepper.dt();
        let mut worst = 0.0f64;
        for wall in &self.walls {
            let mut integral = 0.0;
            for k in 0..wall.u.len() {
                if k > 0 {
                    integral += 0.5 * dt * (wall.u[k - 1] + wall.u[k]);
                }
                worst = worst.max((wall.v[k] - self.v_star * (-integral).exp()).abs());
            }
        }
        worst
    }
}

/// Leading outer problem: flux-form `u` driven by `v`, and the exact
/// exponential update `v^{n+1} = v^n exp(-dt (u^n + u^{n+1}) / 2)`.
pub fn solve_outer0(params: &ModelParams, data: &InitialData, stepper: &TimeStepper) -> Result<OuterProfiles> {
    const STAGE: &str = "solve_outer0";
    if let Ok(rep) = crate::model::check_compatibility(data, params.v_star) {
        if !rep.pass {
            warn!("initial data fail the compatibility conditions (max residual {:e})", rep.max_residual());
        }
    }
    let grid = &data.grid;
    let n = grid.n();
    let w = grid.weights();
    let dt = stepper.dt();
    let mass = data.mass;
    let tol = NEGATIVITY_TOL * data.u0.iter().copied().fold(1.0, f64::max);

    let mut u_hist = Vec::with_capacity(stepper.steps + 1);
    let mut v_hist = Vec::with_capacity(stepper.steps + 1);
    u_hist.push(data.u0.clone());
    v_hist.push(data.v0.clone());
    let mut mu = Tridiagonal::zeros(n + 1);
    let mut u_new = vec![0.0; n + 1];
    let mut v_new = vec![0.0; n + 1];
    let mut u_guess = vec![0.0; n + 1];
    let mut max_drift = 0.0f64;
    let mut u_min = data.u0.iter().copied().fold(f64::INFINITY, f64::min);

    for step in 0..stepper.steps {
        let t_new = stepper.time(step + 1);
        let bdf = Bdf::new(step == 0, dt);
        let u = &u_hist[step];
        let v = &v_hist[step];
        let u_prev = if step > 0 { &u_hist[step - 1] } else { u };
        for i in 0..=n {
            u_guess[i] = bdf.extrapolate(u[i], u_prev[i]);
        }
        for _ in 0..stepper.passes() {
            for i in 0..=n {
                v_new[i] = v[i] * (-0.5 * dt * (u[i] + u_guess[i])).exp();
            }
            assemble_u_matrix(grid, &w, &v_new, bdf.alpha, &mut mu);
            for i in 0..=n {
                u_new[i] = w[i] * bdf.history(u[i], u_prev[i]);
            }
            mu.solve_in_place(&mut u_new);
            u_guess.copy_from_slice(&u_new);
        }
        for i in 0..=n {
            v_new[i] = v[i] * (-0.5 * dt * (u[i] + u_new[i])).exp();
        }
        check_finite(STAGE, step + 1, t_new, &u_new, "u")?;
        check_finite(STAGE, step + 1, t_new, &v_new, "v")?;
        u_min = u_min.min(check_negativity(STAGE, step + 1, t_new, &u_new, tol)?);
        max_drift = max_drift.max(relative_drift(grid.integrate(&u_new), mass));
        u_hist.push(u_new.clone());
        v_hist.push(v_new.clone());
    }

    let mut walls = [WallTraces::default(), WallTraces::default()];
    for (side, wall) in walls.iter_mut().enumerate() {
        let left = side == 0;
        let idx = if left { 0 } else { n };
        for k in 0..=stepper.steps {
            wall.u.push(u_hist[k][idx]);
            wall.u_x.push(grid.endpoint_derivative(&u_hist[k], left));
            wall.v.push(v_hist[k][idx]);
            wall.v_x.push(grid.endpoint_derivative(&v_hist[k], left));
        }
    }
    Ok(OuterProfiles {
        grid: grid.clone(),
        stepper: stepper.clone(),
        mass,
        v_star: params.v_star,
        u_hist,
        v_hist,
        walls,
        first_order: None,
        max_mass_drift: max_drift,
        u_min,
    })
}

/// Layer traces feeding the first-order outer problem, one per step:
/// `phi^{B,1}(0,t)` and `phi^{b,1}(xi = 0, t)`.
#[derive(Debug, Clone)]
pub struct LayerPhiTraces {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Centred first-derivative weights at interior node `i`.
fn centred_weights(grid: &IntervalGrid, i: usize) -> (f64, f64, f64) {
    let hm = grid.h(i - 1);
    let hp = grid.h(i);
    (
        -hp / (hm * (hm + hp)),
        (hp - hm) / (hm * hp),
        hm / (hp * (hm + hp)),
    )
}

/// First-order outer problem
///
/// ```text
/// phi1_t = phi1_xx - u0 v1_x - phi1_x v0_x
/// v1_t   = -u0 v1 - phi1_x v0
/// phi1(0,t) = -phi^{B,1}(0,t),  phi1(1,t) = -phi^{b,1}(xi=0,t)
/// ```
///
/// with zero initial data. `phi1` is BDF2, `v1` uses a trapezoidal
/// variation-of-constants update.
pub fn solve_outer1(outer0: &mut OuterProfiles, traces: &LayerPhiTraces) -> Result<()> {
    const STAGE: &str = "solve_outer1";
    let stepper = outer0.stepper.clone();
    let steps = stepper.steps;
    if traces.left.len() != steps + 1 || traces.right.len() != steps + 1 {
        return Err(Error::Mismatch(format!(
            "layer traces have {}/{} samples, outer time mesh has {}",
            traces.left.len(),
            traces.right.len(),
            steps + 1
        )));
    }
    let grid = outer0.grid.clone();
    let n = grid.n();
    let w = grid.weights();
    let dt = stepper.dt();
    let mut phi = vec![0.0; n + 1];
    let mut v1 = vec![0.0; n + 1];
    let mut phi_prev = phi.clone();
    let mut v1_prev = v1.clone();
    let mut v1_guess = vec![0.0; n + 1];
    let mut phi_new = vec![0.0; n + 1];
    let mut v1_new = vec![0.0; n + 1];
    let mut m = Tridiagonal::zeros(n + 1);
    let cw: Vec<(f64, f64, f64)> = (0..=n)
        .map(|i| if i == 0 || i == n { (0.0, 0.0, 0.0) } else { centred_weights(&grid, i) })
        .collect();

    let mut out_phi = vec![phi.clone()];
    let mut out_v1 = vec![v1.clone()];
    let mut phi1_x = [vec![0.0], vec![0.0]];
    let mut v1_wall = [vec![0.0], vec![0.0]];
    // forcing f = phi1_x v0 at the current level
    let mut force = vec![0.0; n + 1];

    for step in 0..steps {
        let t_new = stepper.time(step + 1);
        let bdf = Bdf::new(step == 0, dt);
        let u0_old = &outer0.u_hist[step];
        let u0 = &outer0.u_hist[step + 1];
        let v0 = &outer0.v_hist[step + 1];
        let v0x = grid.derivative(v0);
        for i in 0..=n {
            v1_guess[i] = bdf.extrapolate(v1[i], v1_prev[i]);
        }
        for _ in 0..stepper.passes() {
            let v1x = grid.derivative(&v1_guess);
            for i in 1..n {
                let (l, c, r) = cw[i];
                let hm = grid.h(i - 1);
                let hp = grid.h(i);
                let a = w[i] * v0x[i];
                m.lower[i] = -1.0 / hm + a * l;
                m.diag[i] = bdf.alpha * w[i] + 1.0 / hm + 1.0 / hp + a * c;
                m.upper[i] = -1.0 / hp + a * r;
                phi_new[i] = w[i] * (bdf.history(phi[i], phi_prev[i]) - u0[i] * v1x[i]);
            }
            m.set_identity_row(0);
            m.set_identity_row(n);
            phi_new[0] = -traces.left[step + 1];
            phi_new[n] = -traces.right[step + 1];
            m.solve_in_place(&mut phi_new);

            let phix = grid.derivative(&phi_new);
            for i in 0..=n {
                let decay = (-0.5 * dt * (u0_old[i] + u0[i])).exp();
                let f_new = phix[i] * v0[i];
                v1_new[i] = v1[i] * decay - 0.5 * dt * (force[i] * decay + f_new);
            }
            v1_guess.copy_from_slice(&v1_new);
        }
        check_finite(STAGE, step + 1, t_new, &phi_new, "phi1")?;
        check_finite(STAGE, step + 1, t_new, &v1_new, "v1")?;
        let phix = grid.derivative(&phi_new);
        for i in 0..=n {
            force[i] = phix[i] * v0[i];
        }
        phi_prev.copy_from_slice(&phi);
        v1_prev.copy_from_slice(&v1);
        phi.copy_from_slice(&phi_new);
        v1.copy_from_slice(&v1_new);
        phi1_x[0].push(phix[0]);
        phi1_x[1].push(phix[n]);
        v1_wall[0].push(v1[0]);
        v1_wall[1].push(v1[n]);
        if (step + 1) % stepper.output_every == 0 {
            out_phi.push(phi.clone());
            out_v1.push(v1.clone());
        }
    }
    let [px0, px1] = phi1_x;
    let [v10, v11] = v1_wall;
    outer0.walls[0].phi1_x = px0;
    outer0.walls[1].phi1_x = px1;
    outer0.walls[0].v1 = v10;
    outer0.walls[1].v1 = v11;
    outer0.first_order = Some(FirstOrderOuter {
        phi1: out_phi,
        v1: out_v1,
    });
    Ok(())
}
