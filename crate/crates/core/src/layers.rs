//! Boundary-layer profiles on the truncated half-line.
//!
//! Both walls are handled by one solver written for the left wall in
//! `z = x / sqrt(eps)`. The right layer lives in `s = (1 - x) / sqrt(eps)`;
//! reflecting `x -> 1 - x` flips the sign of every first `x`-derivative, so
//! the right problem is the left one with the wall slopes `u_x` and `v_x`
//! negated. The reflected `phi` fields come out with the opposite sign:
//! `phi^{b,j}(s) = -[left-form field](s)`, while the `v` and `u` fields keep
//! theirs.
//!
//! Leading order (`w0 = v^{B,0}`, `a = u^{I,0}(0,t)`, `vI = v^{I,0}(0,t)`):
//!
//! ```text
//! w0_t = w0_zz - c(w0) w0,   c(w) = a (e^w + vI (e^w - 1) / w)
//! w0(0,t) = v_* - vI,        w0(z_max,t) = 0
//! phi^{B,1} = -a int_z^inf (e^{w0} - 1),   u^{B,0} = a (e^{w0} - 1)
//! ```
//!
//! Second order (`w1 = v^{B,1}`, `p = u^{B,0}`, `q = phi_z^{B,2}`), with the
//! wall data `b = u_x^{I,0}`, `c = phi_x^{I,1}`, `d = v_x^{I,0}`,
//! `vJ = v^{I,1}` at the wall:
//!
//! ```text
//! K(z) = int_z^inf [w0_y (b y + c) + d p] e^{-w0} dy
//! J(z) = int_z^inf w1 kappa,    kappa = d/dy[(a + p) e^{-w0}]
//! q    = (a + p) w1 + e^{w0} (J - K)
//! w1_t = w1_zz - (a + p)(1 + vI + w0) w1 + e^{w0}(vI + w0)(K - J)
//!        - p (d z + vJ) - (b z + c) w0
//! w1(0,t) = -vJ,   phi^{B,2} = -int_z^inf q
//! ```
//!
//! `kappa` vanishes for the exact `p`; it is still evaluated from the stored
//! fields, with `w1` lagged one step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::{HalfLineGrid, Orientation, QuadratureRule};
use crate::interval::{OuterProfiles, TimeStepper};
use crate::tridiag::Tridiagonal;

/// Slack allowed on the bracket `0 <= v^{B,0} <= v_*`.
pub const BRACKET_SLACK: f64 = 1e-10;

/// Wall data entering the left-form layer equations at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LayerCoefficients {
    /// `u^{I,0}` at the wall.
    pub a: f64,
    /// `phi_xx^{I,0}` at the wall, in the layer variable's orientation.
    pub b: f64,
    /// `phi_x^{I,1}` at the wall.
    pub c: f64,
    /// `v_x^{I,0}` at the wall, in the layer variable's orientation.
    pub d: f64,
    /// `v^{I,0}` at the wall.
    pub v_outer: f64,
    /// `v^{I,1}` at the wall.
    pub v1_outer: f64,
}

impl LayerCoefficients {
    pub fn at(outer: &OuterProfiles, side: Orientation, step: usize) -> Self {
        let (wall, sign) = match side {
            Orientation::Left => (&outer.walls[0], 1.0),
            Orientation::Right => (&outer.walls[1], -1.0),
        };
        Self {
            a: wall.u[step],
            b: sign * wall.u_x[step],
            c: wall.phi1_x.get(step).copied().unwrap_or(0.0),
            d: sign * wall.v_x[step],
            v_outer: wall.v[step],
            v1_outer: wall.v1.get(step).copied().unwrap_or(0.0),
        }
    }

    fn mid(&self, other: &Self) -> Self {
        Self {
            a: 0.5 * (self.a + other.a),
            b: 0.5 * (self.b + other.b),
            c: 0.5 * (self.c + other.c),
            d: 0.5 * (self.d + other.d),
            v_outer: 0.5 * (self.v_outer + other.v_outer),
            v1_outer: 0.5 * (self.v1_outer + other.v1_outer),
        }
    }
}

/// Reaction coefficient `c(w) = a (e^w + vI (e^w - 1)/w) >= 0`.
fn reaction(w: f64, a: f64, v_outer: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let em1 = w.exp_m1();
    let ratio = if w.abs() < 1e-8 { 1.0 + 0.5 * w } else { em1 / w };
    a * (1.0 + em1 + v_outer * ratio)
}

/// Time-indexed layer profiles at one wall.
///
/// Snapshots are stored at the output steps of the shared time mesh; wall
/// traces (`z = 0`) at every step.
#[derive(Debug, Clone)]
pub struct LayerProfiles {
    pub side: Orientation,
    pub grid: HalfLineGrid,
    pub stepper: TimeStepper,
    pub v_star: f64,
    pub rule: QuadratureRule,
    pub output_steps: Vec<usize>,
    pub v0: Vec<Vec<f64>>,
    pub phi1: Vec<Vec<f64>>,
    pub u0: Vec<Vec<f64>>,
    pub v1: Vec<Vec<f64>>,
    pub phi2: Vec<Vec<f64>>,
    pub trace_v0: Vec<f64>,
    pub trace_phi1: Vec<f64>,
    pub trace_v1: Vec<f64>,
    pub trace_phi2: Vec<f64>,
    pub v0_min: f64,
    pub v0_max: f64,
    /// `v^{B,0}` at every step; needed by the second-order solve.
    v0_history: Vec<Vec<f64>>,
}

impl LayerProfiles {
    pub fn has_order2(&self) -> bool {
        !self.v1.is_empty()
    }

    /// Drop the per-step history once the second-order solve is done.
    pub fn release_history(&mut self) {
        self.v0_history = Vec::new();
    }

    pub fn sign(&self) -> f64 {
        match self.side {
            Orientation::Left => 1.0,
            Orientation::Right => -1.0,
        }
    }

    /// Max `|field|` over the last third of the half-line, all snapshots and
    /// all computed fields.
    pub fn decay_residual(&self) -> f64 {
        let start = 2 * self.grid.m() / 3;
        [&self.v0, &self.phi1, &self.u0, &self.v1, &self.phi2]
            .iter()
            .flat_map(|fields| fields.iter())
            .flat_map(|f| f[start..].iter())
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    /// Max over snapshots of `|field(t = 0)|`.
    pub fn initial_residual(&self) -> f64 {
        [&self.v0, &self.phi1, &self.u0, &self.v1, &self.phi2]
            .iter()
            .filter_map(|f| f.first())
            .flat_map(|f| f.iter())
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        [&self.v0, &self.phi1, &self.u0, &self.v1, &self.phi2]
            .iter()
            .flat_map(|fields| fields.iter())
            .flat_map(|f| f.iter())
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }
}

/// `phi^{B,1}` (left) or `phi^{b,1}` (right) from a leading layer snapshot.
pub fn compute_phi1_layer(
    side: Orientation,
    v0_layer: &[f64],
    a: f64,
    grid: &HalfLineGrid,
    rule: QuadratureRule,
) -> Vec<f64> {
    let integrand: Vec<f64> = v0_layer.iter().map(|w| w.exp_m1()).collect();
    let sign = match side {
        Orientation::Left => -a,
        Orientation::Right => a,
    };
    rule.tail_integrals(grid, &integrand)
        .into_iter()
        .map(|t| sign * t)
        .collect()
}

/// `u^{B,0} = a (e^{v^{B,0}} - 1)`; same form on both sides.
pub fn compute_u_layer(v0_layer: &[f64], a: f64) -> Vec<f64> {
    v0_layer.iter().map(|w| a * w.exp_m1()).collect()
}

/// Implicitness keeping the explicit half of the step monotone.
fn theta_for(dt: f64, h: f64, c_max: f64) -> f64 {
    let stiff = dt * (2.0 / (h * h) + c_max.max(0.0));
    if stiff <= 2.0 {
        0.5
    } else {
        (1.0 - 1.0 / stiff).max(0.5)
    }
}

/// One theta step of `w_t = w_zz - c w + s` with Dirichlet data `g0` at
/// `z = 0` and zero at `z_max`.
#[allow(clippy::too_many_arguments)]
fn theta_step(
    h: f64,
    dt: f64,
    w_old: &[f64],
    c_old: &[f64],
    c_new: &[f64],
    s_old: &[f64],
    s_new: &[f64],
    g0: f64,
    mat: &mut Tridiagonal,
    out: &mut [f64],
) {
    let m = w_old.len() - 1;
    let c_max = c_old.iter().chain(c_new).copied().fold(0.0, f64::max);
    let theta = theta_for(dt, h, c_max);
    let lam = dt / (h * h);
    for i in 1..m {
        mat.lower[i] = -theta * lam;
        mat.upper[i] = -theta * lam;
        mat.diag[i] = 1.0 + theta * (2.0 * lam + dt * c_new[i]);
        let lap = (w_old[i - 1] - 2.0 * w_old[i] + w_old[i + 1]) * lam;
        out[i] = w_old[i]
            + (1.0 - theta) * (lap - dt * c_old[i] * w_old[i])
            + dt * (theta * s_new[i] + (1.0 - theta) * s_old[i]);
    }
    mat.set_identity_row(0);
    mat.set_identity_row(m);
    out[0] = g0;
    out[m] = 0.0;
    mat.solve_in_place(out);
}

/// Leading layer `v^{B,0}` / `v^{b,0}` on the outer solve's time mesh, with
/// `phi^{B,1}` and `u^{B,0}` at the output steps.
pub fn solve_layer_v0(
    side: Orientation,
    outer: &OuterProfiles,
    grid: &HalfLineGrid,
    rule: QuadratureRule,
) -> Result<LayerProfiles> {
    const STAGE: &str = "solve_layer_v0";
    let grid = grid.clone().with_orientation(side);
    let stepper = outer.stepper.clone();
    let v_star = outer.v_star;
    let m = grid.m();
    let h = grid.spacing();
    let dt = stepper.dt();
    let output_steps = stepper.output_steps();

    let mut w = vec![0.0; m + 1];
    let mut w_new = vec![0.0; m + 1];
    let mut c = vec![0.0; m + 1];
    let zeros = vec![0.0; m + 1];
    let mut out = vec![0.0; m + 1];
    let mut mat = Tridiagonal::zeros(m + 1);
    let mut history = Vec::with_capacity(stepper.steps + 1);
    history.push(w.clone());

    let mut trace_v0 = vec![0.0];
    let mut trace_phi1 = vec![0.0];
    let (mut vmin, mut vmax) = (0.0f64, 0.0f64);

    for step in 0..stepper.steps {
        let t_new = stepper.time(step + 1);
        let old = LayerCoefficients::at(outer, side, step);
        let new = LayerCoefficients::at(outer, side, step + 1);
        let mid = old.mid(&new);
        let g0 = v_star - new.v_outer;
        w_new.copy_from_slice(&w);
        for _ in 0..2 {
            for i in 0..=m {
                c[i] = reaction(0.5 * (w[i] + w_new[i]), mid.a, mid.v_outer);
            }
            theta_step(h, dt, &w, &c, &c, &zeros, &zeros, g0, &mut mat, &mut out);
            w_new.copy_from_slice(&out);
        }
        if let Some(i) = w_new.iter().position(|x| !x.is_finite()) {
            return Err(Error::numerical(STAGE, step + 1, t_new, format!("v0 layer not finite at node {i}")));
        }
        for &x in &w_new {
            vmin = vmin.min(x);
            vmax = vmax.max(x);
        }
        if vmin < -BRACKET_SLACK || vmax > v_star + BRACKET_SLACK {
            return Err(Error::numerical(
                STAGE,
                step + 1,
                t_new,
                format!("v0 layer left [0, v_*]: range [{vmin:e}, {vmax:e}]"),
            ));
        }
        w.copy_from_slice(&w_new);
        history.push(w.clone());
        trace_v0.push(w[0]);
        trace_phi1.push(compute_phi1_layer(side, &w, new.a, &grid, rule)[0]);
    }

    let mut v0 = Vec::new();
    let mut phi1 = Vec::new();
    let mut u0 = Vec::new();
    for &k in &output_steps {
        let a = LayerCoefficients::at(outer, side, k).a;
        let f = &history[k];
        phi1.push(compute_phi1_layer(side, f, a, &grid, rule));
        u0.push(compute_u_layer(f, a));
        v0.push(f.clone());
    }
    Ok(LayerProfiles {
        side,
        grid,
        stepper,
        v_star,
        rule,
        output_steps,
        v0,
        phi1,
        u0,
        v1: Vec::new(),
        phi2: Vec::new(),
        trace_v0,
        trace_phi1,
        trace_v1: Vec::new(),
        trace_phi2: Vec::new(),
        v0_min: vmin,
        v0_max: vmax,
        v0_history: history,
    })
}

/// Per-time quantities of the second-order problem that do not involve `w1`.
struct Order2Frame {
    coef: LayerCoefficients,
    w0: Vec<f64>,
    p: Vec<f64>,
    ew0: Vec<f64>,
    kernel: Vec<f64>,
    big_k: Vec<f64>,
    r: Vec<f64>,
    /// Source terms without the `J` contribution.
    base: Vec<f64>,
}

impl Order2Frame {
    fn new(layer: &LayerProfiles, w0: &[f64], coef: LayerCoefficients) -> Self {
        let grid = &layer.grid;
        let z = grid.nodes();
        let LayerCoefficients {
            a,
            b,
            c,
            d,
            v_outer,
            v1_outer,
        } = coef;
        let p = compute_u_layer(w0, a);
        let ew0: Vec<f64> = w0.iter().map(|w| w.exp()).collect();
        let w0z = grid.derivative(w0);
        let k_integrand: Vec<f64> = (0..w0.len())
            .map(|i| (w0z[i] * (b * z[i] + c) + d * p[i]) / ew0[i])
            .collect();
        let big_k = layer.rule.tail_integrals(grid, &k_integrand);
        let weight: Vec<f64> = (0..w0.len()).map(|i| (a + p[i]) / ew0[i]).collect();
        let kernel = grid.derivative(&weight);
        let r = (0..w0.len())
            .map(|i| (a + p[i]) * (1.0 + v_outer + w0[i]))
            .collect();
        let base = (0..w0.len())
            .map(|i| {
                ew0[i] * (v_outer + w0[i]) * big_k[i]
                    - p[i] * (d * z[i] + v1_outer)
                    - (b * z[i] + c) * w0[i]
            })
            .collect();
        Self {
            coef,
            w0: w0.to_vec(),
            p,
            ew0,
            kernel,
            big_k,
            r,
            base,
        }
    }

    fn j_integral(&self, layer: &LayerProfiles, w1: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = w1.iter().zip(&self.kernel).map(|(w, k)| w * k).collect();
        layer.rule.tail_integrals(&layer.grid, &f)
    }

    fn source(&self, j: &[f64]) -> Vec<f64> {
        (0..self.base.len())
            .map(|i| self.base[i] - self.ew0[i] * (self.coef.v_outer + self.w0[i]) * j[i])
            .collect()
    }

    /// `phi^{B,2}` in left form from the current `w1`.
    fn phi2(&self, layer: &LayerProfiles, w1: &[f64]) -> Vec<f64> {
        let j = self.j_integral(layer, w1);
        let q: Vec<f64> = (0..w1.len())
            .map(|i| (self.coef.a + self.p[i]) * w1[i] + self.ew0[i] * (j[i] - self.big_k[i]))
            .collect();
        layer
            .rule
            .tail_integrals(&layer.grid, &q)
            .into_iter()
            .map(|t| -t)
            .collect()
    }
}

fn interpolate_frame(layer: &LayerProfiles, a: &Order2Frame, b: &Order2Frame) -> Order2Frame {
    let w0: Vec<f64> = a.w0.iter().zip(&b.w0).map(|(x, y)| 0.5 * (x + y)).collect();
    Order2Frame::new(layer, &w0, a.coef.mid(&b.coef))
}

/// One step of the `w1` equation; `None` if the result is not finite.
fn order2_step(
    layer: &LayerProfiles,
    old: &Order2Frame,
    new: &Order2Frame,
    w1: &[f64],
    dt: f64,
    mat: &mut Tridiagonal,
) -> Option<Vec<f64>> {
    let m = layer.grid.m();
    // J at both levels from the lagged w1
    let j = old.j_integral(layer, w1);
    let s_old = old.source(&j);
    let s_new = new.source(&j);
    let mut out = vec![0.0; m + 1];
    theta_step(
        layer.grid.spacing(),
        dt,
        w1,
        &old.r,
        &new.r,
        &s_old,
        &s_new,
        -new.coef.v1_outer,
        mat,
        &mut out,
    );
    out.iter().all(|x| x.is_finite()).then_some(out)
}

/// Second-order pair `(v^{B,1}, phi^{B,2})` (or the right-wall pair) on the
/// shared time mesh. Needs the first-order outer traces.
pub fn solve_layer_order2(layer: &mut LayerProfiles, outer: &OuterProfiles) -> Result<()> {
    const STAGE: &str = "solve_layer_order2";
    let side = layer.side;
    let steps = layer.stepper.steps;
    if outer.first_order.is_none() || outer.walls[0].phi1_x.len() != steps + 1 {
        return Err(Error::Mismatch(
            "second-order layer needs the first-order outer traces on the same time mesh".into(),
        ));
    }
    if layer.v0_history.len() != steps + 1 {
        return Err(Error::Mismatch("leading layer history is missing".into()));
    }
    let m = layer.grid.m();
    let dt = layer.stepper.dt();
    let sign = layer.sign();
    let mut mat = Tridiagonal::zeros(m + 1);
    let mut w1 = vec![0.0; m + 1];
    let mut trace_v1 = vec![0.0];
    let mut trace_phi2 = vec![0.0];
    let mut v1_out = vec![w1.clone()];
    let mut phi2_out = vec![vec![0.0; m + 1]];

    let frame = |layer: &LayerProfiles, k: usize| {
        Order2Frame::new(layer, &layer.v0_history[k], LayerCoefficients::at(outer, side, k))
    };
    let mut old = frame(layer, 0);
    for step in 0..steps {
        let t_new = layer.stepper.time(step + 1);
        let new = frame(layer, step + 1);
        let next = match order2_step(layer, &old, &new, &w1, dt, &mut mat) {
            Some(x) => x,
            None => {
                // retry once with two half steps
                let half = interpolate_frame(layer, &old, &new);
                let first = order2_step(layer, &old, &half, &w1, 0.5 * dt, &mut mat);
                first
                    .and_then(|x| order2_step(layer, &half, &new, &x, 0.5 * dt, &mut mat))
                    .ok_or_else(|| {
                        Error::numerical(STAGE, step + 1, t_new, "v1 layer not finite after halving dt")
                    })?
            }
        };
        w1 = next;
        let phi2 = new.phi2(layer, &w1);
        trace_v1.push(w1[0]);
        trace_phi2.push(sign * phi2[0]);
        if (step + 1) % layer.stepper.output_every == 0 {
            v1_out.push(w1.clone());
            phi2_out.push(phi2.iter().map(|x| sign * x).collect());
        }
        old = new;
    }
    layer.v1 = v1_out;
    layer.phi2 = phi2_out;
    layer.trace_v1 = trace_v1;
    layer.trace_phi2 = trace_phi2;
    Ok(())
}

/// Largest mismatch between the two walls under `x -> 1 - x`. `v` and `u`
/// fields map to themselves, `phi` fields change sign. Zero (to rounding)
/// for symmetric data.
pub fn mirror_residual(left: &LayerProfiles, right: &LayerProfiles) -> f64 {
    let diff = |a: &[Vec<f64>], b: &[Vec<f64>], s: f64| {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - s * y).abs())
            .fold(0.0, f64::max)
    };
    diff(&left.v0, &right.v0, 1.0)
        .max(diff(&left.u0, &right.u0, 1.0))
        .max(diff(&left.v1, &right.v1, 1.0))
        .max(diff(&left.phi1, &right.phi1, -1.0))
        .max(diff(&left.phi2, &right.phi2, -1.0))
}

/// Both walls through the first-order outer solve and the second-order
/// layers: outer0 -> leading layers -> outer1 -> second-order layers.
pub fn solve_all_layers(
    outer: &mut OuterProfiles,
    grid: &HalfLineGrid,
    rule: QuadratureRule,
) -> Result<[LayerProfiles; 2]> {
    let (left, right) = rayon::join(
        || solve_layer_v0(Orientation::Left, outer, grid, rule),
        || solve_layer_v0(Orientation::Right, outer, grid, rule),
    );
    let (mut left, mut right) = (left?, right?);
    let traces = crate::interval::LayerPhiTraces {
        left: left.trace_phi1.clone(),
        right: right.trace_phi1.clone(),
    };
    crate::interval::solve_outer1(outer, &traces)?;
    let outer_ref: &OuterProfiles = outer;
    let (l, r) = rayon::join(
        || solve_layer_order2(&mut left, outer_ref),
        || solve_layer_order2(&mut right, outer_ref),
    );
    l?;
    r?;
    left.release_history();
    right.release_history();
    Ok([left, right])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_halfline_grid, make_interval_grid, Grading};
    use crate::interval::{solve_outer0, TimeStepper};
    use crate::model::{build_initial_data, InitialPreset, ModelParams};

    fn outer(v_star: f64, n: usize, steps: usize) -> OuterProfiles {
        let grid = make_interval_grid(n, Grading::Uniform).unwrap();
        let params = ModelParams::new(0.0, v_star, 0.25, InitialPreset::PaperPoly8).unwrap();
        let data = build_initial_data(&params.preset, &params, &grid).unwrap();
        let stepper = TimeStepper::new(0.25, steps, 4).unwrap();
        solve_outer0(&params, &data, &stepper).unwrap()
    }

    #[test]
    fn reaction_coefficient_is_nonnegative_and_smooth() {
        for &w in &[-0.5, -1e-9, 0.0, 1e-9, 0.3, 1.0] {
            assert!(reaction(w, 0.2, 0.7) > 0.0);
        }
        let near = reaction(1e-7, 1.0, 1.0);
        let at = reaction(0.0, 1.0, 1.0);
        assert!((near - at).abs() < 1e-6);
    }

    #[test]
    fn theta_stays_half_when_mild() {
        assert_eq!(theta_for(1e-4, 0.1, 1.0), 0.5);
        let t = theta_for(1.0, 0.01, 0.0);
        assert!(t > 0.99 && t < 1.0);
    }

    #[test]
    fn zero_v_star_gives_zero_layers() {
        let mut o = outer(0.0, 64, 200);
        let g = make_halfline_grid(32.0, 256).unwrap();
        let [l, r] = solve_all_layers(&mut o, &g, QuadratureRule::TRAPEZOID).unwrap();
        assert_eq!(l.max_abs(), 0.0);
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn dirichlet_data_and_bracket() {
        let o = outer(1.0, 64, 200);
        let g = make_halfline_grid(32.0, 512).unwrap();
        let l = solve_layer_v0(Orientation::Left, &o, &g, QuadratureRule::TRAPEZOID).unwrap();
        for k in 0..=200 {
            assert_eq!(l.trace_v0[k], 1.0 - o.walls[0].v[k]);
        }
        assert!(l.v0_min >= -BRACKET_SLACK);
        assert!(l.v0_max <= 1.0 + BRACKET_SLACK);
        assert_eq!(l.initial_residual(), 0.0);
        // v0 layer is monotone decreasing in z at the final time
        let last = l.v0.last().unwrap();
        assert!(last[0] > 0.0);
        assert!(last.windows(2).all(|w| w[1] <= w[0]));
        assert!(l.decay_residual() <= 1e-8);
    }

    #[test]
    fn phi1_is_consistent_with_u_layer() {
        // synthetic layer w = 0.3 exp(-z): d/dz phi^{B,1} = a (e^w - 1)
        let g = make_halfline_grid(32.0, 4096).unwrap();
        let w: Vec<f64> = g.nodes().iter().map(|z| 0.3 * (-z).exp()).collect();
        let a = 0.7;
        let phi = compute_phi1_layer(Orientation::Left, &w, a, &g, QuadratureRule::SIMPSON);
        let u = compute_u_layer(&w, a);
        let dphi = g.derivative(&phi);
        for i in 1..g.m() {
            assert!((dphi[i] - u[i]).abs() < 1e-5, "i={i}");
        }
        assert_eq!(phi[g.m()], 0.0);
        let right = compute_phi1_layer(Orientation::Right, &w, a, &g, QuadratureRule::SIMPSON);
        assert!(phi.iter().zip(&right).all(|(l, r)| *l == -r));
    }

    #[test]
    fn u_layer_wall_value_matches_boundary_formula() {
        let o = outer(1.0, 64, 200);
        let g = make_halfline_grid(32.0, 256).unwrap();
        let l = solve_layer_v0(Orientation::Left, &o, &g, QuadratureRule::TRAPEZOID).unwrap();
        for (k, &step) in l.output_steps.iter().enumerate() {
            let a = o.walls[0].u[step];
            let expected = a * ((1.0 - o.walls[0].v[step]).exp() - 1.0);
            assert!((l.u0[k][0] - expected).abs() <= 1e-15 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn order2_imposes_wall_data() {
        let mut o = outer(1.0, 64, 200);
        let g = make_halfline_grid(32.0, 256).unwrap();
        let [l, r] = solve_all_layers(&mut o, &g, QuadratureRule::TRAPEZOID).unwrap();
        for k in 0..=200 {
            assert_eq!(l.trace_v1[k], -o.walls[0].v1[k]);
            assert_eq!(r.trace_v1[k], -o.walls[1].v1[k]);
        }
        assert!(l.has_order2());
        assert_eq!(l.phi2.len(), l.output_steps.len());
    }

    #[test]
    fn symmetric_data_give_mirrored_layers() {
        let mut o = outer(1.0, 128, 200);
        let g = make_halfline_grid(32.0, 256).unwrap();
        let [l, r] = solve_all_layers(&mut o, &g, QuadratureRule::TRAPEZOID).unwrap();
        assert!(mirror_residual(&l, &r) <= 1e-12);
        assert!(l.max_abs() > 1e-9);
    }

    #[test]
    fn order2_needs_first_order_outer() {
        let o = outer(1.0, 64, 200);
        let g = make_halfline_grid(32.0, 256).unwrap();
        let mut l = solve_layer_v0(Orientation::Left, &o, &g, QuadratureRule::TRAPEZOID).unwrap();
        assert!(matches!(solve_layer_order2(&mut l, &o), Err(Error::Mismatch(_))));
    }
}
