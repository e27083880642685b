//! Composite approximations built from the outer and layer profiles, the
//! affine correctors that restore the wall values, and remainders against
//! the full solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::IntervalGrid;
use crate::interval::{OuterProfiles, Trajectory};
use crate::layers::LayerProfiles;

/// Affine correctors `b(x) = b(0) (1 - x) + b(1) x` at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CorrectorPair {
    pub phi_at_0: f64,
    pub phi_at_1: f64,
    pub v_at_0: f64,
    pub v_at_1: f64,
}

impl CorrectorPair {
    pub fn phi(&self, x: f64) -> f64 {
        self.phi_at_0 * (1.0 - x) + self.phi_at_1 * x
    }

    pub fn v(&self, x: f64) -> f64 {
        self.v_at_0 * (1.0 - x) + self.v_at_1 * x
    }
}

fn sample_or_zero(layer: &LayerProfiles, fields: &[Vec<f64>], k: usize, z: f64) -> f64 {
    fields.get(k).map_or(0.0, |f| layer.grid.sample(f, z))
}

/// Correctors at output index `k`.
///
/// At `x = 0` they cancel the right-layer tails evaluated at `s = 1/sqrt(eps)`
/// and `eps phi^{B,2}(0,t)`; at `x = 1` the left-layer tails and
/// `eps phi^{b,2}` at the right wall itself. Tails beyond `z_max` are zero.
pub fn build_correctors(left: &LayerProfiles, right: &LayerProfiles, k: usize, epsilon: f64) -> CorrectorPair {
    let se = epsilon.sqrt();
    let far = 1.0 / se;
    let phi_far = |l: &LayerProfiles| {
        se * sample_or_zero(l, &l.phi1, k, far) + epsilon * sample_or_zero(l, &l.phi2, k, far)
    };
    let v_far = |l: &LayerProfiles| sample_or_zero(l, &l.v0, k, far) + se * sample_or_zero(l, &l.v1, k, far);
    let wall_phi2 = |l: &LayerProfiles| l.phi2.get(k).map_or(0.0, |f| f[0]);
    CorrectorPair {
        phi_at_0: -(phi_far(right) + epsilon * wall_phi2(left)),
        phi_at_1: -(phi_far(left) + epsilon * wall_phi2(right)),
        v_at_0: -v_far(right),
        v_at_1: -v_far(left),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    /// `phi^{I,0}`; `v^{I,0} + v^{B,0} + v^{b,0}`.
    Zero,
    /// Adds `sqrt(eps)(phi^{I,1} + phi^{B,1} + phi^{b,1})` to `phi`.
    One,
    /// Every term of the composite approximation, correctors included.
    Full,
}

impl Order {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "0" => Some(Order::Zero),
            "1" => Some(Order::One),
            "2" | "full" => Some(Order::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssemblyFrame {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub phi: Vec<f64>,
    pub correctors: CorrectorPair,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub order: Order,
    pub epsilon: f64,
    pub grid: IntervalGrid,
    pub frames: Vec<AssemblyFrame>,
    /// Names of the profiles that entered.
    pub components: Vec<&'static str>,
}

/// Sample outer and layer profiles at `z = x/sqrt(eps)`, `s = (1-x)/sqrt(eps)`
/// on `grid` (nested in the outer grid) and sum them at every output time.
///
/// `u` is always `u^{I,0} + u^{B,0} + u^{b,0}`.
pub fn assemble(
    order: Order,
    outer: &OuterProfiles,
    layers: &[LayerProfiles; 2],
    epsilon: f64,
    grid: &IntervalGrid,
) -> Result<Assembly> {
    if !(epsilon > 0.0) {
        return Err(Error::Input("assembly needs epsilon > 0".into()));
    }
    let [left, right] = layers;
    let steps = outer.output_steps();
    for l in layers {
        if !l.stepper.same_mesh(&outer.stepper) || l.output_steps != steps {
            return Err(Error::Mismatch("layer and outer time meshes differ".into()));
        }
    }
    let first = outer.first_order.as_ref();
    if order != Order::Zero && first.is_none() {
        return Err(Error::Input(format!("order {order:?} needs the first-order outer profiles")));
    }
    if order == Order::Full && !(left.has_order2() && right.has_order2()) {
        return Err(Error::Input("full assembly needs the second-order layer profiles".into()));
    }
    let mut components = vec!["u^{I,0}", "v^{I,0}", "phi^{I,0}", "u^{B,0}", "u^{b,0}", "v^{B,0}", "v^{b,0}"];
    match order {
        Order::Zero => {}
        Order::One => components.extend(["phi^{I,1}", "phi^{B,1}", "phi^{b,1}"]),
        Order::Full => components.extend([
            "phi^{I,1}", "phi^{B,1}", "phi^{b,1}", "phi^{B,2}", "phi^{b,2}", "v^{I,1}", "v^{B,1}", "v^{b,1}", "b_phi",
            "b_v",
        ]),
    }

    let se = epsilon.sqrt();
    let x = grid.nodes();
    let mut frames = Vec::with_capacity(steps.len());
    for (k, &step) in steps.iter().enumerate() {
        let restrict = |f: &[f64]| grid.restrict(&outer.grid, f);
        let u_out = restrict(&outer.u_hist[step])?;
        let v_out = restrict(&outer.v_hist[step])?;
        let phi_out = restrict(&outer.phi0(step))?;
        let (phi1, v1) = match first {
            Some(fo) => (restrict(&fo.phi1[k])?, restrict(&fo.v1[k])?),
            None => (vec![0.0; grid.len()], vec![0.0; grid.len()]),
        };
        let corr = if order == Order::Full {
            build_correctors(left, right, k, epsilon)
        } else {
            CorrectorPair::default()
        };
        let mut u = Vec::with_capacity(grid.len());
        let mut v = Vec::with_capacity(grid.len());
        let mut phi = Vec::with_capacity(grid.len());
        for (i, &xi) in x.iter().enumerate() {
            let z = xi / se;
            let s = (1.0 - xi) / se;
            let l = |f: &[Vec<f64>]| left.grid.sample(&f[k], z);
            let r = |f: &[Vec<f64>]| right.grid.sample(&f[k], s);
            u.push(u_out[i] + l(&left.u0) + r(&right.u0));
            let v_lead = v_out[i] + l(&left.v0) + r(&right.v0);
            let phi_one = phi_out[i] + se * (phi1[i] + l(&left.phi1) + r(&right.phi1));
            match order {
                Order::Zero => {
                    v.push(v_lead);
                    phi.push(phi_out[i]);
                }
                Order::One => {
                    v.push(v_lead);
                    phi.push(phi_one);
                }
                Order::Full => {
                    v.push(v_lead + se * (v1[i] + l(&left.v1) + r(&right.v1)) + corr.v(xi));
                    phi.push(phi_one + epsilon * (l(&left.phi2) + r(&right.phi2)) + corr.phi(xi));
                }
            }
        }
        frames.push(AssemblyFrame {
            t: outer.stepper.time(step),
            u,
            v,
            phi,
            correctors: corr,
        });
    }
    Ok(Assembly {
        order,
        epsilon,
        grid: grid.clone(),
        frames,
        components,
    })
}

impl Assembly {
    /// Max over output times of `|V^A - v_*|` and `|Phi^A|` at both walls.
    pub fn boundary_residual(&self, v_star: f64) -> (f64, f64) {
        let n = self.grid.n();
        let mut ev = 0.0f64;
        let mut ephi = 0.0f64;
        for f in &self.frames {
            ev = ev.max((f.v[0] - v_star).abs()).max((f.v[n] - v_star).abs());
            ephi = ephi.max(f.phi[0].abs()).max(f.phi[n].abs());
        }
        (ev, ephi)
    }
}

/// Sup-norm remainders at one output time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RemainderSample {
    pub t: f64,
    pub eu: f64,
    pub ev: f64,
    pub ephi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Remainders {
    /// `max |u^eps - u_app|` over nodes and output times.
    pub eu: f64,
    pub ev: f64,
    pub ephi: f64,
    /// `max |phi_x^eps - (phi_x^{I,0} + u^{B,0} + u^{b,0})|`; by `u = phi_x + M`
    /// this is the same number as `eu`.
    pub ephi_x: f64,
    pub per_time: Vec<RemainderSample>,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn compute_remainders(full: &Trajectory, assembly: &Assembly) -> Result<Remainders> {
    if full.grid != assembly.grid {
        return Err(Error::Mismatch("full solution and assembly live on different grids".into()));
    }
    if full.states.len() != assembly.frames.len() {
        return Err(Error::Mismatch(format!(
            "{} full snapshots vs {} assembly frames",
            full.states.len(),
            assembly.frames.len()
        )));
    }
    let mut per_time = Vec::with_capacity(full.states.len());
    for (k, (s, f)) in full.states.iter().zip(&assembly.frames).enumerate() {
        if (s.t - f.t).abs() > 1e-12 * (1.0 + f.t.abs()) {
            return Err(Error::Mismatch(format!("output {k}: t = {} vs {}", s.t, f.t)));
        }
        let phi = full.phi(k);
        per_time.push(RemainderSample {
            t: s.t,
            eu: sup_diff(&s.u, &f.u),
            ev: sup_diff(&s.v, &f.v),
            ephi: sup_diff(&phi, &f.phi),
        });
    }
    let max = |g: fn(&RemainderSample) -> f64| per_time.iter().map(g).fold(0.0, f64::max);
    let eu = max(|r| r.eu);
    Ok(Remainders {
        eu,
        ev: max(|r| r.ev),
        ephi: max(|r| r.ephi),
        ephi_x: eu,
        per_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_halfline_grid, make_interval_grid, Grading, Orientation, QuadratureRule};
    use crate::interval::{solve_outer0, StateUV, TimeStepper};
    use crate::layers::solve_all_layers;
    use crate::model::{build_initial_data, InitialPreset, ModelParams};

    fn pipeline(v_star: f64) -> (OuterProfiles, [LayerProfiles; 2]) {
        let grid = make_interval_grid(256, Grading::Uniform).unwrap();
        let params = ModelParams::new(0.0, v_star, 0.25, InitialPreset::PaperPoly8).unwrap();
        let data = build_initial_data(&params.preset, &params, &grid).unwrap();
        let stepper = TimeStepper::new(0.25, 200, 4).unwrap();
        let mut outer = solve_outer0(&params, &data, &stepper).unwrap();
        let hl = make_halfline_grid(32.0, 512).unwrap();
        let layers = solve_all_layers(&mut outer, &hl, QuadratureRule::TRAPEZOID).unwrap();
        (outer, layers)
    }

    #[test]
    fn affine_evaluation() {
        let c = CorrectorPair {
            phi_at_0: 1.0,
            phi_at_1: 3.0,
            v_at_0: -2.0,
            v_at_1: 0.0,
        };
        assert_eq!(c.phi(0.5), 2.0);
        assert_eq!(c.v(0.25), -1.5);
    }

    #[test]
    fn full_assembly_is_exact_on_the_walls() {
        let (outer, layers) = pipeline(1.0);
        for eps in [1e-2, 1e-3, 2f64.powi(-14)] {
            let grid = make_interval_grid(128, Grading::Uniform).unwrap();
            let a = assemble(Order::Full, &outer, &layers, eps, &grid).unwrap();
            let (ev, ephi) = a.boundary_residual(1.0);
            assert!(ev <= 1e-12 && ephi <= 1e-12, "eps={eps}: {ev:e} {ephi:e}");
        }
    }

    #[test]
    fn correctors_vanish_beyond_truncation() {
        let (_, layers) = pipeline(1.0);
        // 1/sqrt(eps) = 40 > z_max = 32: only the phi^{B,2}/phi^{b,2} wall terms survive
        let eps = 1.0 / 1600.0;
        let c = build_correctors(&layers[0], &layers[1], 4, eps);
        assert_eq!(c.v_at_0, 0.0);
        assert_eq!(c.v_at_1, 0.0);
        assert_eq!(c.phi_at_0, -eps * layers[0].phi2[4][0]);
        assert_eq!(c.phi_at_1, -eps * layers[1].phi2[4][0]);
    }

    #[test]
    fn correctors_re_evaluated_from_traces() {
        let (_, layers) = pipeline(1.0);
        let eps = 1e-2;
        let [l, r] = &layers;
        let k = 4;
        let c = build_correctors(l, r, k, eps);
        // independent evaluation: far argument z = 10 sits on a node of the
        // 32/512 grid (spacing 1/16), so no interpolation is involved
        let node = 160;
        assert_eq!(l.grid.nodes()[node], 10.0);
        let se = 0.1;
        let phi0 = -(se * r.phi1[k][node] + eps * r.phi2[k][node] + eps * l.phi2[k][0]);
        let phi1 = -(se * l.phi1[k][node] + eps * l.phi2[k][node] + eps * r.phi2[k][0]);
        let v0 = -(r.v0[k][node] + se * r.v1[k][node]);
        let v1 = -(l.v0[k][node] + se * l.v1[k][node]);
        assert!((c.phi_at_0 - phi0).abs() <= 1e-15 * phi0.abs().max(1e-300));
        assert!((c.phi_at_1 - phi1).abs() <= 1e-15 * phi1.abs().max(1e-300));
        assert!((c.v_at_0 - v0).abs() <= 1e-15 * v0.abs().max(1e-300));
        assert!((c.v_at_1 - v1).abs() <= 1e-15 * v1.abs().max(1e-300));
    }

    #[test]
    fn zero_v_star_collapses_to_outer() {
        let (outer, layers) = pipeline(0.0);
        let grid = make_interval_grid(64, Grading::Uniform).unwrap();
        let a = assemble(Order::Full, &outer, &layers, 1e-3, &grid).unwrap();
        for (k, &step) in outer.output_steps().iter().enumerate() {
            let u = grid.restrict(&outer.grid, &outer.u_hist[step]).unwrap();
            let v = grid.restrict(&outer.grid, &outer.v_hist[step]).unwrap();
            assert_eq!(a.frames[k].u, u);
            assert_eq!(a.frames[k].v, v);
        }
    }

    #[test]
    fn probe_point_matches_direct_summation() {
        let (outer, layers) = pipeline(1.0);
        let grid = make_interval_grid(256, Grading::Uniform).unwrap();
        let eps = 1e-3;
        let a = assemble(Order::Zero, &outer, &layers, eps, &grid).unwrap();
        // x = 0.0234375 is node 6 of the 256-cell grid
        let (i, x) = (6, 6.0 / 256.0);
        let k = 4;
        let z = x / eps.sqrt();
        let s = (1.0 - x) / eps.sqrt();
        let [l, r] = &layers;
        let lerp = |f: &[f64], z: f64| {
            let h = l.grid.spacing();
            if z >= l.grid.z_max() {
                return 0.0;
            }
            let j = (z / h).floor() as usize;
            let frac = z / h - j as f64;
            f[j] * (1.0 - frac) + f[j + 1] * frac
        };
        let vb = lerp(&l.v0[k], z);
        let vr = lerp(&r.v0[k], s);
        let expected = outer.v_hist[outer.stepper.steps][i] + vb + vr;
        assert!((a.frames[k].v[i] - expected).abs() <= 1e-15);
        assert_eq!(l.side, Orientation::Left);
    }

    #[test]
    fn remainders_of_assembly_against_itself_are_zero() {
        let (outer, layers) = pipeline(1.0);
        let grid = make_interval_grid(64, Grading::Uniform).unwrap();
        let a = assemble(Order::Zero, &outer, &layers, 1e-3, &grid).unwrap();
        let states = a
            .frames
            .iter()
            .map(|f| StateUV {
                t: f.t,
                u: f.u.clone(),
                v: f.v.clone(),
            })
            .collect();
        let traj = Trajectory {
            grid: grid.clone(),
            epsilon: 1e-3,
            mass: outer.mass,
            stepper: outer.stepper.clone(),
            states,
            wall_u: [vec![], vec![]],
            max_mass_drift: 0.0,
            u_min: 0.0,
            v_min: 0.0,
            v_max: 0.0,
        };
        let rem = compute_remainders(&traj, &a).unwrap();
        assert_eq!(rem.eu, 0.0);
        assert_eq!(rem.ev, 0.0);
        // phi^{I,0} restricted vs phi recomputed on the coarse grid differ by quadrature only
        assert!(rem.ephi < 1e-8);
    }

    #[test]
    fn assembly_rejects_missing_orders() {
        let grid = make_interval_grid(64, Grading::Uniform).unwrap();
        let params = ModelParams::new(0.0, 1.0, 0.25, InitialPreset::PaperPoly8).unwrap();
        let data = build_initial_data(&params.preset, &params, &grid).unwrap();
        let stepper = TimeStepper::new(0.25, 100, 4).unwrap();
        let outer = solve_outer0(&params, &data, &stepper).unwrap();
        let hl = make_halfline_grid(32.0, 256).unwrap();
        let l = crate::layers::solve_layer_v0(Orientation::Left, &outer, &hl, QuadratureRule::TRAPEZOID).unwrap();
        let r = crate::layers::solve_layer_v0(Orientation::Right, &outer, &hl, QuadratureRule::TRAPEZOID).unwrap();
        let layers = [l, r];
        assert!(assemble(Order::Zero, &outer, &layers, 1e-3, &grid).is_ok());
        assert!(assemble(Order::One, &outer, &layers, 1e-3, &grid).is_err());
        assert!(assemble(Order::Zero, &outer, &layers, 0.0, &grid).is_err());
    }
}
