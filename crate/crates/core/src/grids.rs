//! Grids on the unit interval and on the truncated half-line, plus the
//! quadratures used on both.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible interval cell count.
pub const MIN_INTERVAL_CELLS: usize = 16;
/// Smallest admissible half-line cell count.
pub const MIN_HALFLINE_CELLS: usize = 64;
/// Neglected exponential tail must stay below this.
pub const DECAY_BUDGET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    Uniform,
    /// Symmetric tanh map clustering nodes at both endpoints. `stretch = 1`
    /// is the identity map.
    Tanh { stretch: f64 },
    /// Arbitrary nodes supplied by the caller.
    Explicit,
}

/// Nodes `0 = x_0 < x_1 < ... < x_n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    nodes: Vec<f64>,
    grading: Grading,
    min_spacing: f64,
    max_spacing: f64,
}

pub fn make_interval_grid(n: usize, grading: Grading) -> Result<IntervalGrid> {
    if n < MIN_INTERVAL_CELLS {
        return Err(Error::Grid(format!(
            "interval grid needs at least {MIN_INTERVAL_CELLS} cells, got {n}"
        )));
    }
    let nodes = match grading {
        Grading::Uniform => uniform_nodes(n),
        Grading::Tanh { stretch } => {
            if !stretch.is_finite() || stretch < 1.0 {
                return Err(Error::Grid(format!(
                    "grading stretch must be finite and >= 1, got {stretch}"
                )));
            }
            let beta = stretch - 1.0;
            if beta == 0.0 {
                uniform_nodes(n)
            } else {
                (0..=n).map(|i| tanh_map(i as f64 / n as f64, beta)).collect()
            }
        }
        Grading::Explicit => {
            return Err(Error::Grid(
                "explicit grading needs nodes; use IntervalGrid::from_nodes".into(),
            ))
        }
    };
    let mut grid = IntervalGrid::from_nodes(nodes)?;
    grid.grading = grading;
    Ok(grid)
}

fn uniform_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Symmetric tanh grading map on `[0,1]` with clustering strength `beta > 0`.
pub fn tanh_map(s: f64, beta: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    0.5 * (1.0 + (beta * (2.0 * s - 1.0)).tanh() / beta.tanh())
}

impl IntervalGrid {
    /// Grid from explicit nodes; no minimum cell count is enforced here.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Grid("need at least two cells".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::Grid("interval nodes must start at 0 and end at 1".into()));
        }
        let mut min_spacing = f64::INFINITY;
        let mut max_spacing = 0.0_f64;
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            if !(h > 0.0) {
                return Err(Error::Grid("interval nodes must be strictly increasing".into()));
            }
            min_spacing = min_spacing.min(h);
            max_spacing = max_spacing.max(h);
        }
        let uniform = (max_spacing - min_spacing) <= 1e-14 * max_spacing;
        Ok(Self {
            nodes,
            grading: if uniform {
                Grading::Uniform
            } else {
                Grading::Explicit
            },
            min_spacing,
            max_spacing,
        })
    }

    /// Cell count.
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.grading, Grading::Uniform)
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.max_spacing
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.max_spacing / self.min_spacing
    }

    /// Width of cell `i` (between nodes `i` and `i+1`).
    pub fn h(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Trapezoid (control-volume) weights; they sum to 1.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n();
        let mut w = vec![0.0; n + 1];
        for i in 0..n {
            let h = self.h(i);
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len());
        let mut acc = 0.0;
        for i in 0..self.n() {
            acc += 0.5 * self.h(i) * (f[i] + f[i + 1]);
        }
        acc
    }

    /// `F(x_i) = int_0^{x_i} f` by the trapezoid rule, `F(0) = 0` exactly.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.len());
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n() {
            out[i + 1] = out[i] + 0.5 * self.h(i) * (f[i] + f[i + 1]);
        }
        out
    }

    /// First derivative: three-point centred in the interior, three-point
    /// one-sided at the ends; second order on any smooth mesh.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(f.len(), n + 1);
        let x = &self.nodes;
        let mut d = vec![0.0; n + 1];
        for i in 1..n {
            let hm = x[i] - x[i - 1];
            let hp = x[i + 1] - x[i];
            d[i] = (hm * hm * f[i + 1] - hp * hp * f[i - 1] + (hp * hp - hm * hm) * f[i])
                / (hm * hp * (hm + hp));
        }
        d[0] = one_sided(f[0], f[1], f[2], x[1] - x[0], x[2] - x[1]);
        d[n] = -one_sided(f[n], f[n - 1], f[n - 2], x[n] - x[n - 1], x[n - 1] - x[n - 2]);
        d
    }

    /// First derivative at the left (`left = true`) or right endpoint.
    pub fn endpoint_derivative(&self, f: &[f64], left: bool) -> f64 {
        let n = self.n();
        let x = &self.nodes;
        if left {
            one_sided(f[0], f[1], f[2], x[1] - x[0], x[2] - x[1])
        } else {
            -one_sided(f[n], f[n - 1], f[n - 2], x[n] - x[n - 1], x[n - 1] - x[n - 2])
        }
    }

    /// Index `i` with `x_i <= x <= x_{i+1}` and the local fraction.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.n();
        let x = x.clamp(0.0, 1.0);
        let i = match self.nodes.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => (i - 1).min(n - 1),
        };
        (i, (x - self.nodes[i]) / self.h(i))
    }

    /// Linear interpolation of a nodal field.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let (i, s) = self.locate(x);
        f[i] + s * (f[i + 1] - f[i])
    }

    /// Stride such that `fine.nodes()[k * stride] == self.nodes()[k]`, when the
    /// fine grid nests this one.
    pub fn nesting_stride(&self, fine: &IntervalGrid) -> Option<usize> {
        if !fine.n().is_multiple_of(self.n()) {
            return None;
        }
        let stride = fine.n() / self.n();
        let nested = self
            .nodes
            .iter()
            .enumerate()
            .all(|(k, &x)| (fine.nodes[k * stride] - x).abs() <= 1e-14);
        nested.then_some(stride)
    }

    /// Inject a field given on a nested finer grid onto this grid.
    pub fn restrict(&self, fine: &IntervalGrid, f: &[f64]) -> Result<Vec<f64>> {
        let stride = self.nesting_stride(fine).ok_or_else(|| {
            Error::Mismatch(format!(
                "grid with {} cells is not nested in grid with {} cells",
                self.n(),
                fine.n()
            ))
        })?;
        Ok((0..=self.n()).map(|k| f[k * stride]).collect())
    }
}

/// Derivative at node 0 from values at distances 0, h1, h1+h2.
fn one_sided(f0: f64, f1: f64, f2: f64, h1: f64, h2: f64) -> f64 {
    let s = h1 + h2;
    (-(h1 + s) / (h1 * s)) * f0 + (s / (h1 * h2)) * f1 - (h1 / (h2 * s)) * f2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `z = x / sqrt(eps)`.
    Left,
    /// `s = (1 - x) / sqrt(eps) = -xi`, the reflected right-layer variable.
    Right,
}

impl Orientation {
    pub fn name(&self) -> &'static str {
        match self {
            Orientation::Left => "left",
            Orientation::Right => "right",
        }
    }
}

/// Uniform grid on `[0, z_max]` for a boundary-layer variable.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineGrid {
    z_max: f64,
    nodes: Vec<f64>,
    orientation: Orientation,
}

pub fn make_halfline_grid(z_max: f64, m: usize) -> Result<HalfLineGrid> {
    if !z_max.is_finite() || !((-z_max).exp() < DECAY_BUDGET) {
        return Err(Error::Grid(format!(
            "decay budget violated: exp(-{z_max}) is not below {DECAY_BUDGET:e}"
        )));
    }
    if m < MIN_HALFLINE_CELLS {
        return Err(Error::Grid(format!(
            "half-line grid needs at least {MIN_HALFLINE_CELLS} cells, got {m}"
        )));
    }
    let h = z_max / m as f64;
    let mut nodes: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    nodes[m] = z_max;
    Ok(HalfLineGrid {
        z_max,
        nodes,
        orientation: Orientation::Left,
    })
}

impl HalfLineGrid {
    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    /// Cell count.
    pub fn m(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.z_max / self.m() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Linear interpolation; zero beyond the truncation radius.
    pub fn sample(&self, f: &[f64], z: f64) -> f64 {
        if z >= self.z_max {
            return 0.0;
        }
        let z = z.max(0.0);
        let h = self.spacing();
        let i = ((z / h) as usize).min(self.m() - 1);
        let s = (z - self.nodes[i]) / h;
        f[i] + s * (f[i + 1] - f[i])
    }

    /// Centred first derivative, second-order one-sided at both ends.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m();
        let h = self.spacing();
        let mut d = vec![0.0; m + 1];
        for i in 1..m {
            d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        }
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[m] = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
        d
    }

    /// `T(z_i) = int_{z_i}^{z_max} f` by the trapezoid rule.
    pub fn tail_integrals(&self, f: &[f64]) -> Vec<f64> {
        let m = self.m();
        assert_eq!(f.len(), m + 1);
        let h = self.spacing();
        let mut out = vec![0.0; m + 1];
        for i in (0..m).rev() {
            out[i] = out[i + 1] + 0.5 * h * (f[i] + f[i + 1]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureKind {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    pub const TRAPEZOID: Self = Self {
        kind: QuadratureKind::Trapezoid,
    };
    pub const SIMPSON: Self = Self {
        kind: QuadratureKind::Simpson,
    };

    /// Weights for `count` uniformly spaced intervals of width `h`.
    ///
    /// Simpson with an odd interval count closes with a 3/8 panel on the
    /// first three intervals.
    pub fn weights(&self, count: usize, h: f64) -> Vec<f64> {
        let mut w = vec![0.0; count + 1];
        if count == 0 {
            return w;
        }
        match self.kind {
            QuadratureKind::Trapezoid => trapezoid_panels(&mut w, 0, count, h),
            QuadratureKind::Simpson => {
                if count == 1 {
                    trapezoid_panels(&mut w, 0, 1, h);
                } else if count.is_multiple_of(2) {
                    simpson_panels(&mut w, 0, count, h);
                } else {
                    let c = 3.0 * h / 8.0;
                    w[0] += c;
                    w[1] += 3.0 * c;
                    w[2] += 3.0 * c;
                    w[3] += c;
                    simpson_panels(&mut w, 3, count, h);
                }
            }
        }
        w
    }

    /// `T_i = int_{z_i}^{z_max} f` at every node of a half-line grid,
    /// accumulated from the far end.
    ///
    /// The Simpson variant integrates each cell against the quadratic through
    /// it and its outer neighbour (the inner one for the last cell), which
    /// keeps the cumulative sum third order per cell.
    pub fn tail_integrals(&self, grid: &HalfLineGrid, f: &[f64]) -> Vec<f64> {
        match self.kind {
            QuadratureKind::Trapezoid => grid.tail_integrals(f),
            QuadratureKind::Simpson => {
                let m = grid.m();
                assert_eq!(f.len(), m + 1);
                let h = grid.spacing();
                let mut out = vec![0.0; m + 1];
                out[m - 1] = h * (-f[m - 2] + 8.0 * f[m - 1] + 5.0 * f[m]) / 12.0;
                for i in (0..m - 1).rev() {
                    out[i] = out[i + 1] + h * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]) / 12.0;
                }
                out
            }
        }
    }
}

fn trapezoid_panels(w: &mut [f64], from: usize, to: usize, h: f64) {
    for i in from..to {
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
}

fn simpson_panels(w: &mut [f64], from: usize, to: usize, h: f64) {
    let mut i = from;
    while i + 2 <= to {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
}

/// `int_{z0}^{z_max} f dz`; the tail beyond `z_max` is neglected.
///
/// A `z0` between nodes is handled with a linear partial cell followed by
/// the rule on the remaining whole cells.
pub fn integrate_tail(
    f: &[f64],
    grid: &HalfLineGrid,
    z0: f64,
    rule: QuadratureRule,
) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::Mismatch(format!(
            "field has {} values, grid has {} nodes",
            f.len(),
            grid.len()
        )));
    }
    if !(0.0..=grid.z_max()).contains(&z0) {
        return Err(Error::Input(format!(
            "tail start {z0} outside [0, {}]",
            grid.z_max()
        )));
    }
    let h = grid.spacing();
    let m = grid.m();
    let pos = z0 / h;
    let mut k = pos.floor() as usize;
    let mut acc = 0.0;
    if k < m && pos - k as f64 > 1e-12 {
        let f0 = grid.sample(f, z0);
        let dz = grid.nodes()[k + 1] - z0;
        acc += 0.5 * dz * (f0 + f[k + 1]);
        k += 1;
    }
    if k >= m {
        return Ok(acc);
    }
    let w = rule.weights(m - k, h);
    acc += w.iter().zip(&f[k..]).map(|(w, f)| w * f).sum::<f64>();
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_partition() {
        let g = make_interval_grid(16, Grading::Uniform).unwrap();
        for (i, x) in g.nodes().iter().enumerate() {
            assert_eq!(*x, i as f64 / 16.0);
        }
        let small = IntervalGrid::from_nodes(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(small.n(), 4);
        assert!(small.is_uniform());
        assert_eq!(small.h(2), 0.25);
    }

    #[test]
    fn too_few_cells_rejected() {
        assert!(matches!(
            make_interval_grid(4, Grading::Uniform),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn stretch_one_is_identity() {
        let a = make_interval_grid(16, Grading::Uniform).unwrap();
        let b = make_interval_grid(16, Grading::Tanh { stretch: 1.0 }).unwrap();
        assert_eq!(a.nodes(), b.nodes());
    }

    #[test]
    fn bad_stretch_rejected() {
        assert!(make_interval_grid(32, Grading::Tanh { stretch: 0.5 }).is_err());
        assert!(make_interval_grid(32, Grading::Tanh { stretch: f64::NAN }).is_err());
    }

    #[test]
    fn tanh_grading_min_spacing_at_wall() {
        let n = 1024;
        let g = make_interval_grid(n, Grading::Tanh { stretch: 3.0 }).unwrap();
        // direct evaluation of the map at the first interior node, beta = 2
        let beta = 2.0_f64;
        let expected = 0.5 * (1.0 + (beta * (2.0 / n as f64 - 1.0)).tanh() / beta.tanh());
        assert_abs_diff_eq!(g.min_spacing(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(g.h(0), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(g.h(n - 1), expected, epsilon = 1e-14);
        assert!(g.spacing_ratio().is_finite() && g.spacing_ratio() > 1.0);
    }

    #[test]
    fn halfline_spacing() {
        let g = make_halfline_grid(28.0, 64).unwrap();
        assert_eq!(g.spacing(), 0.4375);
        let g = make_halfline_grid(40.0, 4096).unwrap();
        assert_eq!(g.spacing(), 40.0 / 4096.0);
        assert_eq!(g.nodes()[4096], 40.0);
    }

    #[test]
    fn halfline_decay_budget() {
        assert!(matches!(make_halfline_grid(27.0, 64), Err(Error::Grid(_))));
        assert!(make_halfline_grid(32.0, 63).is_err());
    }

    #[test]
    fn tail_of_zero_is_zero() {
        let g = make_halfline_grid(32.0, 256).unwrap();
        let f = vec![0.0; g.len()];
        for rule in [QuadratureRule::TRAPEZOID, QuadratureRule::SIMPSON] {
            assert_eq!(integrate_tail(&f, &g, 0.0, rule).unwrap(), 0.0);
        }
    }

    #[test]
    fn tail_of_exponential() {
        let g = make_halfline_grid(28.0, 2048).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp()).collect();
        let exact = 1.0 - (-28.0_f64).exp();
        let h = g.spacing();
        let trap = integrate_tail(&f, &g, 0.0, QuadratureRule::TRAPEZOID).unwrap();
        assert!((trap - exact).abs() < h * h / 12.0 * 1.01);
        let simp = integrate_tail(&f, &g, 0.0, QuadratureRule::SIMPSON).unwrap();
        assert!((simp - exact).abs() < h.powi(4));
    }

    #[test]
    fn tail_of_z_exp_from_one() {
        // int_1^inf z e^{-z} dz = 2/e; z = 1 is node 100
        let g = make_halfline_grid(40.0, 4000).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|z| z * (-z).exp()).collect();
        let exact = 2.0 * (-1.0_f64).exp();
        let trap = integrate_tail(&f, &g, 1.0, QuadratureRule::TRAPEZOID).unwrap();
        assert_abs_diff_eq!(trap, exact, epsilon = 1e-5);
        let simp = integrate_tail(&f, &g, 1.0, QuadratureRule::SIMPSON).unwrap();
        assert_abs_diff_eq!(simp, exact, epsilon = 1e-9);
        // start between nodes
        let off = integrate_tail(&f, &g, 1.003, QuadratureRule::SIMPSON).unwrap();
        let exact_off = (1.0 + 1.003) * (-1.003_f64).exp();
        assert_abs_diff_eq!(off, exact_off, epsilon = 1e-6);
    }

    #[test]
    fn tail_start_outside_grid() {
        let g = make_halfline_grid(32.0, 64).unwrap();
        let f = vec![1.0; g.len()];
        assert!(integrate_tail(&f, &g, -0.1, QuadratureRule::TRAPEZOID).is_err());
        assert!(integrate_tail(&f, &g, 33.0, QuadratureRule::TRAPEZOID).is_err());
    }

    #[test]
    fn trapezoid_doubling_gains_second_order() {
        let mut prev = None;
        for m in [64, 128, 256, 512] {
            let g = make_halfline_grid(32.0, m).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp() * (1.0 + z)).collect();
            let exact = 2.0; // int_0^inf (1+z) e^{-z}
            let err = (integrate_tail(&f, &g, 0.0, QuadratureRule::TRAPEZOID).unwrap() - exact).abs();
            if let Some(p) = prev {
                assert!(p / err >= 3.5, "ratio {}", p / err);
            }
            prev = Some(err);
        }
    }

    #[test]
    fn derivative_is_second_order_on_graded_mesh() {
        let f = |x: f64| (3.0 * x).sin();
        let df = |x: f64| 3.0 * (3.0 * x).cos();
        let mut errs = Vec::new();
        for n in [64, 128, 256] {
            let g = make_interval_grid(n, Grading::Tanh { stretch: 2.5 }).unwrap();
            let v: Vec<f64> = g.nodes().iter().map(|&x| f(x)).collect();
            let d = g.derivative(&v);
            let e = g
                .nodes()
                .iter()
                .zip(&d)
                .map(|(&x, d)| (d - df(x)).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }

    #[test]
    fn restriction_between_nested_grids() {
        let fine = make_interval_grid(64, Grading::Uniform).unwrap();
        let coarse = make_interval_grid(16, Grading::Uniform).unwrap();
        let f: Vec<f64> = fine.nodes().iter().map(|x| x * x).collect();
        let r = coarse.restrict(&fine, &f).unwrap();
        for (x, v) in coarse.nodes().iter().zip(&r) {
            assert_eq!(x * x, *v);
        }
        let other = make_interval_grid(40, Grading::Uniform).unwrap();
        assert!(coarse.restrict(&other, &vec![0.0; 41]).is_err());
    }

    #[test]
    fn cumulative_tails_match_closed_form() {
        let g = make_halfline_grid(32.0, 1024).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|z| (-z).exp()).collect();
        for rule in [QuadratureRule::TRAPEZOID, QuadratureRule::SIMPSON] {
            let t = rule.tail_integrals(&g, &f);
            assert_eq!(t[1024], 0.0);
            for (z, v) in g.nodes().iter().zip(&t) {
                let exact = (-z).exp() - (-32.0f64).exp();
                assert!((v - exact).abs() < 1e-4 * (-z).exp() + 1e-15, "{rule:?} z={z}");
            }
        }
        let trap = QuadratureRule::TRAPEZOID.tail_integrals(&g, &f)[0];
        let simp = QuadratureRule::SIMPSON.tail_integrals(&g, &f)[0];
        assert!((simp - 1.0).abs() < (trap - 1.0).abs());
    }
}
