//! Model parameters, initial data, endpoint compatibility conditions and the
//! anti-derivative transform `phi(x) = int_0^x (u - M)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::IntervalGrid;

/// Compatibility tolerance for data carrying closed-form derivatives.
pub const COMPAT_TOL_SYMBOLIC: f64 = 1e-8;
/// Compatibility tolerance for tabulated data.
pub const COMPAT_TOL_TABULATED: f64 = 1e-4;
/// Tabulated data needs at least this many cells for endpoint fits.
pub const MIN_CELLS_FOR_FIT: usize = 64;

/// Dense polynomial `sum_k c[k] t^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `scale * x^a (1 - x)^b` expanded in the monomial basis.
    pub fn beta_bump(a: usize, b: usize, scale: f64) -> Self {
        let mut coeffs = vec![0.0; a + b + 1];
        let mut binom = 1.0;
        for k in 0..=b {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[a + k] = scale * sign * binom;
            binom = binom * (b - k) as f64 / (k + 1) as f64;
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Value clamped to zero when it is negative but within the Horner
    /// rounding bound `2 deg u sum |c_k| |t|^k`.
    pub fn eval_nonnegative(&self, t: f64) -> f64 {
        let v = self.eval(t);
        if v >= 0.0 {
            return v;
        }
        let abs = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t.abs() + c.abs());
        let bound = 2.0 * (self.degree() + 1) as f64 * f64::EPSILON * abs;
        if v >= -bound {
            0.0
        } else {
            v
        }
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::constant(0.0);
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Poly, k: usize| p.coeffs.get(k).copied().unwrap_or(0.0);
        Self {
            coeffs: (0..n).map(|k| get(self, k) + get(other, k)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Product truncated to degree `max_degree`.
    pub fn mul_truncated(&self, other: &Poly, max_degree: usize) -> Self {
        let n = (self.coeffs.len() + other.coeffs.len() - 1).min(max_degree + 1);
        let mut coeffs = vec![0.0; n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j < n {
                    coeffs[i + j] += a * b;
                }
            }
        }
        Self { coeffs }
    }

    /// Re-expand about `x0`: returns `q` with `q(h) = p(x0 + h)`.
    pub fn taylor_shift(&self, x0: f64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division
        for i in 0..n {
            for k in (i..n - 1).rev() {
                c[k] += x0 * c[k + 1];
            }
        }
        Self { coeffs: c }
    }

    pub fn truncate(&self, max_degree: usize) -> Self {
        Self {
            coeffs: self.coeffs.iter().take(max_degree + 1).copied().collect(),
        }
    }

    /// `int_0^1 p`.
    pub fn integral_unit(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c / (k + 1) as f64)
            .sum()
    }

    /// `d^k p / dt^k` at `t = 0`.
    pub fn derivative_at_zero(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        self.coeffs.get(k).copied().unwrap_or(0.0) * fact
    }
}

/// Two-column tabulated field: header line naming the field, then `x value`
/// rows separated by whitespace or a comma.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Input("empty tabulated file".into()))?;
        let cols: Vec<&str> = split_row(header);
        if cols.len() != 2 {
            return Err(Error::Input(format!(
                "tabulated header must name two columns, got `{header}`"
            )));
        }
        let name = cols[1].to_string();
        let mut x = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines {
            let cols = split_row(line);
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Input(format!("line {}: cannot parse `{s}` as a number", lineno + 1))
                })
            };
            if cols.len() != 2 {
                return Err(Error::Input(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            }
            x.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        if x.len() < 2 {
            return Err(Error::Input("tabulated field needs at least two rows".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("tabulated x must be strictly increasing".into()));
        }
        if x[0] > 0.0 || *x.last().unwrap() < 1.0 {
            return Err(Error::Input("tabulated x must cover [0, 1]".into()));
        }
        Ok(Self { name, x, values })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn from_fn(name: &str, grid: &IntervalGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            name: name.into(),
            x: grid.nodes().to_vec(),
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    /// Piecewise-linear evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let i = match self.x.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.values[i],
            Err(0) => return self.values[0],
            Err(i) if i >= self.x.len() => return *self.values.last().unwrap(),
            Err(i) => i - 1,
        };
        let s = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }
}

fn split_row(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Where the initial data comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialPreset {
    /// `u0 = x^8 (1-x)^8`, `v0 = v_* + x^6 (1-x)^6`.
    PaperPoly8,
    /// Arbitrary polynomials; derivatives are exact.
    Polynomial { u0: Poly, v0: Poly },
    /// Sampled fields, interpolated linearly onto the grid.
    Tabulated { u0: Table, v0: Table },
}

impl InitialPreset {
    pub fn name(&self) -> &'static str {
        match self {
            InitialPreset::PaperPoly8 => "paper_poly8",
            InitialPreset::Polynomial { .. } => "polynomial",
            InitialPreset::Tabulated { .. } => "tabulated",
        }
    }

    /// Closed-form `(u0, v0)` when the preset has one.
    pub fn polynomials(&self, v_star: f64) -> Option<(Poly, Poly)> {
        match self {
            InitialPreset::PaperPoly8 => Some((
                Poly::beta_bump(8, 8, 1.0),
                Poly::beta_bump(6, 6, 1.0).add(&Poly::constant(v_star)),
            )),
            InitialPreset::Polynomial { u0, v0 } => Some((u0.clone(), v0.clone())),
            InitialPreset::Tabulated { .. } => None,
        }
    }

    /// `true` when the data are symmetric under `x -> 1 - x`.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, InitialPreset::PaperPoly8)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub v_star: f64,
    pub horizon: f64,
    pub preset: InitialPreset,
}

impl ModelParams {
    pub fn new(epsilon: f64, v_star: f64, horizon: f64, preset: InitialPreset) -> Result<Self> {
        let p = Self {
            epsilon,
            v_star,
            horizon,
            preset,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn paper_default(epsilon: f64) -> Self {
        Self {
            epsilon,
            v_star: 1.0,
            horizon: 0.25,
            preset: InitialPreset::PaperPoly8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Input(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.v_star >= 0.0) || !self.v_star.is_finite() {
            return Err(Error::Input(format!("v_star must be >= 0, got {}", self.v_star)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Input(format!("horizon must be > 0, got {}", self.horizon)));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }
}

/// `(u0, v0, phi0)` sampled on a grid together with the mass `M`.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub grid: IntervalGrid,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub mass: f64,
    /// `u0` vanishes at both endpoints.
    pub degenerate: bool,
    symbolic: Option<(Poly, Poly)>,
    symmetric: bool,
}

impl InitialData {
    pub fn symbolic(&self) -> Option<&(Poly, Poly)> {
        self.symbolic.as_ref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn max_v0(&self) -> f64 {
        self.v0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_v0(&self) -> f64 {
        self.v0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same data on another grid (re-sampled from the preset).
    pub fn resample(&self, params: &ModelParams, grid: &IntervalGrid) -> Result<Self> {
        build_initial_data(&params.preset, params, grid)
    }
}

pub fn build_initial_data(
    preset: &InitialPreset,
    params: &ModelParams,
    grid: &IntervalGrid,
) -> Result<InitialData> {
    let nodes = grid.nodes();
    let symbolic = preset.polynomials(params.v_star);
    let (u0, v0): (Vec<f64>, Vec<f64>) = match (&symbolic, preset) {
        // factored form; the monomial sum cancels badly near x = 1
        (_, InitialPreset::PaperPoly8) => (
            nodes.iter().map(|&x| (x * (1.0 - x)).powi(8)).collect(),
            nodes.iter().map(|&x| params.v_star + (x * (1.0 - x)).powi(6)).collect(),
        ),
        (Some((pu, pv)), _) => (
            nodes.iter().map(|&x| pu.eval_nonnegative(x)).collect(),
            nodes.iter().map(|&x| pv.eval(x)).collect(),
        ),
        (None, InitialPreset::Tabulated { u0, v0 }) => (
            nodes.iter().map(|&x| u0.eval(x)).collect(),
            nodes.iter().map(|&x| v0.eval(x)).collect(),
        ),
        (None, _) => unreachable!("non-tabulated presets are symbolic"),
    };
    // exact zeros from cancellation round to tiny negatives near the walls
    let scale = u0.iter().map(|u| u.abs()).fold(0.0, f64::max);
    let u0: Vec<f64> = u0
        .into_iter()
        .map(|u| if u < 0.0 && u >= -1e-13 * scale { 0.0 } else { u })
        .collect();
    if let Some((i, u)) = u0.iter().enumerate().find(|(_, u)| **u < 0.0 || !u.is_finite()) {
        return Err(Error::Input(format!(
            "u0 must be finite and >= 0; u0(x={}) = {u:e}",
            nodes[i]
        )));
    }
    if let Some((i, v)) = v0.iter().enumerate().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
        return Err(Error::Input(format!(
            "v0 must be finite and >= 0; v0(x={}) = {v:e}",
            nodes[i]
        )));
    }
    let mass = grid.integrate(&u0);
    let phi0 = antiderivative_transform(&u0, mass, grid);
    let n = grid.n();
    let degenerate = u0[0] == 0.0 && u0[n] == 0.0;
    Ok(InitialData {
        grid: grid.clone(),
        u0,
        v0,
        phi0,
        mass,
        degenerate,
        symbolic,
        symmetric: preset.is_symmetric(),
    })
}

/// `phi(x_i) = int_0^{x_i} (u - M)`; starts at exactly zero.
pub fn antiderivative_transform(u: &[f64], mass: f64, grid: &IntervalGrid) -> Vec<f64> {
    let shifted: Vec<f64> = u.iter().map(|u| u - mass).collect();
    grid.cumulative(&shifted)
}

/// `u = phi_x + M` (centred differences, one-sided at the ends).
pub fn inverse_transform(phi: &[f64], mass: f64, grid: &IntervalGrid) -> Vec<f64> {
    grid.derivative(phi).into_iter().map(|d| d + mass).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompatCondition {
    /// `v0 - v_*`
    BoundaryValue,
    /// `phi0_x + M = u0`
    Degeneracy,
    /// `phi0_xx v0_x - phi0_xxx`
    ThirdOrder,
    /// `(d_t phi)_xx - (d_t phi)_x v0_x`
    SecondTimeDerivative,
    /// `(d_t^2 phi)_xx - (d_t^2 phi)_x v0_x + 2 (d_t phi)_x (phi0_x + M) v0_x`
    ThirdTimeDerivative,
}

impl CompatCondition {
    pub const ALL: [CompatCondition; 5] = [
        CompatCondition::BoundaryValue,
        CompatCondition::Degeneracy,
        CompatCondition::ThirdOrder,
        CompatCondition::SecondTimeDerivative,
        CompatCondition::ThirdTimeDerivative,
    ];
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatResidual {
    pub condition: CompatCondition,
    pub at_left: f64,
    pub at_right: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub residuals: Vec<CompatResidual>,
    pub tolerance: f64,
    pub symbolic: bool,
    pub pass: bool,
}

impl CompatibilityReport {
    pub fn residual(&self, c: CompatCondition) -> &CompatResidual {
        self.residuals.iter().find(|r| r.condition == c).unwrap()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.at_left.abs().max(r.at_right.abs()))
            .fold(0.0, f64::max)
    }
}

/// Degree kept in local endpoint expansions; the conditions need at most
/// five derivatives of `u0` and `v0`.
const LOCAL_DEGREE: usize = 8;

/// Evaluate the five endpoint compatibility conditions at `x = 0` and `x = 1`.
///
/// Symbolic data are re-expanded exactly about each endpoint; tabulated data
/// use a least-squares polynomial fit on the nodes nearest the wall.
pub fn check_compatibility(data: &InitialData, v_star: f64) -> Result<CompatibilityReport> {
    let (local, tolerance, symbolic) = match data.symbolic() {
        Some((pu, pv)) => {
            let l = (
                pu.taylor_shift(0.0).truncate(LOCAL_DEGREE),
                pv.taylor_shift(0.0).truncate(LOCAL_DEGREE),
            );
            let r = (
                pu.taylor_shift(1.0).truncate(LOCAL_DEGREE),
                pv.taylor_shift(1.0).truncate(LOCAL_DEGREE),
            );
            ([l, r], COMPAT_TOL_SYMBOLIC, true)
        }
        None => {
            if data.grid.n() < MIN_CELLS_FOR_FIT {
                return Err(Error::Input(format!(
                    "grid with {} cells is too coarse for endpoint derivatives up to fifth order \
                     (need at least {MIN_CELLS_FOR_FIT})",
                    data.grid.n()
                )));
            }
            let l = (
                endpoint_fit(&data.grid, &data.u0, true),
                endpoint_fit(&data.grid, &data.v0, true),
            );
            let r = (
                endpoint_fit(&data.grid, &data.u0, false),
                endpoint_fit(&data.grid, &data.v0, false),
            );
            ([l, r], COMPAT_TOL_TABULATED, false)
        }
    };
    let left = conditions_at(&local[0].0, &local[0].1, v_star);
    let right = conditions_at(&local[1].0, &local[1].1, v_star);
    let residuals: Vec<CompatResidual> = CompatCondition::ALL
        .iter()
        .enumerate()
        .map(|(k, &condition)| CompatResidual {
            condition,
            at_left: left[k],
            at_right: right[k],
            pass: left[k].abs() <= tolerance && right[k].abs() <= tolerance,
        })
        .collect();
    let pass = residuals.iter().all(|r| r.pass);
    Ok(CompatibilityReport {
        residuals,
        tolerance,
        symbolic,
        pass,
    })
}

/// Residuals of the five conditions from local expansions `u(h)`, `v(h)`
/// about an endpoint (`h = 0` at the wall).
fn conditions_at(u: &Poly, v: &Poly, v_star: f64) -> [f64; 5] {
    let d = LOCAL_DEGREE;
    let du = u.derivative();
    let dv = v.derivative();
    // first time derivative of phi: phi0_xx - (phi0_x + M) v0_x = u' - u v'
    let f1 = du.sub(&u.mul_truncated(&dv, d));
    let df1 = f1.derivative();
    // second time derivative: f1'' + u (u v)' - f1' v'
    let uv = u.mul_truncated(v, d);
    let f2 = df1
        .derivative()
        .add(&u.mul_truncated(&uv.derivative(), d))
        .sub(&df1.mul_truncated(&dv, d));
    let df2 = f2.derivative();
    let at0 = |p: &Poly| p.derivative_at_zero(0);
    [
        at0(v) - v_star,
        at0(u),
        at0(&du) * at0(&dv) - du.derivative_at_zero(1),
        df1.derivative_at_zero(1) - at0(&df1) * at0(&dv),
        df2.derivative_at_zero(1) - at0(&df2) * at0(&dv) + 2.0 * at0(&df1) * at0(u) * at0(&dv),
    ]
}

/// Local polynomial in `h = x - x_wall`, fitted by least squares on the
/// nodes nearest the wall.
fn endpoint_fit(grid: &IntervalGrid, f: &[f64], left: bool) -> Poly {
    const POINTS: usize = 24;
    const DEGREE: usize = 9;
    let n = grid.n();
    let x = grid.nodes();
    let wall = if left { 0.0 } else { 1.0 };
    let idx = |k: usize| if left { k } else { n - k };
    let scale = (x[idx(POINTS - 1)] - wall).abs();
    // columns t^j with t = (x - wall)/scale in [-1, 1]
    let a = DMatrix::from_fn(POINTS, DEGREE + 1, |r, c| ((x[idx(r)] - wall) / scale).powi(c as i32));
    let b = DVector::from_fn(POINTS, |r, _| f[idx(r)]);
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-15)
        .expect("SVD with both factors always solves");
    Poly::new(
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c / scale.powi(k as i32))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{make_interval_grid, Grading};
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> IntervalGrid {
        make_interval_grid(n, Grading::Uniform).unwrap()
    }

    #[test]
    fn beta_bump_matches_direct_evaluation() {
        let p = Poly::beta_bump(8, 8, 1.0);
        for &x in &[0.0f64, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let direct = x.powi(8) * (1.0 - x).powi(8);
            assert_abs_diff_eq!(p.eval(x), direct, epsilon = 1e-15);
        }
    }

    #[test]
    fn taylor_shift_is_exact_for_integer_coefficients() {
        let p = Poly::beta_bump(8, 8, 1.0);
        let q = p.taylor_shift(1.0);
        // about x = 1 the bump is (1+h)^8 h^8: lowest coefficient is h^8 with 1
        for k in 0..8 {
            assert_eq!(q.coeffs[k], 0.0);
        }
        assert_eq!(q.coeffs[8], 1.0);
        assert_eq!(q.coeffs[9], 8.0);
    }

    #[test]
    fn paper_preset_values() {
        let g = grid(64);
        let params = ModelParams::paper_default(1e-3);
        let d = build_initial_data(&params.preset, &params, &g).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert_abs_diff_eq!(d.u0[i], x.powi(8) * (1.0 - x).powi(8), epsilon = 1e-15);
            assert_abs_diff_eq!(d.v0[i], 1.0 + x.powi(6) * (1.0 - x).powi(6), epsilon = 1e-15);
        }
        assert!(d.degenerate);
        assert_eq!(d.phi0[0], 0.0);
    }

    #[test]
    fn paper_preset_mass_is_beta_integral() {
        // B(9,9) = 8! 8! / 17!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        let exact = fact(8) * fact(8) / fact(17);
        let g = grid(256);
        let params = ModelParams::paper_default(1e-3);
        let d = build_initial_data(&params.preset, &params, &g).unwrap();
        assert!((d.mass - exact).abs() / exact < 1e-10, "{} vs {exact}", d.mass);
        // the alternating monomial sum loses a few digits to cancellation
        let poly = Poly::beta_bump(8, 8, 1.0).integral_unit();
        assert!((poly - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn build_is_deterministic() {
        let g = grid(128);
        let params = ModelParams::paper_default(1e-3);
        let a = build_initial_data(&params.preset, &params, &g).unwrap();
        let b = build_initial_data(&params.preset, &params, &g).unwrap();
        assert_eq!(a.u0, b.u0);
        assert_eq!(a.v0, b.v0);
        assert_eq!(a.phi0, b.phi0);
        assert_eq!(a.mass.to_bits(), b.mass.to_bits());
    }

    #[test]
    fn constant_u0_is_accepted_but_not_degenerate() {
        let g = grid(64);
        let preset = InitialPreset::Polynomial {
            u0: Poly::constant(0.5),
            v0: Poly::constant(1.0),
        };
        let params = ModelParams::new(1e-3, 1.0, 0.25, preset.clone()).unwrap();
        let d = build_initial_data(&preset, &params, &g).unwrap();
        assert!(!d.degenerate);
        assert_abs_diff_eq!(d.mass, 0.5, epsilon = 1e-15);
        let rep = check_compatibility(&d, 1.0).unwrap();
        assert!(!rep.pass);
        assert!(!rep.residual(CompatCondition::Degeneracy).pass);
        assert_abs_diff_eq!(rep.residual(CompatCondition::Degeneracy).at_left, 0.5);
    }

    #[test]
    fn negative_tabulated_data_rejected() {
        let g = grid(32);
        let u0 = Table::from_fn("u0", &g, |x| x - 0.5);
        let v0 = Table::from_fn("v0", &g, |_| 1.0);
        let preset = InitialPreset::Tabulated { u0, v0 };
        let params = ModelParams::new(1e-3, 1.0, 0.25, preset.clone()).unwrap();
        assert!(matches!(
            build_initial_data(&preset, &params, &g),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn paper_preset_is_compatible() {
        let g = grid(256);
        let params = ModelParams::paper_default(1e-3);
        let d = build_initial_data(&params.preset, &params, &g).unwrap();
        let rep = check_compatibility(&d, 1.0).unwrap();
        assert!(rep.symbolic);
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_residual() <= 1e-12);
    }

    #[test]
    fn wrong_wall_value_fails_first_condition() {
        let g = grid(256);
        let params = ModelParams::paper_default(1e-3);
        let d = build_initial_data(&params.preset, &params, &g).unwrap();
        let rep = check_compatibility(&d, 2.0).unwrap();
        assert!(!rep.residual(CompatCondition::BoundaryValue).pass);
        assert_abs_diff_eq!(rep.residual(CompatCondition::BoundaryValue).at_left, -1.0);
        assert!(rep.residual(CompatCondition::Degeneracy).pass);
    }

    #[test]
    fn conditions_detect_linear_wall_behaviour() {
        // u0 = x^2 (1-x)^2: vanishes at the wall but u0'' != 0 there
        let u0 = Poly::beta_bump(2, 2, 1.0);
        let v0 = Poly::constant(1.0);
        let g = grid(64);
        let preset = InitialPreset::Polynomial { u0, v0 };
        let params = ModelParams::new(1e-3, 1.0, 0.25, preset.clone()).unwrap();
        let d = build_initial_data(&preset, &params, &g).unwrap();
        let rep = check_compatibility(&d, 1.0).unwrap();
        assert!(rep.residual(CompatCondition::Degeneracy).pass);
        // -phi0_xxx = -u0'' = -2 at both walls
        assert_abs_diff_eq!(rep.residual(CompatCondition::ThirdOrder).at_left, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.residual(CompatCondition::ThirdOrder).at_right, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn tabulated_fit_matches_symbolic_on_paper_data() {
        let g = grid(1024);
        let u0 = Table::from_fn("u0", &g, |x| x.powi(8) * (1.0 - x).powi(8));
        let v0 = Table::from_fn("v0", &g, |x| 1.0 + x.powi(6) * (1.0 - x).powi(6));
        let preset = InitialPreset::Tabulated { u0, v0 };
        let params = ModelParams::new(1e-3, 1.0, 0.25, preset.clone()).unwrap();
        let d = build_initial_data(&preset, &params, &g).unwrap();
        let rep = check_compatibility(&d, 1.0).unwrap();
        assert!(!rep.symbolic);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn tabulated_too_coarse_is_reported() {
        let g = grid(32);
        let u0 = Table::from_fn("u0", &g, |x| x.powi(8) * (1.0 - x).powi(8));
        let v0 = Table::from_fn("v0", &g, |_| 1.0);
        let preset = InitialPreset::Tabulated { u0, v0 };
        let params = ModelParams::new(1e-3, 1.0, 0.25, preset.clone()).unwrap();
        let d = build_initial_data(&preset, &params, &g).unwrap();
        assert!(check_compatibility(&d, 1.0).is_err());
    }

    #[test]
    fn transform_of_constant_is_zero() {
        let g = grid(64);
        let u = vec![0.7; g.len()];
        let phi = antiderivative_transform(&u, 0.7, &g);
        assert!(phi.iter().all(|p| *p == 0.0));
        let back = inverse_transform(&vec![0.0; g.len()], 0.7, &g);
        assert!(back.iter().all(|u| *u == 0.7));
    }

    #[test]
    fn inverse_transform_of_sine() {
        let g = grid(512);
        let two_pi = 2.0 * std::f64::consts::PI;
        let phi: Vec<f64> = g.nodes().iter().map(|x| (two_pi * x).sin() / two_pi).collect();
        let u = inverse_transform(&phi, 0.0, &g);
        for (x, u) in g.nodes().iter().zip(&u) {
            assert!((u - (two_pi * x).cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn phi_at_half_matches_fine_simpson_oracle() {
        let g = grid(256);
        let params = ModelParams::paper_default(1e-3);
        let d = build_initial_data(&params.preset, &params, &g).unwrap();
        // composite Simpson on 20000 panels over [0, 0.5]
        let panels = 20_000;
        let h = 0.5 / panels as f64;
        let f = |x: f64| x.powi(8) * (1.0 - x).powi(8) - d.mass;
        let mut s = f(0.0) + f(0.5);
        for k in 1..panels {
            s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = s * h / 3.0;
        assert!((d.phi0[128] - oracle).abs() < 1e-12, "{} vs {oracle}", d.phi0[128]);
        assert!(d.phi0[256].abs() < 1e-18);
    }

    #[test]
    fn round_trip_is_second_order() {
        let err = |n: usize| {
            let g = grid(n);
            let params = ModelParams::paper_default(1e-3);
            let d = build_initial_data(&params.preset, &params, &g).unwrap();
            let back = inverse_transform(&d.phi0, d.mass, &g);
            back.iter().zip(&d.u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(128), err(256));
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn table_parsing() {
        let t = Table::parse("x, u0\n0, 1\n0.5, 2\n1, 3\n").unwrap();
        assert_eq!(t.name, "u0");
        assert_eq!(t.eval(0.25), 1.5);
        assert!(Table::parse("x u0\n0 1\n0.5 abc\n1 2\n").is_err());
        assert!(Table::parse("x u0\n0.1 1\n1 2\n").is_err());
    }
}
