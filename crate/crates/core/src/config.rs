//! `section.key = value` run configuration.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys, malformed values and constraint violations are reported
//! with their line number. [`RunConfig::render`] produces the effective
//! configuration, which parses back to an equal value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{default_epsilons, AcceptanceBands, SweepPlan};
use crate::error::{Error, Result};
use crate::expansion::Order;
use crate::grids::{Grading, QuadratureRule};
use crate::model::{InitialPreset, Poly, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub epsilon_list: Vec<f64>,
    pub v_star: f64,
    pub horizon: f64,
    /// `paper_poly8`, `polynomial` or `tabulated`.
    pub preset: String,
    /// Monomial coefficients, lowest degree first (`polynomial` preset).
    pub u0_coeffs: Vec<f64>,
    pub v0_coeffs: Vec<f64>,
    /// Two-column tables (`tabulated` preset), relative to the config file.
    pub u0_path: String,
    pub v0_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    /// `dx <= sqrt(eps) / cells_per_layer`, rounded up to a power of two.
    pub cells_per_layer: f64,
    pub max_cells: usize,
    /// `uniform` or `tanh`.
    pub grading: String,
    pub stretch: f64,
    pub z_max: f64,
    pub m: usize,
    /// Abort instead of warn when `dx > sqrt(eps)/8`.
    pub strict_resolution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSection {
    /// `0` selects the default rule `min(T/2000, cfl dx / max|v0_x|)`.
    pub steps: usize,
    pub cfl: f64,
    /// Number of output intervals; snapshots at `k T / outputs`.
    pub outputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSection {
    /// `0`, `1` or `2`.
    pub order: usize,
    /// `trapezoid` or `simpson`.
    pub quadrature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSection {
    pub threshold: f64,
    pub delta: f64,
    /// `0` computes profiles per sweep grid level; otherwise one shared grid.
    pub outer_cells: usize,
    pub slope_ev: f64,
    pub slope_eu: f64,
    pub min_r_squared: f64,
    pub thickness_min: f64,
    pub thickness_max: f64,
    pub slope_boundary: f64,
    pub interior_ratio: f64,
    pub gap_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub directory: String,
    /// Subset of `csv`, `json`.
    pub formats: Vec<String>,
    /// Per-epsilon trajectories in sweeps.
    pub trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub layer: LayerSection,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
    /// Directory relative paths are resolved against; not part of the echo.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bands = AcceptanceBands::default();
        Self {
            model: ModelSection {
                epsilon_list: default_epsilons(),
                v_star: 1.0,
                horizon: 0.25,
                preset: "paper_poly8".into(),
                u0_coeffs: Vec::new(),
                v0_coeffs: Vec::new(),
                u0_path: String::new(),
                v0_path: String::new(),
            },
            grid: GridSection {
                cells_per_layer: 8.0,
                max_cells: 1 << 15,
                grading: "uniform".into(),
                stretch: 1.0,
                z_max: 32.0,
                m: 2048,
                strict_resolution: false,
            },
            time: TimeSection {
                steps: 0,
                cfl: 0.5,
                outputs: 8,
            },
            layer: LayerSection {
                order: 2,
                quadrature: "trapezoid".into(),
            },
            analysis: AnalysisSection {
                threshold: 0.1,
                delta: 0.25,
                outer_cells: 0,
                slope_ev: bands.slope_ev,
                slope_eu: bands.slope_eu,
                min_r_squared: bands.min_r_squared,
                thickness_min: bands.thickness.0,
                thickness_max: bands.thickness.1,
                slope_boundary: bands.slope_boundary,
                interior_ratio: bands.interior_ratio,
                gap_fraction: bands.gap_fraction,
            },
            output: OutputSection {
                directory: "layerlab-out".into(),
                formats: vec!["csv".into(), "json".into()],
                trajectories: false,
            },
            base_dir: PathBuf::from("."),
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// Reals, also accepting `2^-6` style powers.
fn parse_f64(s: &str, line: usize, key: &str) -> Result<f64> {
    let s = s.trim();
    let v = if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().map_err(|_| err(line, format!("{key}: bad base in '{s}'")))?;
        let e: f64 = e.trim().parse().map_err(|_| err(line, format!("{key}: bad exponent in '{s}'")))?;
        b.powf(e)
    } else {
        s.parse().map_err(|_| err(line, format!("{key}: expected a number, got '{s}'")))?
    };
    if !v.is_finite() {
        return Err(err(line, format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn parse_usize(s: &str, line: usize, key: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| err(line, format!("{key}: expected a nonnegative integer, got '{}'", s.trim())))
}

fn parse_bool(s: &str, line: usize, key: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(err(line, format!("{key}: expected true or false, got '{other}'"))),
    }
}

fn parse_list(s: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_f64(t, line, key))
        .collect()
}

fn one_of(s: &str, allowed: &[&str], line: usize, key: &str) -> Result<String> {
    let s = s.trim();
    if allowed.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(err(line, format!("{key}: expected one of {allowed:?}, got '{s}'")))
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut lines = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'section.key = value', got '{content}'")))?;
            let key = key.trim();
            if lines.insert(key.to_string(), line).is_some() {
                return Err(err(line, format!("duplicate key '{key}'")));
            }
            cfg.set(key, value.trim(), line)?;
        }
        cfg.validate(&lines)?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> Result<()> {
        match key {
            "model.epsilon_list" => self.model.epsilon_list = parse_list(v, line, key)?,
            "model.v_star" => self.model.v_star = parse_f64(v, line, key)?,
            "model.T" | "model.horizon" => self.model.horizon = parse_f64(v, line, key)?,
            "model.preset" => self.model.preset = one_of(v, &["paper_poly8", "polynomial", "tabulated"], line, key)?,
            "model.u0_coeffs" => self.model.u0_coeffs = parse_list(v, line, key)?,
            "model.v0_coeffs" => self.model.v0_coeffs = parse_list(v, line, key)?,
            "model.u0_path" => self.model.u0_path = v.to_string(),
            "model.v0_path" => self.model.v0_path = v.to_string(),
            "grid.cells_per_layer" => self.grid.cells_per_layer = parse_f64(v, line, key)?,
            "grid.max_cells" => self.grid.max_cells = parse_usize(v, line, key)?,
            "grid.grading" => self.grid.grading = one_of(v, &["uniform", "tanh"], line, key)?,
            "grid.stretch" => self.grid.stretch = parse_f64(v, line, key)?,
            "grid.z_max" => self.grid.z_max = parse_f64(v, line, key)?,
            "grid.m" => self.grid.m = parse_usize(v, line, key)?,
            "grid.strict_resolution" => self.grid.strict_resolution = parse_bool(v, line, key)?,
            "time.steps" => self.time.steps = parse_usize(v, line, key)?,
            "time.cfl" => self.time.cfl = parse_f64(v, line, key)?,
            "time.outputs" => self.time.outputs = parse_usize(v, line, key)?,
            "layer.order" => {
                self.layer.order = parse_usize(v, line, key)?;
            }
            "layer.quadrature" => self.layer.quadrature = one_of(v, &["trapezoid", "simpson"], line, key)?,
            "analysis.threshold" => self.analysis.threshold = parse_f64(v, line, key)?,
            "analysis.delta" => self.analysis.delta = parse_f64(v, line, key)?,
            "analysis.outer_cells" => self.analysis.outer_cells = parse_usize(v, line, key)?,
            "analysis.slope_ev" => self.analysis.slope_ev = parse_f64(v, line, key)?,
            "analysis.slope_eu" => self.analysis.slope_eu = parse_f64(v, line, key)?,
            "analysis.min_r_squared" => self.analysis.min_r_squared = parse_f64(v, line, key)?,
            "analysis.thickness_min" => self.analysis.thickness_min = parse_f64(v, line, key)?,
            "analysis.thickness_max" => self.analysis.thickness_max = parse_f64(v, line, key)?,
            "analysis.slope_boundary" => self.analysis.slope_boundary = parse_f64(v, line, key)?,
            "analysis.interior_ratio" => self.analysis.interior_ratio = parse_f64(v, line, key)?,
            "analysis.gap_fraction" => self.analysis.gap_fraction = parse_f64(v, line, key)?,
            "output.directory" => self.output.directory = v.to_string(),
            "output.formats" => {
                self.output.formats = v
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| one_of(t, &["csv", "json"], line, key))
                    .collect::<Result<_>>()?
            }
            "output.trajectories" => self.output.trajectories = parse_bool(v, line, key)?,
            _ => return Err(err(line, format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Constraint checks; `lines` maps keys to where they were set so the
    /// error points at the offending line (0 for defaults).
    fn validate(&self, lines: &std::collections::HashMap<String, usize>) -> Result<()> {
        let at = |k: &str| lines.get(k).copied().unwrap_or(0);
        let need = |ok: bool, k: &str, msg: &str| if ok { Ok(()) } else { Err(err(at(k), format!("{k}: {msg}"))) };
        let m = &self.model;
        need(!m.epsilon_list.is_empty(), "model.epsilon_list", "at least one value required")?;
        need(m.epsilon_list.iter().all(|e| *e >= 0.0), "model.epsilon_list", "values must be >= 0")?;
        need(m.v_star >= 0.0, "model.v_star", "v_* must be >= 0")?;
        need(m.horizon > 0.0, "model.T", "T must be > 0")?;
        match m.preset.as_str() {
            "polynomial" => {
                need(!m.u0_coeffs.is_empty(), "model.u0_coeffs", "required by the polynomial preset")?;
                need(!m.v0_coeffs.is_empty(), "model.v0_coeffs", "required by the polynomial preset")?;
            }
            "tabulated" => {
                need(!m.u0_path.is_empty(), "model.u0_path", "required by the tabulated preset")?;
                need(!m.v0_path.is_empty(), "model.v0_path", "required by the tabulated preset")?;
            }
            _ => {}
        }
        let g = &self.grid;
        need(g.cells_per_layer > 0.0, "grid.cells_per_layer", "must be > 0")?;
        need(g.max_cells >= crate::grids::MIN_INTERVAL_CELLS, "grid.max_cells", "must be >= 16")?;
        need(g.stretch >= 1.0, "grid.stretch", "must be >= 1")?;
        need(g.z_max >= 28.0, "grid.z_max", "must be >= 28 (decay budget)")?;
        need(g.m >= crate::grids::MIN_HALFLINE_CELLS, "grid.m", "must be >= 64")?;
        let t = &self.time;
        need(t.cfl > 0.0, "time.cfl", "must be > 0")?;
        need(t.outputs >= 1, "time.outputs", "must be >= 1")?;
        need(t.steps.is_multiple_of(t.outputs), "time.steps", "must be a multiple of time.outputs")?;
        need(self.layer.order <= 2, "layer.order", "must be 0, 1 or 2")?;
        let a = &self.analysis;
        need(a.threshold > 0.0 && a.threshold < 1.0, "analysis.threshold", "must lie in (0,1)")?;
        need(a.delta > 0.0 && a.delta < 0.5, "analysis.delta", "must lie in (0,1/2)")?;
        need(a.thickness_min <= a.thickness_max, "analysis.thickness_min", "must not exceed thickness_max")?;
        need(!self.output.formats.is_empty(), "output.formats", "at least one format required")?;
        need(!self.output.directory.is_empty(), "output.directory", "must not be empty")?;
        Ok(())
    }

    /// The fully resolved configuration in the input format.
    pub fn render(&self) -> String {
        let (m, g, t, l, a, o) = (&self.model, &self.grid, &self.time, &self.layer, &self.analysis, &self.output);
        let mut s = String::from("# effective configuration\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("model.epsilon_list", fmt_list(&m.epsilon_list));
        kv("model.v_star", format!("{:?}", m.v_star));
        kv("model.T", format!("{:?}", m.horizon));
        kv("model.preset", m.preset.clone());
        kv("model.u0_coeffs", fmt_list(&m.u0_coeffs));
        kv("model.v0_coeffs", fmt_list(&m.v0_coeffs));
        kv("model.u0_path", m.u0_path.clone());
        kv("model.v0_path", m.v0_path.clone());
        kv("grid.cells_per_layer", format!("{:?}", g.cells_per_layer));
        kv("grid.max_cells", g.max_cells.to_string());
        kv("grid.grading", g.grading.clone());
        kv("grid.stretch", format!("{:?}", g.stretch));
        kv("grid.z_max", format!("{:?}", g.z_max));
        kv("grid.m", g.m.to_string());
        kv("grid.strict_resolution", g.strict_resolution.to_string());
        kv("time.steps", t.steps.to_string());
        kv("time.cfl", format!("{:?}", t.cfl));
        kv("time.outputs", t.outputs.to_string());
        kv("layer.order", l.order.to_string());
        kv("layer.quadrature", l.quadrature.clone());
        kv("analysis.threshold", format!("{:?}", a.threshold));
        kv("analysis.delta", format!("{:?}", a.delta));
        kv("analysis.outer_cells", a.outer_cells.to_string());
        kv("analysis.slope_ev", format!("{:?}", a.slope_ev));
        kv("analysis.slope_eu", format!("{:?}", a.slope_eu));
        kv("analysis.min_r_squared", format!("{:?}", a.min_r_squared));
        kv("analysis.thickness_min", format!("{:?}", a.thickness_min));
        kv("analysis.thickness_max", format!("{:?}", a.thickness_max));
        kv("analysis.slope_boundary", format!("{:?}", a.slope_boundary));
        kv("analysis.interior_ratio", format!("{:?}", a.interior_ratio));
        kv("analysis.gap_fraction", format!("{:?}", a.gap_fraction));
        kv("output.directory", o.directory.clone());
        kv("output.formats", o.formats.join(", "));
        kv("output.trajectories", o.trajectories.to_string());
        s
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn preset(&self) -> Result<InitialPreset> {
        let m = &self.model;
        Ok(match m.preset.as_str() {
            "paper_poly8" => InitialPreset::PaperPoly8,
            "polynomial" => InitialPreset::Polynomial {
                u0: Poly::new(m.u0_coeffs.clone()),
                v0: Poly::new(m.v0_coeffs.clone()),
            },
            "tabulated" => InitialPreset::Tabulated {
                u0: Table::read(&self.resolve(&m.u0_path))?,
                v0: Table::read(&self.resolve(&m.v0_path))?,
            },
            other => return Err(err(0, format!("model.preset: unknown preset '{other}'"))),
        })
    }

    pub fn grading(&self) -> Grading {
        match self.grid.grading.as_str() {
            "tanh" => Grading::Tanh {
                stretch: self.grid.stretch,
            },
            _ => Grading::Uniform,
        }
    }

    pub fn quadrature(&self) -> QuadratureRule {
        match self.layer.quadrature.as_str() {
            "simpson" => QuadratureRule::SIMPSON,
            _ => QuadratureRule::TRAPEZOID,
        }
    }

    pub fn order(&self) -> Order {
        match self.layer.order {
            0 => Order::Zero,
            1 => Order::One,
            _ => Order::Full,
        }
    }

    /// Epsilons sorted strictly decreasing; duplicates dropped.
    pub fn epsilons(&self) -> Vec<f64> {
        let mut e = self.model.epsilon_list.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        e.dedup();
        e
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let a = &self.analysis;
        let plan = SweepPlan {
            epsilons: self.epsilons(),
            v_star: self.model.v_star,
            horizon: self.model.horizon,
            preset: self.preset()?,
            grading: self.grading(),
            cells_per_layer: self.grid.cells_per_layer,
            max_cells: self.grid.max_cells,
            outer_cells: (a.outer_cells > 0).then_some(a.outer_cells),
            z_max: self.grid.z_max,
            m: self.grid.m,
            quadrature: self.quadrature(),
            outputs: self.time.outputs,
            steps: (self.time.steps > 0).then_some(self.time.steps),
            cfl: self.time.cfl,
            order: self.order(),
            threshold: a.threshold,
            delta: a.delta,
            bands: AcceptanceBands {
                slope_ev: a.slope_ev,
                slope_eu: a.slope_eu,
                min_r_squared: a.min_r_squared,
                thickness: (a.thickness_min, a.thickness_max),
                slope_boundary: a.slope_boundary,
                interior_ratio: a.interior_ratio,
                gap_fraction: a.gap_fraction,
            },
        };
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.model.preset, "paper_poly8");
        assert_eq!(c.model.v_star, 1.0);
        assert_eq!(c.model.horizon, 0.25);
        assert_eq!(c.model.epsilon_list.len(), 9);
        assert_eq!(c.model.epsilon_list[0], 2f64.powi(-6));
        assert_eq!(c.model.epsilon_list[8], 2f64.powi(-14));
    }

    #[test]
    fn negative_v_star_is_a_constraint_error() {
        let e = RunConfig::parse("# comment\nmodel.v_star = -1\n").unwrap_err();
        match e {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("v_*"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn z_max_override_is_echoed() {
        let c = RunConfig::parse("grid.z_max = 40").unwrap();
        assert_eq!(c.grid.z_max, 40.0);
        assert!(c.render().contains("grid.z_max = 40.0"));
    }

    #[test]
    fn unknown_key_and_type_errors_carry_lines() {
        for (text, line) in [
            ("\n\ngrid.zmax = 3", 3),
            ("grid.m = many", 1),
            ("time.outputs = 4\ntime.steps = 10", 2),
            ("model.preset = cubic", 1),
            ("no equals sign", 1),
            ("grid.m = 128\ngrid.m = 256", 2),
        ] {
            match RunConfig::parse(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn render_round_trips() {
        let text = "model.epsilon_list = 2^-5, 0.01, 1e-3\nmodel.v_star = 0.3\ngrid.grading = tanh\ngrid.stretch = 2.5\n\
                    output.formats = json\nlayer.order = 1\nanalysis.outer_cells = 512\nmodel.preset = polynomial\n\
                    model.u0_coeffs = 0, 0, 1, -1\nmodel.v0_coeffs = 1";
        let c = RunConfig::parse(text).unwrap();
        let back = RunConfig::parse(&c.render()).unwrap();
        assert_eq!(c, back);
        assert_eq!(RunConfig::parse(&RunConfig::default().render()).unwrap(), RunConfig::default());
    }

    #[test]
    fn power_syntax() {
        let c = RunConfig::parse("model.epsilon_list = 2^-6, 2^-7").unwrap();
        assert_eq!(c.model.epsilon_list, vec![0.015625, 0.0078125]);
    }

    #[test]
    fn plan_from_defaults_matches_paper_plan() {
        let p = RunConfig::default().sweep_plan().unwrap();
        assert_eq!(p, SweepPlan::paper_default());
    }

    #[test]
    fn preset_requirements() {
        assert!(RunConfig::parse("model.preset = polynomial").is_err());
        assert!(RunConfig::parse("model.preset = tabulated\nmodel.u0_path = a.txt").is_err());
    }
}
