//! Declarative scenario description and its flat `key = value` text format.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown keys, duplicate keys and keys that do not apply to the chosen
//! geometry are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::grid::{Grid, Grid2D, RadialGrid};
use crate::model::initial::InitialSpec;
use crate::model::sensitivity::{RadialPreset, SensitivityModel, TensorPreset};

/// Robin data `∇c·ν = (γ - c) g` on ∂Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub gamma: f64,
    /// Mean level of `g`.
    pub g: f64,
    /// Relative modulation; on the rectangle
    /// `g(x) = g · (1 + variation · cos(2π x₁/Lx) cos(2π x₂/Ly))`.
    /// Radial problems require `variation = 0`.
    pub g_variation: f64,
}

impl BoundaryData {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            g: 1.0,
            g_variation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::config("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::config("g", format!("must be positive, got {}", self.g)));
        }
        if !(self.g_variation.is_finite() && self.g_variation.abs() < 1.0) {
            return Err(Error::config(
                "g_variation",
                format!("|variation| must be below 1, got {}", self.g_variation),
            ));
        }
        Ok(())
    }

    /// `g` at a boundary point of the rectangle `(0,lx) x (0,ly)`.
    #[inline]
    pub fn g_at(&self, x: [f64; 2], lx: f64, ly: f64) -> f64 {
        if self.g_variation == 0.0 {
            return self.g;
        }
        self.g * (1.0 + self.g_variation * (2.0 * PI * x[0] / lx).cos() * (2.0 * PI * x[1] / ly).cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeometrySpec {
    Rect2d { lx: f64, ly: f64, nx: usize, ny: usize },
    Radial { dim: usize, radius: f64, nr: usize },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Grid> {
        build_grid(self)
    }
}

/// Builds the grid described by `spec`. Deterministic.
pub fn build_grid(spec: &GeometrySpec) -> Result<Grid> {
    match *spec {
        GeometrySpec::Rect2d { lx, ly, nx, ny } => Ok(Grid2D::new(lx, ly, nx, ny)?.into()),
        GeometrySpec::Radial { dim, radius, nr } => Ok(RadialGrid::new(dim, radius, nr)?.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtControl {
    Fixed(f64),
    Cfl { safety: f64 },
}

/// When to record diagnostics and snapshots: after `steps` steps or `time`
/// time units since the previous record, whichever comes first. Zero
/// disables a criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cadence {
    pub steps: usize,
    pub time: f64,
}

impl Default for Cadence {
    fn default() -> Self {
        Self {
            steps: 50,
            time: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub geometry: GeometrySpec,
    pub boundary: BoundaryData,
    pub sensitivity: SensitivityModel,
    pub initial: InitialSpec,
    pub t_end: f64,
    pub dt_control: DtControl,
    pub elliptic_tolerance: f64,
    pub elliptic_max_iterations: usize,
    pub cadence: Cadence,
    pub blowup_threshold: f64,
    pub output_dir: Option<PathBuf>,
    /// Ball radius for the localized diagnostics recorded every record.
    pub local_delta: f64,
    /// `ε / γ` for the localized smallness certificate.
    pub certificate_epsilon: f64,
}

impl ScenarioConfig {
    /// A scenario with default numerics for the given geometry, sensitivity
    /// and initial density.
    pub fn new(
        id: impl Into<String>,
        geometry: GeometrySpec,
        sensitivity: SensitivityModel,
        initial: InitialSpec,
    ) -> Self {
        Self {
            id: id.into(),
            geometry,
            boundary: BoundaryData::new(1.0),
            sensitivity,
            initial,
            t_end: 1.0,
            dt_control: DtControl::Cfl { safety: 0.9 },
            elliptic_tolerance: 1e-8,
            elliptic_max_iterations: 20_000,
            cadence: Cadence::default(),
            blowup_threshold: 1e6,
            output_dir: None,
            local_delta: 0.1,
            certificate_epsilon: 0.1,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.geometry, GeometrySpec::Radial { .. })
    }

    /// Checks every invariant that does not need the initial field.
    pub fn validate(&self) -> Result<()> {
        build_grid(&self.geometry)?;
        self.boundary.validate()?;
        self.initial.validate()?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config("t_end", format!("must be positive, got {}", self.t_end)));
        }
        match self.dt_control {
            DtControl::Fixed(dt) if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::config("dt", format!("must be positive, got {dt}")));
            }
            DtControl::Cfl { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return Err(Error::config("cfl_safety", format!("must lie in (0, 1], got {safety}")));
            }
            _ => {}
        }
        if !(self.elliptic_tolerance > 0.0 && self.elliptic_tolerance <= 1e-4) {
            return Err(Error::config(
                "elliptic_tolerance",
                format!("must lie in (0, 1e-4], got {}", self.elliptic_tolerance),
            ));
        }
        if self.elliptic_max_iterations == 0 {
            return Err(Error::config("elliptic_max_iterations", "must be positive"));
        }
        if !(self.cadence.time >= 0.0 && self.cadence.time.is_finite()) {
            return Err(Error::config("record_every_time", "must be nonnegative"));
        }
        if self.cadence.steps == 0 && self.cadence.time == 0.0 {
            return Err(Error::config("record_every_steps", "at least one record criterion must be enabled"));
        }
        if !(self.blowup_threshold.is_finite() && self.blowup_threshold > 0.0) {
            return Err(Error::config("blowup_threshold", "must be positive"));
        }
        if !(self.local_delta.is_finite() && self.local_delta > 0.0) {
            return Err(Error::config("local_delta", "must be positive"));
        }
        if !(self.certificate_epsilon.is_finite() && self.certificate_epsilon > 0.0) {
            return Err(Error::config("certificate_epsilon", "must be positive"));
        }
        match (self.geometry, self.sensitivity) {
            (GeometrySpec::Rect2d { .. }, SensitivityModel::Radial(_)) => {
                return Err(Error::config("sensitivity", "radial sensitivity on a rectangular geometry"));
            }
            (GeometrySpec::Radial { .. }, SensitivityModel::Tensor(_)) => {
                return Err(Error::config("sensitivity", "tensor sensitivity on a radial geometry"));
            }
            _ => {}
        }
        if self.is_radial() {
            if self.boundary.g_variation != 0.0 {
                return Err(Error::config("g_variation", "radial problems need constant g"));
            }
            if matches!(self.initial, InitialSpec::TwoBumps { .. }) {
                return Err(Error::config("initial", "two-bumps is not radially symmetric"));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_pairs(text)?;
        Self::from_pairs(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Overrides one key, as used by parameter sweeps.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut map = parse_pairs(&self.to_text())?;
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        map.insert(key.to_string(), value.to_string());
        Self::from_pairs(map)
    }

    fn from_pairs(map: BTreeMap<String, String>) -> Result<Self> {
        let mut r = Reader { map };
        let geometry = match r.take("geometry")?.as_deref() {
            Some("rect2d") => GeometrySpec::Rect2d {
                lx: r.f64_or("lx", 1.0)?,
                ly: r.f64_or("ly", 1.0)?,
                nx: r.usize_required("nx")?,
                ny: r.usize_required("ny")?,
            },
            Some("radial") => GeometrySpec::Radial {
                dim: r.usize_required("dim")?,
                radius: r.f64_or("radius", 1.0)?,
                nr: r.usize_required("nr")?,
            },
            Some(other) => {
                return Err(Error::config("geometry", format!("expected rect2d or radial, got `{other}`")))
            }
            None => return Err(Error::config("geometry", "missing")),
        };
        let radial = matches!(geometry, GeometrySpec::Radial { .. });
        let boundary = BoundaryData {
            gamma: r.f64_or("gamma", 1.0)?,
            g: r.f64_or("g", 1.0)?,
            g_variation: r.f64_or("g_variation", 0.0)?,
        };
        let sens_name = r.take("sensitivity")?.unwrap_or_else(|| {
            if radial { "radial-constant" } else { "identity" }.to_string()
        });
        let sensitivity = match sens_name.as_str() {
            "zero" => SensitivityModel::Tensor(TensorPreset::Zero),
            "identity" => SensitivityModel::Tensor(TensorPreset::Identity),
            "signal-scaled" => SensitivityModel::Tensor(TensorPreset::SignalScaled),
            "rotation" => SensitivityModel::Tensor(TensorPreset::Rotation {
                theta: r.f64_or("sensitivity_theta", PI / 4.0)?,
            }),
            "modulated" => SensitivityModel::Tensor(TensorPreset::Modulated),
            "radial-constant" => {
                let k = r.f64_or("sensitivity_strength", 1.0)?;
                if !(k.is_finite() && k >= 0.0) {
                    return Err(Error::config("sensitivity_strength", "must be nonnegative"));
                }
                SensitivityModel::Radial(RadialPreset::Constant(k))
            }
            "radial-linear" => SensitivityModel::Radial(RadialPreset::Linear),
            "radial-inverse" => SensitivityModel::Radial(RadialPreset::Inverse),
            "radial-saturating" => SensitivityModel::Radial(RadialPreset::Saturating),
            other => return Err(Error::config("sensitivity", format!("unknown preset `{other}`"))),
        };
        let default_center = if radial { 0.0 } else { 0.5 };
        let initial_name = r.take("initial")?.unwrap_or_else(|| "constant".into());
        let initial = match initial_name.as_str() {
            "constant" => InitialSpec::Constant {
                value: r.f64_or("initial_value", 1.0)?,
            },
            "gaussian-bump" => InitialSpec::GaussianBump {
                amplitude: r.f64_or("initial_amplitude", 1.0)?,
                width: r.f64_or("initial_width", 0.1)?,
                center: [
                    r.f64_or("initial_center_x", default_center)?,
                    r.f64_or("initial_center_y", default_center)?,
                ],
                background: r.f64_or("initial_background", 0.0)?,
            },
            "annulus" => InitialSpec::Annulus {
                amplitude: r.f64_or("initial_amplitude", 1.0)?,
                radius: r.f64_or("initial_radius", 0.3)?,
                width: r.f64_or("initial_width", 0.1)?,
                center: [
                    r.f64_or("initial_center_x", default_center)?,
                    r.f64_or("initial_center_y", default_center)?,
                ],
                background: r.f64_or("initial_background", 0.0)?,
            },
            "two-bumps" => InitialSpec::TwoBumps {
                amplitude: r.f64_or("initial_amplitude", 1.0)?,
                width: r.f64_or("initial_width", 0.1)?,
                centers: [
                    [
                        r.f64_or("initial_center_x", 0.3)?,
                        r.f64_or("initial_center_y", 0.3)?,
                    ],
                    [
                        r.f64_or("initial_center2_x", 0.7)?,
                        r.f64_or("initial_center2_y", 0.7)?,
                    ],
                ],
                background: r.f64_or("initial_background", 0.0)?,
            },
            other => return Err(Error::config("initial", format!("unknown preset `{other}`"))),
        };
        let dt_control = match r.take("dt_mode")?.as_deref() {
            None | Some("cfl") => DtControl::Cfl {
                safety: r.f64_or("cfl_safety", 0.9)?,
            },
            Some("fixed") => DtControl::Fixed(
                r.f64_required("dt")?,
            ),
            Some(other) => return Err(Error::config("dt_mode", format!("expected cfl or fixed, got `{other}`"))),
        };
        let mut cfg = ScenarioConfig {
            id: r.take("id")?.unwrap_or_else(|| "scenario".into()),
            geometry,
            boundary,
            sensitivity,
            initial,
            t_end: r.f64_or("t_end", 1.0)?,
            dt_control,
            elliptic_tolerance: r.f64_or("elliptic_tolerance", 1e-8)?,
            elliptic_max_iterations: r.usize_or("elliptic_max_iterations", 20_000)?,
            cadence: Cadence {
                steps: r.usize_or("record_every_steps", 50)?,
                time: r.f64_or("record_every_time", 0.01)?,
            },
            blowup_threshold: r.f64_or("blowup_threshold", 1e6)?,
            output_dir: r.take("output_dir")?.map(PathBuf::from),
            local_delta: r.f64_or("local_delta", 0.1)?,
            certificate_epsilon: r.f64_or("certificate_epsilon", 0.1)?,
        };
        if let Some(key) = r.map.keys().next() {
            let reason = if KNOWN_KEYS.contains(&key.as_str()) {
                "does not apply to this scenario"
            } else {
                "unknown key"
            };
            return Err(Error::config(key.clone(), reason));
        }
        if cfg.id.is_empty() {
            cfg.id = "scenario".into();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("id", self.id.clone());
        match self.geometry {
            GeometrySpec::Rect2d { lx, ly, nx, ny } => {
                kv("geometry", "rect2d".into());
                kv("lx", fmt_f64(lx));
                kv("ly", fmt_f64(ly));
                kv("nx", nx.to_string());
                kv("ny", ny.to_string());
            }
            GeometrySpec::Radial { dim, radius, nr } => {
                kv("geometry", "radial".into());
                kv("dim", dim.to_string());
                kv("radius", fmt_f64(radius));
                kv("nr", nr.to_string());
            }
        }
        kv("gamma", fmt_f64(self.boundary.gamma));
        kv("g", fmt_f64(self.boundary.g));
        kv("g_variation", fmt_f64(self.boundary.g_variation));
        match self.sensitivity {
            SensitivityModel::Tensor(TensorPreset::Rotation { theta }) => {
                kv("sensitivity", "rotation".into());
                kv("sensitivity_theta", fmt_f64(theta));
            }
            SensitivityModel::Tensor(t) => kv("sensitivity", t.to_string()),
            SensitivityModel::Radial(RadialPreset::Constant(k)) => {
                kv("sensitivity", "radial-constant".into());
                kv("sensitivity_strength", fmt_f64(k));
            }
            SensitivityModel::Radial(p) => kv("sensitivity", p.to_string()),
        }
        match self.initial {
            InitialSpec::Constant { value } => {
                kv("initial", "constant".into());
                kv("initial_value", fmt_f64(value));
            }
            InitialSpec::GaussianBump {
                amplitude,
                width,
                center,
                background,
            } => {
                kv("initial", "gaussian-bump".into());
                kv("initial_amplitude", fmt_f64(amplitude));
                kv("initial_width", fmt_f64(width));
                kv("initial_center_x", fmt_f64(center[0]));
                kv("initial_center_y", fmt_f64(center[1]));
                kv("initial_background", fmt_f64(background));
            }
            InitialSpec::Annulus {
                amplitude,
                radius,
                width,
                center,
                background,
            } => {
                kv("initial", "annulus".into());
                kv("initial_amplitude", fmt_f64(amplitude));
                kv("initial_radius", fmt_f64(radius));
                kv("initial_width", fmt_f64(width));
                kv("initial_center_x", fmt_f64(center[0]));
                kv("initial_center_y", fmt_f64(center[1]));
                kv("initial_background", fmt_f64(background));
            }
            InitialSpec::TwoBumps {
                amplitude,
                width,
                centers,
                background,
            } => {
                kv("initial", "two-bumps".into());
                kv("initial_amplitude", fmt_f64(amplitude));
                kv("initial_width", fmt_f64(width));
                kv("initial_center_x", fmt_f64(centers[0][0]));
                kv("initial_center_y", fmt_f64(centers[0][1]));
                kv("initial_center2_x", fmt_f64(centers[1][0]));
                kv("initial_center2_y", fmt_f64(centers[1][1]));
                kv("initial_background", fmt_f64(background));
            }
        }
        kv("t_end", fmt_f64(self.t_end));
        match self.dt_control {
            DtControl::Fixed(dt) => {
                kv("dt_mode", "fixed".into());
                kv("dt", fmt_f64(dt));
            }
            DtControl::Cfl { safety } => {
                kv("dt_mode", "cfl".into());
                kv("cfl_safety", fmt_f64(safety));
            }
        }
        kv("elliptic_tolerance", fmt_f64(self.elliptic_tolerance));
        kv("elliptic_max_iterations", self.elliptic_max_iterations.to_string());
        kv("record_every_steps", self.cadence.steps.to_string());
        kv("record_every_time", fmt_f64(self.cadence.time));
        kv("blowup_threshold", fmt_f64(self.blowup_threshold));
        if let Some(dir) = &self.output_dir {
            kv("output_dir", dir.display().to_string());
        }
        kv("local_delta", fmt_f64(self.local_delta));
        kv("certificate_epsilon", fmt_f64(self.certificate_epsilon));
        out
    }
}

/// Every key the scenario format understands.
pub const KNOWN_KEYS: &[&str] = &[
    "id",
    "geometry",
    "lx",
    "ly",
    "nx",
    "ny",
    "dim",
    "radius",
    "nr",
    "gamma",
    "g",
    "g_variation",
    "sensitivity",
    "sensitivity_theta",
    "sensitivity_strength",
    "initial",
    "initial_value",
    "initial_amplitude",
    "initial_width",
    "initial_radius",
    "initial_center_x",
    "initial_center_y",
    "initial_center2_x",
    "initial_center2_y",
    "initial_background",
    "t_end",
    "dt_mode",
    "dt",
    "cfl_safety",
    "elliptic_tolerance",
    "elliptic_max_iterations",
    "record_every_steps",
    "record_every_time",
    "blowup_threshold",
    "output_dir",
    "local_delta",
    "certificate_epsilon",
];

/// Shortest representation that parses back to the same bits.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            return Err(Error::config(k, "unknown key"));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::config(k, "duplicate key"));
        }
    }
    Ok(map)
}

struct Reader {
    map: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.map.remove(key))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, &v),
        }
    }

    fn f64_required(&mut self, key: &str) -> Result<f64> {
        match self.map.remove(key) {
            None => Err(Error::config(key, "missing")),
            Some(v) => parse_f64(key, &v),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.map.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`"))),
        }
    }

    fn usize_required(&mut self, key: &str) -> Result<usize> {
        match self.map.remove(key) {
            None => Err(Error::config(key, "missing")),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("expected a nonnegative integer, got `{v}`"))),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::config(key, format!("expected a number, got `{v}`")))?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("expected a finite number, got `{v}`")));
    }
    Ok(x)
}
