//! Shipped scenarios: five tensor-sensitivity runs on the unit square and
//! four radial runs on the unit ball.

use std::f64::consts::FRAC_PI_4;

use crate::model::initial::InitialSpec;
use crate::model::scenario::{GeometrySpec, ScenarioConfig};
use crate::model::sensitivity::{RadialPreset, SensitivityModel, TensorPreset};

fn square(n: usize) -> GeometrySpec {
    GeometrySpec::Rect2d {
        lx: 1.0,
        ly: 1.0,
        nx: n,
        ny: n,
    }
}

/// The standard 2D runs: 64×64 unit square, `T = 1`.
pub fn standard_2d() -> Vec<ScenarioConfig> {
    let tensor = SensitivityModel::Tensor;
    let mut out = vec![
        ScenarioConfig::new(
            "identity-bump",
            square(64),
            tensor(TensorPreset::Identity),
            InitialSpec::GaussianBump {
                amplitude: 5.0,
                width: 0.1,
                center: [0.5, 0.5],
                background: 0.1,
            },
        ),
        ScenarioConfig::new(
            "signal-scaled-annulus",
            square(64),
            tensor(TensorPreset::SignalScaled),
            InitialSpec::Annulus {
                amplitude: 3.0,
                radius: 0.25,
                width: 0.06,
                center: [0.5, 0.5],
                background: 0.05,
            },
        ),
        ScenarioConfig::new(
            "rotation-two-bumps",
            square(64),
            tensor(TensorPreset::Rotation { theta: FRAC_PI_4 }),
            InitialSpec::TwoBumps {
                amplitude: 4.0,
                width: 0.08,
                centers: [[0.3, 0.3], [0.7, 0.65]],
                background: 0.05,
            },
        ),
        ScenarioConfig::new(
            "modulated-off-center",
            square(64),
            tensor(TensorPreset::Modulated),
            InitialSpec::GaussianBump {
                amplitude: 6.0,
                width: 0.08,
                center: [0.3, 0.6],
                background: 0.0,
            },
        ),
        ScenarioConfig::new(
            "identity-corner",
            square(64),
            tensor(TensorPreset::Identity),
            InitialSpec::GaussianBump {
                amplitude: 8.0,
                width: 0.07,
                center: [0.15, 0.15],
                background: 0.02,
            },
        ),
    ];
    out[3].boundary.g_variation = 0.5;
    out[4].boundary.gamma = 2.0;
    out[4].boundary.g = 3.0;
    out
}

fn ball(dim: usize) -> GeometrySpec {
    GeometrySpec::Radial {
        dim,
        radius: 1.0,
        nr: 128,
    }
}

/// The radial runs: `nr = 128`, `R = 1`, `T = 2`.
pub fn radial() -> Vec<ScenarioConfig> {
    let chi = SensitivityModel::Radial;
    let mut out = vec![
        ScenarioConfig::new(
            "ball2-constant-annulus",
            ball(2),
            chi(RadialPreset::Constant(1.0)),
            InitialSpec::Annulus {
                amplitude: 2.0,
                radius: 0.5,
                width: 0.1,
                center: [0.0, 0.0],
                background: 0.1,
            },
        ),
        ScenarioConfig::new(
            "ball3-linear-bump",
            ball(3),
            chi(RadialPreset::Linear),
            InitialSpec::GaussianBump {
                amplitude: 3.0,
                width: 0.2,
                center: [0.0, 0.0],
                background: 0.2,
            },
        ),
        ScenarioConfig::new(
            "ball3-inverse-bump",
            ball(3),
            chi(RadialPreset::Inverse),
            InitialSpec::GaussianBump {
                amplitude: 2.0,
                width: 0.25,
                center: [0.0, 0.0],
                background: 0.1,
            },
        ),
        ScenarioConfig::new(
            "ball2-saturating-annulus",
            ball(2),
            chi(RadialPreset::Saturating),
            InitialSpec::Annulus {
                amplitude: 3.0,
                radius: 0.6,
                width: 0.08,
                center: [0.0, 0.0],
                background: 0.05,
            },
        ),
    ];
    for s in &mut out {
        s.t_end = 2.0;
    }
    out
}

/// Every shipped scenario, standard runs first.
pub fn all() -> Vec<ScenarioConfig> {
    let mut v = standard_2d();
    v.extend(radial());
    v
}

/// Looks up a shipped scenario by id.
pub fn by_id(id: &str) -> Option<ScenarioConfig> {
    all().into_iter().find(|s| s.id == id)
}
