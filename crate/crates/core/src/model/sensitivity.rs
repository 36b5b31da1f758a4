//! Chemotactic sensitivities: tensor-valued `S(x, n, c)` on the rectangle and
//! scalar `χ(r, n, c)` for the radial problem, each paired with the bound
//! function that dominates `|S| + |∂_n S|`.
//!
//! Matrix sizes are measured with the Frobenius norm throughout.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

pub fn frobenius(m: &Mat2) -> f64 {
    (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
}

#[inline]
pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Tensor sensitivity on a two-dimensional domain.
pub trait TensorSensitivity: Send + Sync {
    fn eval(&self, x: [f64; 2], n: f64, c: f64) -> Mat2;
    /// `S₀(s)`, dominating `|S(x,r,s)| + |∂_r S(x,r,s)|`.
    fn bound(&self, s: f64) -> f64;
}

/// Scalar sensitivity of the radial problem; depends on `x` only through `|x|`.
pub trait RadialSensitivity: Send + Sync {
    fn eval(&self, r: f64, n: f64, c: f64) -> f64;
    /// `χ₀(s)`, dominating `χ(r,n,s) + |∂_n χ(r,n,s)|`.
    fn bound(&self, s: f64) -> f64;
    /// Whether `χ` blows up as `c → 0`.
    fn singular_at_zero(&self) -> bool {
        false
    }
}

/// Shipped tensor sensitivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TensorPreset {
    /// `S ≡ 0`: pure diffusion.
    Zero,
    /// `S = I`.
    Identity,
    /// `S = c I`.
    SignalScaled,
    /// `S = c Rot(θ)`.
    Rotation { theta: f64 },
    /// `S = (1 + ½ sin(2π x₁)) I`.
    Modulated,
}

impl TensorSensitivity for TensorPreset {
    fn eval(&self, x: [f64; 2], _n: f64, c: f64) -> Mat2 {
        match *self {
            TensorPreset::Zero => [[0.0; 2]; 2],
            TensorPreset::Identity => [[1.0, 0.0], [0.0, 1.0]],
            TensorPreset::SignalScaled => [[c, 0.0], [0.0, c]],
            TensorPreset::Rotation { theta } => {
                let (s, co) = theta.sin_cos();
                [[c * co, -c * s], [c * s, c * co]]
            }
            TensorPreset::Modulated => {
                let a = 1.0 + 0.5 * (2.0 * PI * x[0]).sin();
                [[a, 0.0], [0.0, a]]
            }
        }
    }

    fn bound(&self, s: f64) -> f64 {
        match *self {
            TensorPreset::Zero => 0.0,
            TensorPreset::Identity => SQRT_2,
            TensorPreset::SignalScaled => SQRT_2 * s.abs(),
            // |Rot(θ)|_F = √2 ≤ 2
            TensorPreset::Rotation { .. } => 2.0 * s.abs(),
            TensorPreset::Modulated => 1.5 * SQRT_2,
        }
    }
}

impl fmt::Display for TensorPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorPreset::Zero => write!(f, "zero"),
            TensorPreset::Identity => write!(f, "identity"),
            TensorPreset::SignalScaled => write!(f, "signal-scaled"),
            TensorPreset::Rotation { .. } => write!(f, "rotation"),
            TensorPreset::Modulated => write!(f, "modulated"),
        }
    }
}

/// Shipped radial sensitivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialPreset {
    /// `χ ≡ k`, `k ≥ 0`.
    Constant(f64),
    /// `χ = c`.
    Linear,
    /// `χ = 1/c`, singular at `c = 0`.
    Inverse,
    /// `χ = 1/(1+n)`, the density-dependent preset.
    Saturating,
}

impl RadialSensitivity for RadialPreset {
    fn eval(&self, _r: f64, n: f64, c: f64) -> f64 {
        match *self {
            RadialPreset::Constant(k) => k,
            RadialPreset::Linear => c,
            RadialPreset::Inverse => 1.0 / c,
            RadialPreset::Saturating => 1.0 / (1.0 + n),
        }
    }

    fn bound(&self, s: f64) -> f64 {
        match *self {
            RadialPreset::Constant(k) => k,
            RadialPreset::Linear => s,
            RadialPreset::Inverse => 1.0 / s,
            // 1/(1+n) + 1/(1+n)² ≤ 2 for n ≥ 0
            RadialPreset::Saturating => 2.0,
        }
    }

    fn singular_at_zero(&self) -> bool {
        matches!(self, RadialPreset::Inverse)
    }
}

impl fmt::Display for RadialPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialPreset::Constant(_) => write!(f, "radial-constant"),
            RadialPreset::Linear => write!(f, "radial-linear"),
            RadialPreset::Inverse => write!(f, "radial-inverse"),
            RadialPreset::Saturating => write!(f, "radial-saturating"),
        }
    }
}

/// Either kind of sensitivity, as selected by a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensitivityModel {
    Tensor(TensorPreset),
    Radial(RadialPreset),
}

/// Box from which `validate_*` draws samples `(x, r, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox {
    /// Upper corner of the spatial box; the lower corner is the origin.
    /// For radial models only `extent[0]` (the radius) is used.
    pub extent: [f64; 2],
    pub r_max: f64,
    pub s_min: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub samples: usize,
    /// `min over samples of S₀(s) - (|S| + |∂_r S|)`.
    pub worst_margin: f64,
    /// Sample `(x₁, x₂, r, s)` at which the worst margin occurred.
    pub worst_point: [f64; 4],
    pub violated: bool,
    /// For radial models: whether some sample had `χ < 0`.
    pub negative_chi: bool,
}

fn fd_step(r: f64) -> f64 {
    1e-4 * (1.0 + r)
}

/// Central difference in the density argument, forward where `r` is too
/// close to zero to step backwards.
fn density_derivative(f: impl Fn(f64) -> f64, r: f64) -> f64 {
    let h = fd_step(r);
    if r >= h {
        (f(r + h) - f(r - h)) / (2.0 * h)
    } else {
        (f(r + h) - f(r)) / h
    }
}

fn tolerance(bound: f64) -> f64 {
    1e-6 + 1e-2 * bound.abs()
}

fn check_box(b: &SamplingBox) -> Result<()> {
    let ok = b.extent.iter().all(|e| e.is_finite() && *e >= 0.0)
        && b.r_max.is_finite()
        && b.r_max >= 0.0
        && b.s_min.is_finite()
        && b.s_max.is_finite()
        && b.s_min <= b.s_max;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("bad sampling box {b:?}")))
    }
}

/// Samples `|S| + |∂_r S| ≤ S₀(s)` on random points of the box.
pub fn validate_tensor(
    model: &dyn TensorSensitivity,
    sampling: &SamplingBox,
    samples: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    check_box(sampling)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SensitivityReport {
        samples,
        worst_margin: f64::INFINITY,
        worst_point: [0.0; 4],
        violated: false,
        negative_chi: false,
    };
    for _ in 0..samples {
        let x = [
            rng.gen::<f64>() * sampling.extent[0],
            rng.gen::<f64>() * sampling.extent[1],
        ];
        let r = rng.gen::<f64>() * sampling.r_max;
        let s = sampling.s_min + rng.gen::<f64>() * (sampling.s_max - sampling.s_min);

        let value = model.eval(x, r, s);
        let h = fd_step(r);
        let (hi, lo, span) = if r >= h {
            (model.eval(x, r + h, s), model.eval(x, r - h, s), 2.0 * h)
        } else {
            (model.eval(x, r + h, s), value, h)
        };
        let mut deriv = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                deriv[a][b] = (hi[a][b] - lo[a][b]) / span;
            }
        }
        let lhs = frobenius(&value) + frobenius(&deriv);
        let bound = model.bound(s);
        if !lhs.is_finite() || !bound.is_finite() {
            return Err(Error::NonFinite(format!(
                "sensitivity at x={x:?}, n={r}, c={s}"
            )));
        }
        let margin = bound - lhs;
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_point = [x[0], x[1], r, s];
        }
        if margin < -tolerance(bound) {
            report.violated = true;
        }
    }
    Ok(report)
}

/// Samples `χ ≥ 0` and `χ + |∂_r χ| ≤ χ₀(s)`.
pub fn validate_radial(
    model: &dyn RadialSensitivity,
    sampling: &SamplingBox,
    samples: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    check_box(sampling)?;
    if model.singular_at_zero() && sampling.s_min <= 0.0 {
        return Err(Error::InvalidInput(
            "singular sensitivity needs a positive lower signal bound".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SensitivityReport {
        samples,
        worst_margin: f64::INFINITY,
        worst_point: [0.0; 4],
        violated: false,
        negative_chi: false,
    };
    for _ in 0..samples {
        let radius = rng.gen::<f64>() * sampling.extent[0];
        let r = rng.gen::<f64>() * sampling.r_max;
        let s = sampling.s_min + rng.gen::<f64>() * (sampling.s_max - sampling.s_min);
        let value = model.eval(radius, r, s);
        let deriv = density_derivative(|m| model.eval(radius, m, s), r);
        let bound = model.bound(s);
        if !value.is_finite() || !deriv.is_finite() || !bound.is_finite() {
            return Err(Error::NonFinite(format!(
                "sensitivity at |x|={radius}, n={r}, c={s}"
            )));
        }
        if value < 0.0 {
            report.negative_chi = true;
            report.violated = true;
        }
        let margin = bound - (value + deriv.abs());
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_point = [radius, 0.0, r, s];
        }
        if margin < -tolerance(bound) {
            report.violated = true;
        }
    }
    Ok(report)
}
