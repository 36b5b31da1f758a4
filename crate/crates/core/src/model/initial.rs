//! Initial density presets.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::field::ScalarField;
use crate::model::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Constant {
        value: f64,
    },
    /// `background + amplitude · exp(-|x - center|² / (2 width²))`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        center: [f64; 2],
        background: f64,
    },
    /// Gaussian ring of radius `radius` around `center`.
    Annulus {
        amplitude: f64,
        radius: f64,
        width: f64,
        center: [f64; 2],
        background: f64,
    },
    TwoBumps {
        amplitude: f64,
        width: f64,
        centers: [[f64; 2]; 2],
        background: f64,
    },
}

/// Initial density together with the norms that enter the radial bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    pub field: ScalarField,
    pub l1: f64,
    pub linf: f64,
}

fn gauss(dist2: f64, width: f64) -> f64 {
    (-dist2 / (2.0 * width * width)).exp()
}

impl InitialSpec {
    fn numbers(&self) -> Vec<f64> {
        match self {
            InitialSpec::Constant { value } => vec![*value],
            InitialSpec::GaussianBump {
                amplitude,
                width,
                center,
                background,
            } => vec![*amplitude, *width, center[0], center[1], *background],
            InitialSpec::Annulus {
                amplitude,
                radius,
                width,
                center,
                background,
            } => vec![*amplitude, *radius, *width, center[0], center[1], *background],
            InitialSpec::TwoBumps {
                amplitude,
                width,
                centers,
                background,
            } => vec![
                *amplitude,
                *width,
                centers[0][0],
                centers[0][1],
                centers[1][0],
                centers[1][1],
                *background,
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.numbers().iter().any(|v| !v.is_finite()) {
            return Err(Error::config("initial", "non-finite preset parameter"));
        }
        let (amplitude, background, width) = match *self {
            InitialSpec::Constant { value } => (0.0, value, 1.0),
            InitialSpec::GaussianBump {
                amplitude,
                width,
                background,
                ..
            }
            | InitialSpec::TwoBumps {
                amplitude,
                width,
                background,
                ..
            } => (amplitude, background, width),
            InitialSpec::Annulus {
                amplitude,
                width,
                background,
                radius,
                ..
            } => {
                if radius < 0.0 {
                    return Err(Error::config("initial_radius", "must be nonnegative"));
                }
                (amplitude, background, width)
            }
        };
        if amplitude < 0.0 {
            return Err(Error::config("initial_amplitude", "would produce negative density"));
        }
        if background < 0.0 {
            return Err(Error::config(
                if matches!(self, InitialSpec::Constant { .. }) {
                    "initial_value"
                } else {
                    "initial_background"
                },
                "would produce negative density",
            ));
        }
        if width <= 0.0 {
            return Err(Error::config("initial_width", "must be positive"));
        }
        Ok(())
    }

    /// Pointwise value at `x` (2D) or at radius `x[0]` (radial, centered at 0).
    pub fn value_2d(&self, x: [f64; 2]) -> f64 {
        let d2 = |c: [f64; 2]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        match *self {
            InitialSpec::Constant { value } => value,
            InitialSpec::GaussianBump {
                amplitude,
                width,
                center,
                background,
            } => background + amplitude * gauss(d2(center), width),
            InitialSpec::Annulus {
                amplitude,
                radius,
                width,
                center,
                background,
            } => {
                let rho = d2(center).sqrt();
                background + amplitude * gauss((rho - radius).powi(2), width)
            }
            InitialSpec::TwoBumps {
                amplitude,
                width,
                centers,
                background,
            } => {
                background
                    + amplitude * (gauss(d2(centers[0]), width) + gauss(d2(centers[1]), width))
            }
        }
    }

    pub fn value_radial(&self, r: f64) -> Result<f64> {
        match *self {
            InitialSpec::TwoBumps { .. } => Err(Error::config(
                "initial",
                "two-bumps is not radially symmetric",
            )),
            InitialSpec::GaussianBump {
                amplitude,
                width,
                background,
                ..
            } => Ok(background + amplitude * gauss(r * r, width)),
            InitialSpec::Annulus {
                amplitude,
                radius,
                width,
                background,
                ..
            } => Ok(background + amplitude * gauss((r - radius).powi(2), width)),
            InitialSpec::Constant { value } => Ok(value),
        }
    }

    /// Mass of a Gaussian bump over all of `R^d` (ignoring the background).
    pub fn gaussian_full_space_mass(amplitude: f64, width: f64, dim: usize) -> f64 {
        amplitude * (2.0 * PI * width * width).powf(dim as f64 / 2.0)
    }
}

/// Samples the preset at cell centers and attaches its L¹ and L∞ norms.
pub fn make_initial_density(spec: &InitialSpec, grid: &Grid) -> Result<InitialDensity> {
    spec.validate()?;
    let values: Vec<f64> = match grid {
        Grid::Rect(g) => {
            let mut v = Vec::with_capacity(g.len());
            for j in 0..g.ny {
                for i in 0..g.nx {
                    v.push(spec.value_2d(g.center(i, j)));
                }
            }
            v
        }
        Grid::Radial(g) => g
            .centers()
            .iter()
            .map(|&r| spec.value_radial(r))
            .collect::<Result<_>>()?,
    };
    if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::config(
            "initial",
            format!("preset yields invalid value {} in cell {k}", values[k]),
        ));
    }
    let l1 = values
        .iter()
        .enumerate()
        .map(|(k, v)| v * grid.cell_measure(k))
        .sum();
    let linf = values.iter().copied().fold(0.0, f64::max);
    Ok(InitialDensity {
        field: ScalarField::density(values),
        l1,
        linf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::{Grid2D, RadialGrid};

    fn unit_rect(n: usize) -> Grid {
        Grid2D::new(1.0, 1.0, n, n).unwrap().into()
    }

    #[test]
    fn constant_masses() {
        let d = make_initial_density(&InitialSpec::Constant { value: 1.0 }, &unit_rect(16)).unwrap();
        assert!((d.l1 - 1.0).abs() < 1e-14);
        let disk: Grid = RadialGrid::new(2, 1.0, 64).unwrap().into();
        let d = make_initial_density(&InitialSpec::Constant { value: 1.0 }, &disk).unwrap();
        assert!((d.l1 - PI).abs() < 1e-3);
    }

    #[test]
    fn gaussian_stays_in_range() {
        let spec = InitialSpec::GaussianBump {
            amplitude: 5.0,
            width: 0.1,
            center: [0.5, 0.5],
            background: 0.0,
        };
        let d = make_initial_density(&spec, &unit_rect(64)).unwrap();
        assert!(d.field.min() >= 0.0);
        assert!(d.field.max() <= 5.0);
        assert_eq!(d.linf, d.field.max());
    }

    #[test]
    fn quadrature_mass_matches_analytic_at_64() {
        let spec = InitialSpec::GaussianBump {
            amplitude: 3.0,
            width: 0.08,
            center: [0.5, 0.5],
            background: 0.0,
        };
        let d = make_initial_density(&spec, &unit_rect(64)).unwrap();
        let exact = InitialSpec::gaussian_full_space_mass(3.0, 0.08, 2);
        assert!(((d.l1 - exact) / exact).abs() <= 1e-3);
    }

    #[test]
    fn rejects_negative_and_non_finite_presets() {
        let g = unit_rect(8);
        assert!(make_initial_density(&InitialSpec::Constant { value: -1.0 }, &g).is_err());
        let nan = InitialSpec::GaussianBump {
            amplitude: f64::NAN,
            width: 0.1,
            center: [0.5, 0.5],
            background: 0.0,
        };
        assert!(make_initial_density(&nan, &g).is_err());
        let neg = InitialSpec::Annulus {
            amplitude: -2.0,
            radius: 0.3,
            width: 0.1,
            center: [0.5, 0.5],
            background: 0.0,
        };
        assert!(make_initial_density(&neg, &g).is_err());
    }

    #[test]
    fn two_bumps_is_not_radial() {
        let spec = InitialSpec::TwoBumps {
            amplitude: 1.0,
            width: 0.1,
            centers: [[0.2, 0.2], [0.7, 0.7]],
            background: 0.0,
        };
        let disk: Grid = RadialGrid::new(2, 1.0, 16).unwrap().into();
        assert!(make_initial_density(&spec, &disk).is_err());
    }
}
