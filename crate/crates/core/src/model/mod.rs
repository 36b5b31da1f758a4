//! Domain types shared by every solver: grids, fields, sensitivities,
//! boundary data, initial densities and scenario configuration.

pub mod field;
pub mod grid;
pub mod initial;
pub mod scenario;
pub mod sensitivity;

pub use field::{FieldKind, ScalarField};
pub use grid::{ball_volume, unit_sphere_area, Grid, Grid2D, RadialGrid};
pub use initial::{make_initial_density, InitialDensity, InitialSpec};
pub use scenario::{build_grid, BoundaryData, Cadence, DtControl, GeometrySpec, ScenarioConfig};
pub use sensitivity::{
    validate_radial, validate_tensor, RadialPreset, RadialSensitivity, SamplingBox,
    SensitivityModel, SensitivityReport, TensorPreset, TensorSensitivity,
};
