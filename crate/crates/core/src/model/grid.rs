//! Structured cell-centered grids: a rectangle in two dimensions and a
//! radial grid on a ball of arbitrary dimension.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MIN_RECT_CELLS: usize = 4;
pub const MIN_RADIAL_CELLS: usize = 8;

/// Surface area of the unit sphere in `R^d` (σ₂ = 2π, σ₃ = 4π).
pub fn unit_sphere_area(dim: usize) -> f64 {
    assert!(dim >= 1, "dimension must be positive");
    // σ_1 = 2, σ_2 = 2π, σ_{d+2} = 2π σ_d / d
    let (mut sigma, mut d) = if dim % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while d < dim {
        sigma *= 2.0 * PI / d as f64;
        d += 2;
    }
    sigma
}

/// Volume of the ball of radius `radius` in `R^d`.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    unit_sphere_area(dim) * radius.powi(dim as i32) / dim as f64
}

/// Uniform grid on `(0, lx) x (0, ly)`. Cell `(i, j)` is stored at index
/// `j * nx + i`, so rows run along x.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid2D {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::config("lx", format!("extent must be positive, got {lx}")));
        }
        if !(ly.is_finite() && ly > 0.0) {
            return Err(Error::config("ly", format!("extent must be positive, got {ly}")));
        }
        if nx < MIN_RECT_CELLS {
            return Err(Error::config("nx", format!("need at least {MIN_RECT_CELLS} cells, got {nx}")));
        }
        if ny < MIN_RECT_CELLS {
            return Err(Error::config("ny", format!("need at least {MIN_RECT_CELLS} cells, got {ny}")));
        }
        Ok(Self {
            lx,
            ly,
            nx,
            ny,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.hx, (j as f64 + 0.5) * self.hy]
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// |∂Ω| = 2 (Lx + Ly).
    pub fn boundary_measure(&self) -> f64 {
        2.0 * (self.lx + self.ly)
    }

    pub fn diameter(&self) -> f64 {
        self.lx.hypot(self.ly)
    }

    pub fn min_spacing(&self) -> f64 {
        self.hx.min(self.hy)
    }
}

/// Cell-centered grid on `[0, R]` for radially symmetric functions on the
/// ball `B_R(0) ⊂ R^d`. Cell centers sit at `(i + ½) h`, so no unknown lives
/// at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub dim: usize,
    pub radius: f64,
    pub nr: usize,
    pub h: f64,
    pub sigma: f64,
    centers: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, nr: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::config("dim", format!("radial dimension must be at least 2, got {dim}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config("radius", format!("radius must be positive, got {radius}")));
        }
        if nr < MIN_RADIAL_CELLS {
            return Err(Error::config("nr", format!("need at least {MIN_RADIAL_CELLS} cells, got {nr}")));
        }
        let h = radius / nr as f64;
        let sigma = unit_sphere_area(dim);
        let centers: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = centers
            .iter()
            .map(|&r| sigma * r.powi(dim as i32 - 1) * h)
            .collect();
        Ok(Self {
            dim,
            radius,
            nr,
            h,
            sigma,
            centers,
            weights,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nr
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nr == 0
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Quadrature weights `σ_d r_i^{d-1} h`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radius of face `f`, `f = 0..=nr`; face 0 is the origin.
    #[inline]
    pub fn face_radius(&self, f: usize) -> f64 {
        f as f64 * self.h
    }

    /// Area `σ_d r_f^{d-1}` of the sphere through face `f`.
    #[inline]
    pub fn face_area(&self, f: usize) -> f64 {
        self.sigma * self.face_radius(f).powi(self.dim as i32 - 1)
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    pub fn boundary_measure(&self) -> f64 {
        self.sigma * self.radius.powi(self.dim as i32 - 1)
    }
}

/// Either of the two supported geometries.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Rect(Grid2D),
    Radial(RadialGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Rect(g) => g.len(),
            Grid::Radial(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of cell `k` (area in 2D, shell weight in the radial case).
    #[inline]
    pub fn cell_measure(&self, k: usize) -> f64 {
        match self {
            Grid::Rect(g) => g.cell_area(),
            Grid::Radial(g) => g.weights[k],
        }
    }

    pub fn measures(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.cell_measure(k)).collect()
    }

    /// Measure of Ω.
    pub fn domain_measure(&self) -> f64 {
        match self {
            Grid::Rect(g) => g.area(),
            Grid::Radial(g) => g.volume(),
        }
    }

    /// |∂Ω|.
    pub fn boundary_measure(&self) -> f64 {
        match self {
            Grid::Rect(g) => g.boundary_measure(),
            Grid::Radial(g) => g.boundary_measure(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Grid::Rect(g) => g.diameter(),
            Grid::Radial(g) => 2.0 * g.radius,
        }
    }

    pub fn as_rect(&self) -> Option<&Grid2D> {
        match self {
            Grid::Rect(g) => Some(g),
            Grid::Radial(_) => None,
        }
    }

    pub fn as_radial(&self) -> Option<&RadialGrid> {
        match self {
            Grid::Radial(g) => Some(g),
            Grid::Rect(_) => None,
        }
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::Rect(g)
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}
