//! Screened Poisson problems with Robin boundary conditions,
//!
//! ```text
//! −Δv + u v = f  in Ω,     ∇v·ν + g v = q  on ∂Ω,
//! ```
//!
//! discretized with cell-centered finite volumes. The Robin condition is
//! closed with a ghost cell per boundary face: the ghost value makes the
//! face-normal difference quotient equal `q − g·(face average of v)`.
//! Eliminating the ghost only adds a positive amount to the diagonal, so for
//! `u ≥ 0` and `g > 0` the assembled matrix is an M-matrix and the discrete
//! solution obeys `0 ≤ v ≤ η` whenever `f ≡ 0` and `q = η g`.
//!
//! Rectangle systems are solved by conjugate gradients on the
//! measure-weighted (symmetric) form with Jacobi preconditioning; radial
//! systems are tridiagonal and solved directly. All reductions run in a
//! fixed sequential order, so results are bit-reproducible.

use crate::error::{Error, Result};
use crate::model::field::ScalarField;
use crate::model::grid::Grid;
use crate::model::scenario::BoundaryData;

/// Point on ∂Ω handed to boundary callbacks. For radial grids it is `[R, 0]`.
pub type BoundaryPoint = [f64; 2];

/// A screened Poisson problem with Robin data.
pub struct RobinProblem<'a> {
    pub grid: &'a Grid,
    /// Screening coefficient `u ≥ 0`, one value per cell.
    pub screening: &'a [f64],
    /// Source `f`, one value per cell.
    pub source: &'a [f64],
    /// Boundary weight `g > 0`, sampled at face midpoints.
    pub weight: &'a dyn Fn(BoundaryPoint) -> f64,
    /// Right-hand side `q` of the Robin condition.
    pub data: RobinData<'a>,
}

pub enum RobinData<'a> {
    /// `q = η g`, i.e. `∇v·ν = (η − v) g`.
    Level(f64),
    /// Arbitrary boundary data `q(x)`.
    General(&'a dyn Fn(BoundaryPoint) -> f64),
}

/// Matrix-free five-point (rectangle) or three-point (radial) operator.
/// Off-diagonal entries are stored as nonpositive numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum StencilOperator {
    Rect {
        nx: usize,
        ny: usize,
        /// `-1/hx²`
        west_east: f64,
        /// `-1/hy²`
        south_north: f64,
        diag: Vec<f64>,
    },
    Radial {
        /// Coupling of cell `i` to `i − 1` (zero for `i = 0`).
        inner: Vec<f64>,
        /// Coupling of cell `i` to `i + 1` (zero for the last cell).
        outer: Vec<f64>,
        diag: Vec<f64>,
    },
}

impl StencilOperator {
    pub fn len(&self) -> usize {
        match self {
            StencilOperator::Rect { diag, .. } | StencilOperator::Radial { diag, .. } => diag.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn diag(&self) -> &[f64] {
        match self {
            StencilOperator::Rect { diag, .. } | StencilOperator::Radial { diag, .. } => diag,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            StencilOperator::Rect {
                nx,
                ny,
                west_east,
                south_north,
                diag,
            } => {
                let (nx, ny, we, sn) = (*nx, *ny, *west_east, *south_north);
                for j in 0..ny {
                    let row = j * nx;
                    let xr = &x[row..row + nx];
                    let yr = &mut y[row..row + nx];
                    let dr = &diag[row..row + nx];
                    for i in 0..nx {
                        let mut s = dr[i] * xr[i];
                        if i > 0 {
                            s += we * xr[i - 1];
                        }
                        if i + 1 < nx {
                            s += we * xr[i + 1];
                        }
                        yr[i] = s;
                    }
                    if j > 0 {
                        let below = &x[row - nx..row];
                        for i in 0..nx {
                            yr[i] += sn * below[i];
                        }
                    }
                    if j + 1 < ny {
                        let above = &x[row + nx..row + 2 * nx];
                        for i in 0..nx {
                            yr[i] += sn * above[i];
                        }
                    }
                }
            }
            StencilOperator::Radial { inner, outer, diag } => {
                let n = diag.len();
                for i in 0..n {
                    let mut s = diag[i] * x[i];
                    if i > 0 {
                        s += inner[i] * x[i - 1];
                    }
                    if i + 1 < n {
                        s += outer[i] * x[i + 1];
                    }
                    y[i] = s;
                }
            }
        }
    }

    /// Upper bound on the max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        match self {
            StencilOperator::Rect {
                west_east,
                south_north,
                diag,
                ..
            } => diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0 * (west_east.abs() + south_north.abs()),
            StencilOperator::Radial { inner, outer, diag } => (0..diag.len())
                .map(|i| diag[i].abs() + inner[i].abs() + outer[i].abs())
                .fold(0.0, f64::max),
        }
    }

    /// Nonzero entries `(column, value)` of row `k`, diagonal first.
    pub fn row(&self, k: usize) -> Vec<(usize, f64)> {
        match self {
            StencilOperator::Rect {
                nx,
                ny,
                west_east,
                south_north,
                diag,
            } => {
                let (i, j) = (k % nx, k / nx);
                let mut out = vec![(k, diag[k])];
                if i > 0 {
                    out.push((k - 1, *west_east));
                }
                if i + 1 < *nx {
                    out.push((k + 1, *west_east));
                }
                if j > 0 {
                    out.push((k - nx, *south_north));
                }
                if j + 1 < *ny {
                    out.push((k + nx, *south_north));
                }
                out
            }
            StencilOperator::Radial { inner, outer, diag } => {
                let mut out = vec![(k, diag[k])];
                if k > 0 {
                    out.push((k - 1, inner[k]));
                }
                if k + 1 < diag.len() {
                    out.push((k + 1, outer[k]));
                }
                out
            }
        }
    }

    /// Dense copy, row-major. Intended for small verification problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut row = vec![0.0; n];
                for (c, v) in self.row(k) {
                    row[c] += v;
                }
                row
            })
            .collect()
    }
}

/// Assembled linear system `A v = b`. `weights` (the cell measures) make
/// `diag(weights) · A` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub operator: StencilOperator,
    pub rhs: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Assembled {
    /// Max-norm of `b − A x`.
    pub fn residual_max(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.operator.apply(x, &mut ax);
        self.rhs
            .iter()
            .zip(&ax)
            .map(|(b, a)| (b - a).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub v: ScalarField,
    pub iterations: usize,
    /// Max-norm residual of the assembled (unweighted) system.
    pub residual: f64,
}

/// `2 g / (h (2 + g h))`: the diagonal increment from eliminating the Robin
/// ghost cell behind a face of a cell with spacing `h`.
#[inline]
fn robin_coefficient(g: f64, h: f64) -> f64 {
    2.0 * g / (h * (2.0 + g * h))
}

fn check_inputs(problem: &RobinProblem<'_>) -> Result<()> {
    let n = problem.grid.len();
    if problem.screening.len() != n || problem.source.len() != n {
        return Err(Error::InvalidInput(format!(
            "field lengths {} / {} do not match the grid ({n} cells)",
            problem.screening.len(),
            problem.source.len()
        )));
    }
    if let Some(k) = problem.screening.iter().position(|u| !u.is_finite() || *u < 0.0) {
        return Err(Error::InvalidInput(format!(
            "screening coefficient must be finite and nonnegative; cell {k} holds {}",
            problem.screening[k]
        )));
    }
    if let Some(k) = problem.source.iter().position(|f| !f.is_finite()) {
        return Err(Error::NonFinite(format!("source in cell {k}")));
    }
    if let RobinData::Level(eta) = problem.data {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidInput(format!("boundary level must be nonnegative, got {eta}")));
        }
    }
    Ok(())
}

fn boundary_terms(problem: &RobinProblem<'_>, x: BoundaryPoint, h: f64) -> Result<(f64, f64)> {
    let g = (problem.weight)(x);
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::InvalidInput(format!("boundary weight must be positive, got {g} at {x:?}")));
    }
    let q = match problem.data {
        RobinData::Level(eta) => eta * g,
        RobinData::General(q) => q(x),
    };
    if !q.is_finite() {
        return Err(Error::NonFinite(format!("boundary data at {x:?}")));
    }
    let beta = robin_coefficient(g, h);
    Ok((beta, beta * q / g))
}

/// Assembles the finite-volume system for `problem`.
pub fn assemble(problem: &RobinProblem<'_>) -> Result<Assembled> {
    check_inputs(problem)?;
    match problem.grid {
        Grid::Rect(g) => {
            let (nx, ny, hx, hy) = (g.nx, g.ny, g.hx, g.hy);
            let cx = 1.0 / (hx * hx);
            let cy = 1.0 / (hy * hy);
            let mut diag = vec![0.0; g.len()];
            let mut rhs = problem.source.to_vec();
            for j in 0..ny {
                for i in 0..nx {
                    let k = g.idx(i, j);
                    let [x, y] = g.center(i, j);
                    let mut d = problem.screening[k];
                    let mut add_face = |interior: bool, c: f64, point: BoundaryPoint, h: f64| -> Result<()> {
                        if interior {
                            d += c;
                        } else {
                            let (beta, b) = boundary_terms(problem, point, h)?;
                            d += beta;
                            rhs[k] += b;
                        }
                        Ok(())
                    };
                    add_face(i > 0, cx, [0.0, y], hx)?;
                    add_face(i + 1 < nx, cx, [g.lx, y], hx)?;
                    add_face(j > 0, cy, [x, 0.0], hy)?;
                    add_face(j + 1 < ny, cy, [x, g.ly], hy)?;
                    diag[k] = d;
                }
            }
            Ok(Assembled {
                operator: StencilOperator::Rect {
                    nx,
                    ny,
                    west_east: -cx,
                    south_north: -cy,
                    diag,
                },
                rhs,
                weights: vec![g.cell_area(); g.len()],
            })
        }
        Grid::Radial(g) => {
            let n = g.nr;
            let h = g.h;
            let p = g.dim as i32 - 1;
            let mut inner = vec![0.0; n];
            let mut outer = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut rhs = problem.source.to_vec();
            for i in 0..n {
                let ri = g.centers()[i].powi(p);
                let r_in = g.face_radius(i).powi(p);
                let r_out = g.face_radius(i + 1).powi(p);
                let mut d = problem.screening[i];
                if i > 0 {
                    let c = r_in / (ri * h * h);
                    inner[i] = -c;
                    d += c;
                }
                if i + 1 < n {
                    let c = r_out / (ri * h * h);
                    outer[i] = -c;
                    d += c;
                } else {
                    let (beta, b) = boundary_terms(problem, [g.radius, 0.0], h)?;
                    let scale = r_out / ri;
                    d += beta * scale;
                    rhs[i] += b * scale;
                }
                diag[i] = d;
            }
            Ok(Assembled {
                operator: StencilOperator::Radial { inner, outer, diag },
                rhs,
                weights: g.weights().to_vec(),
            })
        }
    }
}

/// Smallest residual max-norm that rounding lets us certify for `x`:
/// `8 ε (‖A‖∞ ‖x‖∞ + ‖b‖∞)`. Requested tolerances below it are raised to it.
fn roundoff_floor(norm_a: f64, x: &[f64], b: &[f64]) -> f64 {
    let max = |v: &[f64]| v.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    8.0 * f64::EPSILON * (norm_a * max(x) + max(b))
}

/// Preconditioned conjugate gradients on `W A v = W b`, stopping when the
/// unweighted residual satisfies `‖b − A v‖∞ ≤ tolerance`, or reaches the
/// rounding floor of the system when that is larger.
pub fn solve_assembled(
    system: &Assembled,
    tolerance: f64,
    max_iterations: usize,
    guess: Option<&[f64]>,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = system.rhs.len();
    let a = &system.operator;
    let w = &system.weights;
    let norm_a = a.norm_inf();
    let reached = |res: f64, x: &[f64]| res <= tolerance || res <= roundoff_floor(norm_a, x, &system.rhs);
    if let StencilOperator::Radial { inner, outer, diag } = a {
        return solve_tridiagonal(system, inner, outer, diag, tolerance);
    }
    let mut x = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        Some(g) => {
            return Err(Error::InvalidInput(format!(
                "initial guess has {} entries, system has {n}",
                g.len()
            )))
        }
        None => vec![0.0; n],
    };
    // Jacobi preconditioner of the weighted system.
    let inv_diag: Vec<f64> = a.diag().iter().zip(w).map(|(d, w)| 1.0 / (d * w)).collect();
    let inv_w: Vec<f64> = w.iter().map(|w| 1.0 / w).collect();
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];

    // r = W (b − A x); true residual max is max |r_i / w_i|
    let refresh = |x: &[f64], ax: &mut [f64], r: &mut [f64]| -> f64 {
        a.apply(x, ax);
        let mut m = 0.0f64;
        for i in 0..n {
            let res = system.rhs[i] - ax[i];
            m = m.max(res.abs());
            r[i] = w[i] * res;
        }
        m
    };
    let mut res_max = refresh(&x, &mut ax, &mut r);
    if !res_max.is_finite() {
        return Err(Error::NonFinite("elliptic residual".into()));
    }
    if reached(res_max, &x) {
        return Ok((x, 0, res_max));
    }
    for i in 0..n {
        z[i] = inv_diag[i] * r[i];
        p[i] = z[i];
    }
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        a.apply(&p, &mut q);
        let mut pq = 0.0;
        for i in 0..n {
            q[i] *= w[i];
            pq += p[i] * q[i];
        }
        if pq <= 0.0 || !pq.is_finite() {
            break;
        }
        let alpha = rz / pq;
        let mut est = 0.0f64;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            est = est.max((r[i] * inv_w[i]).abs());
        }
        if est <= tolerance || iterations % 64 == 0 {
            // recursive residuals drift; replace with the true one
            res_max = refresh(&x, &mut ax, &mut r);
            if reached(res_max, &x) {
                return Ok((x, iterations, res_max));
            }
        }
        let mut rz_new = 0.0;
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
            rz_new += r[i] * z[i];
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    res_max = refresh(&x, &mut ax, &mut r);
    if reached(res_max, &x) {
        return Ok((x, iterations, res_max));
    }
    Err(Error::NonConvergence {
        iterations,
        residual: res_max,
    })
}

/// Thomas algorithm with iterative refinement. The radial operator is a
/// diagonally dominant M-matrix, so no pivoting is needed.
fn solve_tridiagonal(
    system: &Assembled,
    inner: &[f64],
    outer: &[f64],
    diag: &[f64],
    tolerance: f64,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut pivots = vec![0.0; n];
    let mut prev = 0.0;
    for i in 0..n {
        let p = diag[i] - if i > 0 { inner[i] * prev } else { 0.0 };
        if !(p > 0.0) {
            return Err(Error::Internal(format!("vanishing pivot in row {i}")));
        }
        pivots[i] = p;
        c_prime[i] = outer[i] / p;
        prev = c_prime[i];
    }
    let sweep = |rhs: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let carry = if i > 0 { inner[i] * y[i - 1] } else { 0.0 };
            y[i] = (rhs[i] - carry) / pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= c_prime[i] * y[i + 1];
        }
        y
    };
    let mut x = sweep(&system.rhs);
    let mut ax = vec![0.0; n];
    let mut solves = 1;
    loop {
        system.operator.apply(&x, &mut ax);
        let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !res.is_finite() {
            return Err(Error::NonFinite("elliptic residual".into()));
        }
        if res <= tolerance || res <= roundoff_floor(system.operator.norm_inf(), &x, &system.rhs) {
            return Ok((x, solves, res));
        }
        if solves >= 4 {
            return Err(Error::NonConvergence {
                iterations: solves,
                residual: res,
            });
        }
        let dx = sweep(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        solves += 1;
    }
}

/// Solves `problem` to `tolerance` in the residual max-norm.
///
/// Without a guess the iteration starts from the boundary level `η` (or
/// zero for general data), which is exact when `u ≡ 0` and `f ≡ 0`.
pub fn solve(
    problem: &RobinProblem<'_>,
    tolerance: f64,
    max_iterations: usize,
    guess: Option<&[f64]>,
) -> Result<EllipticSolution> {
    let system = assemble(problem)?;
    let start;
    let guess = match (guess, &problem.data) {
        (Some(g), _) => Some(g),
        (None, RobinData::Level(eta)) => {
            start = vec![*eta; system.rhs.len()];
            Some(start.as_slice())
        }
        (None, RobinData::General(_)) => None,
    };
    let (v, iterations, residual) = solve_assembled(&system, tolerance, max_iterations, guess)?;
    Ok(EllipticSolution {
        v: ScalarField::plain(v),
        iterations,
        residual,
    })
}

/// Boundary weight `g` of `boundary` as a callback on boundary points.
pub fn weight_fn(grid: &Grid, boundary: &BoundaryData) -> impl Fn(BoundaryPoint) -> f64 {
    let (lx, ly) = match grid {
        Grid::Rect(g) => (g.lx, g.ly),
        Grid::Radial(g) => (g.radius, g.radius),
    };
    let b = *boundary;
    move |x| b.g_at(x, lx, ly)
}

/// Signal equation `0 = Δc − n c` with `∇c·ν = (γ − c) g`.
///
/// `guess` (typically the previous signal) warm-starts the iteration.
pub fn solve_signal(
    grid: &Grid,
    density: &[f64],
    boundary: &BoundaryData,
    tolerance: f64,
    max_iterations: usize,
    guess: Option<&[f64]>,
) -> Result<EllipticSolution> {
    if let Some(k) = density.iter().position(|n| *n < 0.0) {
        return Err(Error::InvalidInput(format!(
            "density must be nonnegative; cell {k} holds {}",
            density[k]
        )));
    }
    let zero = vec![0.0; grid.len()];
    let weight = weight_fn(grid, boundary);
    let problem = RobinProblem {
        grid,
        screening: density,
        source: &zero,
        weight: &weight,
        data: RobinData::Level(boundary.gamma),
    };
    let mut sol = solve(&problem, tolerance, max_iterations, guess)?;
    sol.v.kind = crate::model::field::FieldKind::signal(boundary.gamma);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::{Grid2D, RadialGrid};

    fn unit(n: usize) -> Grid {
        Grid2D::new(1.0, 1.0, n, n).unwrap().into()
    }

    fn one(_: BoundaryPoint) -> f64 {
        1.0
    }

    #[test]
    fn interior_rows_are_the_five_point_laplacian() {
        let grid = unit(8);
        let h2 = (1.0f64 / 8.0).powi(2);
        for u in [0.0, 1.0] {
            let screening = vec![u; 64];
            let zero = vec![0.0; 64];
            let p = RobinProblem {
                grid: &grid,
                screening: &screening,
                source: &zero,
                weight: &one,
                data: RobinData::Level(1.0),
            };
            let sys = assemble(&p).unwrap();
            let row = sys.operator.row(3 * 8 + 4);
            assert_eq!(row.len(), 5);
            assert!((row[0].1 - (4.0 / h2 + u)).abs() < 1e-9);
            for &(_, v) in &row[1..] {
                assert!((v + 1.0 / h2).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn radial_rows_use_face_radii() {
        let grid: Grid = RadialGrid::new(2, 1.0, 16).unwrap().into();
        let g = grid.as_radial().unwrap().clone();
        let u = vec![0.7; 16];
        let zero = vec![0.0; 16];
        let p = RobinProblem {
            grid: &grid,
            screening: &u,
            source: &zero,
            weight: &one,
            data: RobinData::Level(1.0),
        };
        let sys = assemble(&p).unwrap();
        let i = 5;
        let ri = g.centers()[i];
        let h = g.h;
        let row = sys.operator.row(i);
        let inner = row.iter().find(|(c, _)| *c == i - 1).unwrap().1;
        let outer = row.iter().find(|(c, _)| *c == i + 1).unwrap().1;
        assert!((inner + g.face_radius(i) / (ri * h * h)).abs() < 1e-9);
        assert!((outer + g.face_radius(i + 1) / (ri * h * h)).abs() < 1e-9);
        let sum: f64 = row.iter().map(|(_, v)| v).sum();
        assert!((sum - 0.7).abs() < 1e-9);
    }

    #[test]
    fn rejects_negative_screening() {
        let grid = unit(4);
        let mut u = vec![0.0; 16];
        u[3] = -1.0;
        let zero = vec![0.0; 16];
        let p = RobinProblem {
            grid: &grid,
            screening: &u,
            source: &zero,
            weight: &one,
            data: RobinData::Level(1.0),
        };
        assert!(matches!(assemble(&p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn constant_is_exact_without_screening() {
        let grid = unit(16);
        let n = vec![0.0; grid.len()];
        let c = solve_signal(&grid, &n, &BoundaryData::new(2.5), 1e-12, 100, None).unwrap();
        assert!(c.v.values.iter().all(|&v| v == 2.5));
        assert_eq!(c.iterations, 0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let grid = unit(32);
        let n = vec![1.0; grid.len()];
        let err = solve_signal(&grid, &n, &BoundaryData::new(1.0), 1e-12, 2, None).unwrap_err();
        match err {
            Error::NonConvergence { iterations, residual } => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let grid = unit(24);
        let n: Vec<f64> = (0..grid.len()).map(|k| (k % 7) as f64 * 0.3).collect();
        let b = BoundaryData::new(1.0);
        let cold = solve_signal(&grid, &n, &b, 1e-11, 5000, None).unwrap();
        let guess = vec![0.5; grid.len()];
        let warm = solve_signal(&grid, &n, &b, 1e-11, 5000, Some(&guess)).unwrap();
        for (a, b) in cold.v.values.iter().zip(&warm.v.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
