//! Conservative explicit stepping of `n_t = ∇·(∇n − n S ∇c)`.
//!
//! Fluxes live on cell faces. The transport flux through a face is
//! `J = v n_up − ∂_ν n` with `v = (S∇c)·e` the drift velocity along the
//! face's axis, `n_up` the upwind cell value and `∂_ν n` the two-point
//! difference quotient. Boundary faces carry no flux. The update
//! `n ← n − dt · div J` telescopes, so total mass is conserved to round-off,
//! and under [`admissible_dt`] each new value is a convex combination of old
//! ones, so `n` stays nonnegative.

use crate::error::{Error, Result};
use crate::model::grid::{Grid, Grid2D, RadialGrid};
use crate::model::sensitivity::{mat_vec, TensorSensitivity};

/// Face-normal velocities. Rectangle layout: x-face `(i, j)`, `i = 0..=nx`,
/// at index `j * (nx + 1) + i`; y-face `(i, j)`, `j = 0..=ny`, at index
/// `j * nx + i`. Radial layout: face `f = 0..=nr` at radius `f h`.
#[derive(Debug, Clone, PartialEq)]
pub enum FaceField {
    Rect { x: Vec<f64>, y: Vec<f64> },
    Radial { r: Vec<f64> },
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        match grid {
            Grid::Rect(g) => FaceField::Rect {
                x: vec![0.0; (g.nx + 1) * g.ny],
                y: vec![0.0; g.nx * (g.ny + 1)],
            },
            Grid::Radial(g) => FaceField::Radial {
                r: vec![0.0; g.nr + 1],
            },
        }
    }

    pub fn max_abs(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        match self {
            FaceField::Rect { x, y } => m(x).max(m(y)),
            FaceField::Radial { r } => m(r),
        }
    }

    /// Largest magnitude on boundary faces; zero for valid fluxes.
    pub fn boundary_max_abs(&self, grid: &Grid) -> f64 {
        match (self, grid) {
            (FaceField::Rect { x, y }, Grid::Rect(g)) => {
                let mut m = 0.0f64;
                for j in 0..g.ny {
                    m = m.max(x[j * (g.nx + 1)].abs()).max(x[j * (g.nx + 1) + g.nx].abs());
                }
                for i in 0..g.nx {
                    m = m.max(y[i].abs()).max(y[g.ny * g.nx + i].abs());
                }
                m
            }
            (FaceField::Radial { r }, Grid::Radial(_)) => r[0].abs().max(r[r.len() - 1].abs()),
            _ => f64::NAN,
        }
    }

    fn matches(&self, grid: &Grid) -> bool {
        match (self, grid) {
            (FaceField::Rect { x, y }, Grid::Rect(g)) => {
                x.len() == (g.nx + 1) * g.ny && y.len() == g.nx * (g.ny + 1)
            }
            (FaceField::Radial { r }, Grid::Radial(g)) => r.len() == g.nr + 1,
            _ => false,
        }
    }
}

/// Drift velocities `S∇c` normal to each face.
pub type FaceVelocity = FaceField;

/// Transport fluxes `J = n S∇c − ∇n` normal to each face, boundary faces 0.
pub type FaceFluxes = FaceField;

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    pub min_after: f64,
    pub max_after: f64,
    /// `dt / admissible_dt`.
    pub cfl_ratio: f64,
}

/// Allowed negative overshoot of the updated density.
pub const POSITIVITY_SLACK: f64 = 1e-12;

fn check_len(what: &str, v: &[f64], grid: &Grid) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{what} has {} values, grid has {} cells",
            v.len(),
            grid.len()
        )));
    }
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} in cell {k}")));
    }
    Ok(())
}

/// Derivative along y at each cell: central where both neighbors exist,
/// one-sided at the bottom and top rows.
fn cell_dy(g: &Grid2D, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            out[k] = if j == 0 {
                (c[k + g.nx] - c[k]) / g.hy
            } else if j + 1 == g.ny {
                (c[k] - c[k - g.nx]) / g.hy
            } else {
                (c[k + g.nx] - c[k - g.nx]) / (2.0 * g.hy)
            };
        }
    }
    out
}

fn cell_dx(g: &Grid2D, c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            out[k] = if i == 0 {
                (c[k + 1] - c[k]) / g.hx
            } else if i + 1 == g.nx {
                (c[k] - c[k - 1]) / g.hx
            } else {
                (c[k + 1] - c[k - 1]) / (2.0 * g.hx)
            };
        }
    }
    out
}

/// Face-normal drift `(S(x_f, n_f, c_f) ∇c_f)·e` on the rectangle.
///
/// The normal derivative is the difference across the face; the tangential
/// derivative averages the two adjacent cells' tangential differences (four
/// differences in the interior). `n_f` and `c_f` are arithmetic averages.
pub fn drift_velocity(
    n: &[f64],
    c: &[f64],
    sensitivity: &dyn TensorSensitivity,
    grid: &Grid2D,
) -> Result<FaceVelocity> {
    let whole = Grid::Rect(grid.clone());
    check_len("density", n, &whole)?;
    check_len("signal", c, &whole)?;
    let (nx, ny, hx, hy) = (grid.nx, grid.ny, grid.hx, grid.hy);
    let dy = cell_dy(grid, c);
    let dx = cell_dx(grid, c);
    let mut vx = vec![0.0; (nx + 1) * ny];
    let mut vy = vec![0.0; nx * (ny + 1)];
    for j in 0..ny {
        for i in 1..nx {
            let (l, r) = (grid.idx(i - 1, j), grid.idx(i, j));
            let grad = [(c[r] - c[l]) / hx, 0.5 * (dy[l] + dy[r])];
            let x = [i as f64 * hx, (j as f64 + 0.5) * hy];
            let s = sensitivity.eval(x, 0.5 * (n[l] + n[r]), 0.5 * (c[l] + c[r]));
            let v = mat_vec(&s, grad)[0];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("drift at x-face ({i}, {j})")));
            }
            vx[j * (nx + 1) + i] = v;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let (b, t) = (grid.idx(i, j - 1), grid.idx(i, j));
            let grad = [0.5 * (dx[b] + dx[t]), (c[t] - c[b]) / hy];
            let x = [(i as f64 + 0.5) * hx, j as f64 * hy];
            let s = sensitivity.eval(x, 0.5 * (n[b] + n[t]), 0.5 * (c[b] + c[t]));
            let v = mat_vec(&s, grad)[1];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("drift at y-face ({i}, {j})")));
            }
            vy[j * nx + i] = v;
        }
    }
    Ok(FaceField::Rect { x: vx, y: vy })
}

/// Upwind advective plus two-point diffusive fluxes.
pub fn compute_fluxes(n: &[f64], velocity: &FaceVelocity, grid: &Grid) -> Result<FaceFluxes> {
    check_len("density", n, grid)?;
    if !velocity.matches(grid) {
        return Err(Error::InvalidInput("velocity layout does not match the grid".into()));
    }
    let upwind = |v: f64, lo: f64, hi: f64| if v > 0.0 { v * lo } else { v * hi };
    match (velocity, grid) {
        (FaceField::Rect { x: vx, y: vy }, Grid::Rect(g)) => {
            let (nx, ny) = (g.nx, g.ny);
            let mut jx = vec![0.0; (nx + 1) * ny];
            let mut jy = vec![0.0; nx * (ny + 1)];
            for j in 0..ny {
                for i in 1..nx {
                    let (l, r) = (g.idx(i - 1, j), g.idx(i, j));
                    let f = j * (nx + 1) + i;
                    jx[f] = upwind(vx[f], n[l], n[r]) - (n[r] - n[l]) / g.hx;
                }
            }
            for j in 1..ny {
                for i in 0..nx {
                    let (b, t) = (g.idx(i, j - 1), g.idx(i, j));
                    let f = j * nx + i;
                    jy[f] = upwind(vy[f], n[b], n[t]) - (n[t] - n[b]) / g.hy;
                }
            }
            Ok(FaceField::Rect { x: jx, y: jy })
        }
        (FaceField::Radial { r: vr }, Grid::Radial(g)) => {
            let mut jr = vec![0.0; g.nr + 1];
            for f in 1..g.nr {
                jr[f] = upwind(vr[f], n[f - 1], n[f]) - (n[f] - n[f - 1]) / g.h;
            }
            Ok(FaceField::Radial { r: jr })
        }
        _ => unreachable!("layout checked above"),
    }
}

/// Rate of change `−div J` in every cell.
pub fn flux_divergence(fluxes: &FaceFluxes, grid: &Grid) -> Vec<f64> {
    match (fluxes, grid) {
        (FaceField::Rect { x, y }, Grid::Rect(g)) => {
            let (nx, ny) = (g.nx, g.ny);
            let mut out = vec![0.0; g.len()];
            for j in 0..ny {
                for i in 0..nx {
                    let fx = j * (nx + 1) + i;
                    let fy = j * nx + i;
                    out[g.idx(i, j)] = -(x[fx + 1] - x[fx]) / g.hx - (y[fy + nx] - y[fy]) / g.hy;
                }
            }
            out
        }
        (FaceField::Radial { r }, Grid::Radial(g)) => (0..g.nr)
            .map(|i| -(g.face_area(i + 1) * r[i + 1] - g.face_area(i) * r[i]) / g.weights()[i])
            .collect(),
        _ => panic!("flux layout does not match the grid"),
    }
}

fn radial_diffusion_limit(g: &RadialGrid) -> f64 {
    (0..g.nr)
        .map(|i| g.weights()[i] * g.h / (g.face_area(i) + g.face_area(i + 1)))
        .fold(f64::INFINITY, f64::min)
}

/// Step-size control
/// `dt = safety · min(h² / (2·dim), h / (2 max|v| + ε))`.
///
/// On radial grids the diffusive limit accounts for the metric: it is the
/// reciprocal of the largest diffusive coupling `(A_in + A_out)/(w_i h)`.
pub fn cfl_dt(velocity: &FaceVelocity, grid: &Grid, safety: f64) -> f64 {
    let (h, diffusive) = match grid {
        Grid::Rect(g) => {
            let h = g.min_spacing();
            (h, h * h / 4.0)
        }
        Grid::Radial(g) => (g.h, radial_diffusion_limit(g)),
    };
    let advective = h / (2.0 * velocity.max_abs() + f64::EPSILON);
    safety * diffusive.min(advective)
}

/// Largest step for which the explicit update is a convex combination in
/// every cell: `dt · (diffusive coupling + upwind outflow) ≤ 1`.
pub fn positivity_dt(velocity: &FaceVelocity, grid: &Grid) -> f64 {
    let mut worst = 0.0f64;
    match (velocity, grid) {
        (FaceField::Rect { x, y }, Grid::Rect(g)) => {
            let (nx, ny) = (g.nx, g.ny);
            for j in 0..ny {
                for i in 0..nx {
                    let mut rate = 0.0;
                    let fx = j * (nx + 1) + i;
                    let fy = j * nx + i;
                    if i > 0 {
                        rate += 1.0 / (g.hx * g.hx) + (-x[fx]).max(0.0) / g.hx;
                    }
                    if i + 1 < nx {
                        rate += 1.0 / (g.hx * g.hx) + x[fx + 1].max(0.0) / g.hx;
                    }
                    if j > 0 {
                        rate += 1.0 / (g.hy * g.hy) + (-y[fy]).max(0.0) / g.hy;
                    }
                    if j + 1 < ny {
                        rate += 1.0 / (g.hy * g.hy) + y[fy + nx].max(0.0) / g.hy;
                    }
                    worst = worst.max(rate);
                }
            }
        }
        (FaceField::Radial { r }, Grid::Radial(g)) => {
            for i in 0..g.nr {
                let w = g.weights()[i];
                let mut rate = 0.0;
                if i > 0 {
                    rate += g.face_area(i) / w * (1.0 / g.h + (-r[i]).max(0.0));
                }
                if i + 1 < g.nr {
                    rate += g.face_area(i + 1) / w * (1.0 / g.h + r[i + 1].max(0.0));
                }
                worst = worst.max(rate);
            }
        }
        _ => return f64::NAN,
    }
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// The step accepted by [`step_with_velocity`]: the CFL bound at safety 1
/// intersected with the positivity bound.
pub fn admissible_dt(velocity: &FaceVelocity, grid: &Grid) -> f64 {
    cfl_dt(velocity, grid, 1.0).min(positivity_dt(velocity, grid))
}

/// `Σ n_k |cell_k|`.
pub fn total_mass(n: &[f64], grid: &Grid) -> f64 {
    n.iter()
        .enumerate()
        .map(|(k, v)| v * grid.cell_measure(k))
        .sum()
}

/// One explicit Euler step with a precomputed drift velocity.
pub fn step_with_velocity(
    n: &[f64],
    velocity: &FaceVelocity,
    dt: f64,
    grid: &Grid,
) -> Result<(Vec<f64>, StepReport)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let admissible = admissible_dt(velocity, grid);
    if dt > admissible * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, admissible });
    }
    let fluxes = compute_fluxes(n, velocity, grid)?;
    let rate = flux_divergence(&fluxes, grid);
    let next: Vec<f64> = n.iter().zip(&rate).map(|(v, r)| v + dt * r).collect();
    let min_after = next.iter().copied().fold(f64::INFINITY, f64::min);
    if min_after < -POSITIVITY_SLACK {
        return Err(Error::Internal(format!(
            "density became negative ({min_after:e}) under an admissible step"
        )));
    }
    if let Some(k) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("density in cell {k} after step")));
    }
    let report = StepReport {
        dt,
        mass_before: total_mass(n, grid),
        mass_after: total_mass(&next, grid),
        min_after,
        max_after: next.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        cfl_ratio: dt / admissible,
    };
    Ok((next, report))
}

/// Advances `n` by `dt` on the rectangle with the signal `c` held fixed.
pub fn step_n(
    n: &[f64],
    c: &[f64],
    sensitivity: &dyn TensorSensitivity,
    dt: f64,
    grid: &Grid2D,
) -> Result<(Vec<f64>, StepReport)> {
    let velocity = drift_velocity(n, c, sensitivity, grid)?;
    step_with_velocity(n, &velocity, dt, &Grid::Rect(grid.clone()))
}

/// `true` once `‖n‖∞` exceeds `threshold`.
pub fn detect_blowup(n: &[f64], threshold: f64) -> bool {
    n.iter().any(|v| *v > threshold || v.is_nan())
}
