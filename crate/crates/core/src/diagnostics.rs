//! Functionals monitored along trajectories, the cutoffs used to localize
//! them, and the verdicts derived from recorded series.

use std::f64::consts::E;

use crate::error::{Error, Result};
use crate::model::field::RANGE_SLACK;
use crate::model::grid::{unit_sphere_area, Grid, Grid2D, RadialGrid};

/// `Σ n_k |cell_k|`.
pub fn mass(n: &[f64], grid: &Grid) -> f64 {
    n.iter()
        .enumerate()
        .map(|(k, v)| v * grid.cell_measure(k))
        .sum()
}

fn n_log_n(v: f64) -> f64 {
    if v > 0.0 {
        v * v.ln()
    } else {
        0.0
    }
}

fn check_nonnegative(n: &[f64]) -> Result<()> {
    if let Some(k) = n.iter().position(|v| !(*v >= -RANGE_SLACK)) {
        return Err(Error::InvalidInput(format!(
            "density must be nonnegative; cell {k} holds {}",
            n[k]
        )));
    }
    Ok(())
}

/// `∫ n log n` with `0 log 0 = 0`.
pub fn entropy(n: &[f64], grid: &Grid) -> Result<f64> {
    check_nonnegative(n)?;
    Ok(n
        .iter()
        .enumerate()
        .map(|(k, v)| n_log_n(*v) * grid.cell_measure(k))
        .sum())
}

fn rect_energy_density(c: &[f64], g: &Grid2D) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = g.idx(i, j);
            let dx = |a: usize| (c[g.idx(a, j)] - c[g.idx(a - 1, j)]) / g.hx;
            let dy = |b: usize| (c[g.idx(i, b)] - c[g.idx(i, b - 1)]) / g.hy;
            let west = dx(if i > 0 { i } else { 1 });
            let east = dx(if i + 1 < nx { i + 1 } else { nx - 1 });
            let south = dy(if j > 0 { j } else { 1 });
            let north = dy(if j + 1 < ny { j + 1 } else { ny - 1 });
            out[k] = 0.5 * (west * west + east * east + south * south + north * north);
        }
    }
    out
}

fn radial_energy_density(c: &[f64], g: &RadialGrid) -> Vec<f64> {
    let nr = g.nr;
    let d = |f: usize| (c[f] - c[f - 1]) / g.h;
    (0..nr)
        .map(|i| {
            let inner = if i > 0 { d(i) } else { 0.0 };
            let outer = d(if i + 1 < nr { i + 1 } else { nr - 1 });
            0.5 * (inner * inner + outer * outer)
        })
        .collect()
}

/// Cellwise `|∇c|²` from face differences. Each half cell uses the
/// difference across its own face; half cells on the boundary reuse the
/// nearest interior face. Exact for affine `c` on the rectangle.
pub fn gradient_energy_density(c: &[f64], grid: &Grid) -> Vec<f64> {
    match grid {
        Grid::Rect(g) => rect_energy_density(c, g),
        Grid::Radial(g) => radial_energy_density(c, g),
    }
}

/// `∫_Ω |∇c|²`.
pub fn grad_c_l2(c: &[f64], grid: &Grid) -> f64 {
    gradient_energy_density(c, grid)
        .iter()
        .enumerate()
        .map(|(k, e)| e * grid.cell_measure(k))
        .sum()
}

/// `½ γ² |∂Ω|`, the bound on `∫|∇c|²`.
pub fn energy_bound(gamma: f64, grid: &Grid) -> f64 {
    0.5 * gamma * gamma * grid.boundary_measure()
}

/// `½ γ² |∂Ω| − ∫|∇c|²`.
pub fn grad_c_l2_margin(c: &[f64], grid: &Grid, gamma: f64) -> f64 {
    energy_bound(gamma, grid) - grad_c_l2(c, grid)
}

/// Slack allowed on the energy margin for quadrature error.
pub const ENERGY_ALLOWANCE: f64 = 1e-6;

fn cell_distance2(grid: &Grid, k: usize, q: [f64; 2]) -> f64 {
    match grid {
        Grid::Rect(g) => {
            let x = g.center(k % g.nx, k / g.nx);
            (x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)
        }
        Grid::Radial(g) => g.centers()[k].powi(2),
    }
}

/// `∫_{Ω ∩ B_δ(q)} |∇c|²` over cells whose center lies in the open ball.
/// Radial grids only carry balls around the origin, so `q` is ignored there.
pub fn grad_c_l2_local(c: &[f64], grid: &Grid, q: [f64; 2], delta: f64) -> f64 {
    let e = gradient_energy_density(c, grid);
    let d2 = delta * delta;
    (0..grid.len())
        .filter(|&k| cell_distance2(grid, k, q) < d2)
        .map(|k| e[k] * grid.cell_measure(k))
        .sum()
}

/// Centers used for sup-over-`q` diagnostics: the grid nodes
/// `(i hx, j hy)` of the closed rectangle, or the origin of a ball.
pub fn center_grid(grid: &Grid) -> Vec<[f64; 2]> {
    match grid {
        Grid::Rect(g) => {
            let mut out = Vec::with_capacity((g.nx + 1) * (g.ny + 1));
            for j in 0..=g.ny {
                for i in 0..=g.nx {
                    out.push([i as f64 * g.hx, j as f64 * g.hy]);
                }
            }
            out
        }
        Grid::Radial(_) => vec![[0.0, 0.0]],
    }
}

/// Ball sums of a cellwise integrand over many centers, via row prefix sums.
struct BallSums<'a> {
    grid: &'a Grid,
    prefix: Vec<f64>,
}

impl<'a> BallSums<'a> {
    /// `values` are already multiplied by cell measures.
    fn new(grid: &'a Grid, values: &[f64]) -> Self {
        let prefix = match grid {
            Grid::Rect(g) => {
                let mut p = vec![0.0; (g.nx + 1) * g.ny];
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        p[j * (g.nx + 1) + i + 1] = p[j * (g.nx + 1) + i] + values[g.idx(i, j)];
                    }
                }
                p
            }
            Grid::Radial(_) => {
                let mut p = vec![0.0; values.len() + 1];
                for (k, v) in values.iter().enumerate() {
                    p[k + 1] = p[k] + v;
                }
                p
            }
        };
        Self { grid, prefix }
    }

    fn total(&self) -> f64 {
        match self.grid {
            Grid::Rect(g) => (0..g.ny).map(|j| self.prefix[j * (g.nx + 1) + g.nx]).sum(),
            Grid::Radial(_) => *self.prefix.last().unwrap_or(&0.0),
        }
    }

    fn sum(&self, q: [f64; 2], delta: f64) -> f64 {
        match self.grid {
            Grid::Rect(g) => {
                let mut total = 0.0;
                let row = g.nx + 1;
                let j_lo = ((q[1] - delta) / g.hy - 0.5).floor().max(0.0) as usize;
                let j_hi = (((q[1] + delta) / g.hy + 0.5).ceil().max(0.0) as usize).min(g.ny);
                for j in j_lo..j_hi {
                    let dy = (j as f64 + 0.5) * g.hy - q[1];
                    let rest = delta * delta - dy * dy;
                    if rest <= 0.0 {
                        continue;
                    }
                    let w = rest.sqrt();
                    let lo = ((q[0] - w) / g.hx - 0.5).floor() + 1.0;
                    let hi = ((q[0] + w) / g.hx - 0.5).ceil() - 1.0;
                    let lo = lo.max(0.0) as usize;
                    let hi = hi.min(g.nx as f64 - 1.0);
                    if hi < lo as f64 {
                        continue;
                    }
                    let hi = hi as usize;
                    total += self.prefix[j * row + hi + 1] - self.prefix[j * row + lo];
                }
                total
            }
            Grid::Radial(g) => {
                let count = g.centers().iter().take_while(|r| **r < delta).count();
                self.prefix[count]
            }
        }
    }
}

/// `ψ_η(x) = ln(−ln|x−q|) − ln(−ln η)` inside `B_η(q)`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPsi {
    pub eta: f64,
    pub center: [f64; 2],
}

impl CutoffPsi {
    pub fn new(eta: f64, center: [f64; 2]) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, center })
    }

    /// Value at distance `rho` from the center.
    pub fn radial_value(&self, rho: f64) -> f64 {
        if rho >= self.eta {
            0.0
        } else {
            (-rho.ln()).ln() - (-self.eta.ln()).ln()
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.radial_value(((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= (-1.0f64).exp() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eta must lie in (0, 1/e], got {eta}")))
    }
}

fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Seed with a few fixed panels so narrow features are not skipped.
    let panels = 16;
    let w = (b - a) / panels as f64;
    if whole.is_finite() {
        (0..panels)
            .map(|p| {
                let (lo, hi) = (a + p as f64 * w, a + (p + 1) as f64 * w);
                let mid = 0.5 * (lo + hi);
                let (fl, fmid, fh) = (f(lo), f(mid), f(hi));
                simpson_step(f, lo, hi, fl, fmid, fh, w / 6.0 * (fl + 4.0 * fmid + fh), tol / panels as f64, 48)
            })
            .sum()
    } else {
        f64::NAN
    }
}

/// `(‖ψ_η‖²_{L²}, |ψ_η|²_{H¹})` in `ℝ^d` from the one-dimensional forms
/// `σ_d ∫_L^∞ |ln ρ|² e^{−dρ} dρ` and `σ_d ∫_L^∞ ρ^{−2} e^{−(d−2)ρ} dρ`,
/// `L = ln(1/η)`. The half line is mapped onto `(0, 1]` by `ρ = L/u`.
pub fn psi_eta_h1(eta: f64, dim: usize, tolerance: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let l = -eta.ln();
    let d = dim as f64;
    let sigma = unit_sphere_area(dim);
    let l2 = move |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let rho = l / u;
        rho.ln().powi(2) * (-d * rho).exp() * l / (u * u)
    };
    let semi = move |u: f64| {
        if u <= 0.0 {
            return if dim == 2 { 1.0 / l } else { 0.0 };
        }
        let rho = l / u;
        (-(d - 2.0) * rho).exp() / (rho * rho) * l / (u * u)
    };
    let a = sigma * adaptive_simpson(&l2, 0.0, 1.0, tolerance / sigma);
    let b = sigma * adaptive_simpson(&semi, 0.0, 1.0, tolerance / sigma);
    Ok((a, b))
}

/// `φ = ζ²` with `ζ = 1 − S(t)`, `S(t) = 6t⁵ − 15t⁴ + 10t³`,
/// `t = (|x−q| − δ/2)/(δ/2)` clamped to `[0, 1]`.
///
/// `φ = 1` on `B_{δ/2}(q)`, `φ = 0` outside `B_δ(q)`, and
/// `|∇φ| = 2ζ|ζ′| ≤ K φ^{1/2}` with `K = 2‖ζ′‖∞ = 7.5/δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPhi {
    pub delta: f64,
    pub center: [f64; 2],
    pub k: f64,
}

impl CutoffPhi {
    pub fn new(delta: f64, center: [f64; 2]) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff radius must be positive, got {delta}")));
        }
        Ok(Self {
            delta,
            center,
            k: 7.5 / delta,
        })
    }

    fn t(&self, rho: f64) -> f64 {
        ((rho - 0.5 * self.delta) / (0.5 * self.delta)).clamp(0.0, 1.0)
    }

    fn zeta(&self, rho: f64) -> f64 {
        let t = self.t(rho);
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }

    /// `dζ/dρ`.
    fn zeta_prime(&self, rho: f64) -> f64 {
        let t = self.t(rho);
        -30.0 * t * t * (1.0 - t) * (1.0 - t) * 2.0 / self.delta
    }

    pub fn radial_value(&self, rho: f64) -> f64 {
        self.zeta(rho).powi(2)
    }

    /// `|∇φ|` at distance `rho`.
    pub fn radial_gradient(&self, rho: f64) -> f64 {
        (2.0 * self.zeta(rho) * self.zeta_prime(rho)).abs()
    }

    fn rho(&self, x: [f64; 2]) -> f64 {
        ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)).sqrt()
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.radial_value(self.rho(x))
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let rho = self.rho(x);
        if rho == 0.0 {
            return [0.0, 0.0];
        }
        let s = 2.0 * self.zeta(rho) * self.zeta_prime(rho) / rho;
        [s * (x[0] - self.center[0]), s * (x[1] - self.center[1])]
    }
}

/// `∫ n log n φ³` for the cutoff of radius `δ` around `q`
/// (around the origin on radial grids).
pub fn local_entropy(n: &[f64], grid: &Grid, q: [f64; 2], delta: f64) -> Result<f64> {
    check_nonnegative(n)?;
    let phi = CutoffPhi::new(delta, q)?;
    let d2 = delta * delta;
    Ok((0..grid.len())
        .filter_map(|k| {
            let r2 = cell_distance2(grid, k, q);
            (r2 < d2).then(|| n_log_n(n[k]) * phi.radial_value(r2.sqrt()).powi(3) * grid.cell_measure(k))
        })
        .sum())
}

/// Both sides of the interpolation inequality
/// `∫ f^{p+1} ≤ C (p+1)²/log s ∫(f log f + e⁻¹) ∫ f^{p−2}|∇f|²
///   + (4C)^{1+ε/2} (∫ f^{(ε/2)(p+1)/(1+ε)})^{2(1+ε)/ε} + 6 s^{p+1} |Ω|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationGap {
    pub lhs: f64,
    pub rhs: f64,
    /// The three summands of `rhs`, in order.
    pub terms: [f64; 3],
}

impl InterpolationGap {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn interpolation_gap(f: &[f64], grid: &Grid, p: f64, s: f64, eps: f64, c: f64) -> Result<InterpolationGap> {
    if !(s > 1.0) {
        return Err(Error::InvalidInput(format!("s must exceed 1, got {s}")));
    }
    if !(p >= 1.0 && eps > 0.0 && c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need p >= 1, eps > 0, C > 0 (p={p}, eps={eps}, C={c})"
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::InvalidInput("field does not match the grid".into()));
    }
    check_nonnegative(f)?;
    let f: Vec<f64> = f.iter().map(|v| v.max(0.0)).collect();
    let energy = gradient_energy_density(&f, grid);
    let integral = |g: &dyn Fn(usize) -> f64| -> f64 {
        (0..grid.len()).map(|k| g(k) * grid.cell_measure(k)).sum()
    };
    let lhs = integral(&|k| f[k].powf(p + 1.0));
    let entropy_part = integral(&|k| n_log_n(f[k]) + 1.0 / E);
    let dissipation = integral(&|k| if f[k] > 0.0 { f[k].powf(p - 2.0) * energy[k] } else { 0.0 });
    let q = 0.5 * eps * (p + 1.0) / (1.0 + eps);
    let low_moment = integral(&|k| if f[k] > 0.0 { f[k].powf(q) } else { 0.0 });
    let t1 = c * (p + 1.0).powi(2) / s.ln() * entropy_part * dissipation;
    let t2 = (4.0 * c).powf(1.0 + 0.5 * eps) * low_moment.powf(2.0 * (1.0 + eps) / eps);
    let t3 = 6.0 * s.powf(p + 1.0) * grid.domain_measure();
    Ok(InterpolationGap {
        lhs,
        rhs: t1 + t2 + t3,
        terms: [t1, t2, t3],
    })
}

/// Outcome of the search for a uniform localization radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub epsilon: f64,
    /// Largest admissible candidate; `0` when none works.
    pub delta: f64,
    pub found: bool,
    /// Center, time and value of the largest localized energy at `delta`
    /// (at one cell width when nothing works).
    pub worst_q: [f64; 2],
    pub worst_t: f64,
    pub worst_value: f64,
}

/// Candidate radii are multiples `k h` of the grid spacing, from one cell
/// up to the diameter. Returns the largest candidate for which every
/// snapshot and every center in [`center_grid`] satisfies
/// `∫_{B_δ(q)} |∇c|² ≤ ε²`. The localized energy is nondecreasing in `δ`,
/// so the candidates are bisected.
pub fn find_delta_for_epsilon(snapshots: &[(f64, Vec<f64>)], grid: &Grid, epsilon: f64) -> Result<Certificate> {
    if snapshots.is_empty() {
        return Err(Error::InvalidInput("no signal snapshots to certify".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if let Some((t, _)) = snapshots.iter().find(|(_, c)| c.len() != grid.len()) {
        return Err(Error::InvalidInput(format!("snapshot at t = {t} does not match the grid")));
    }
    let h = match grid {
        Grid::Rect(g) => g.min_spacing(),
        Grid::Radial(g) => g.h,
    };
    let k_max = (grid.diameter() / h).ceil() as usize + 1;
    let centers = center_grid(grid);
    let sums: Vec<(f64, BallSums<'_>)> = snapshots
        .iter()
        .map(|(t, c)| {
            let e: Vec<f64> = gradient_energy_density(c, grid)
                .iter()
                .enumerate()
                .map(|(k, v)| v * grid.cell_measure(k))
                .collect();
            (*t, BallSums::new(grid, &e))
        })
        .collect();
    let worst = |delta: f64| -> ([f64; 2], f64, f64) {
        let mut best = (centers[0], sums[0].0, f64::NEG_INFINITY);
        for (t, s) in &sums {
            for q in &centers {
                let v = s.sum(*q, delta);
                if v > best.2 {
                    best = (*q, *t, v);
                }
            }
        }
        best
    };
    let limit = epsilon * epsilon;
    // snapshots whose whole energy is within the limit never violate it
    let active: Vec<&BallSums<'_>> = sums
        .iter()
        .map(|(_, s)| s)
        .filter(|s| s.total() > limit)
        .collect();
    let mut hint = (0usize, 0usize);
    let mut exceeds = |delta: f64| -> bool {
        if active.is_empty() {
            return false;
        }
        if active[hint.0].sum(centers[hint.1], delta) > limit {
            return true;
        }
        for (a, s) in active.iter().enumerate() {
            for (b, q) in centers.iter().enumerate() {
                if s.sum(*q, delta) > limit {
                    hint = (a, b);
                    return true;
                }
            }
        }
        false
    };
    if exceeds(h) {
        let first = worst(h);
        return Ok(Certificate {
            epsilon,
            delta: 0.0,
            found: false,
            worst_q: first.0,
            worst_t: first.1,
            worst_value: first.2,
        });
    }
    let mut lo = 1usize;
    if !exceeds(k_max as f64 * h) {
        lo = k_max;
    } else {
        let mut hi = k_max;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if exceeds(mid as f64 * h) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let at_lo = worst(lo as f64 * h);
    Ok(Certificate {
        epsilon,
        delta: lo as f64 * h,
        found: true,
        worst_q: at_lo.0,
        worst_t: at_lo.1,
        worst_value: at_lo.2,
    })
}

/// Max over `centers` of the localized gradient energy at radius `delta`.
pub fn local_gradient_max(c: &[f64], grid: &Grid, delta: f64) -> f64 {
    let e: Vec<f64> = gradient_energy_density(c, grid)
        .iter()
        .enumerate()
        .map(|(k, v)| v * grid.cell_measure(k))
        .collect();
    let sums = BallSums::new(grid, &e);
    center_grid(grid)
        .iter()
        .map(|q| sums.sum(*q, delta))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Max over centers of [`local_entropy`] at radius `delta`.
pub fn local_entropy_max(n: &[f64], grid: &Grid, delta: f64) -> Result<f64> {
    check_nonnegative(n)?;
    let phi = CutoffPhi::new(delta, [0.0, 0.0])?;
    match grid {
        Grid::Radial(_) => local_entropy(n, grid, [0.0, 0.0], delta),
        Grid::Rect(g) => {
            let density: Vec<f64> = n.iter().map(|v| n_log_n(*v) * g.cell_area()).collect();
            let rx = (delta / g.hx).ceil() as isize + 1;
            let ry = (delta / g.hy).ceil() as isize + 1;
            let mut best = f64::NEG_INFINITY;
            for q in center_grid(grid) {
                let ci = (q[0] / g.hx).round() as isize;
                let cj = (q[1] / g.hy).round() as isize;
                let mut total = 0.0;
                for j in (cj - ry).max(0)..(cj + ry).min(g.ny as isize) {
                    for i in (ci - rx).max(0)..(ci + rx).min(g.nx as isize) {
                        let x = g.center(i as usize, j as usize);
                        let rho = ((x[0] - q[0]).powi(2) + (x[1] - q[1]).powi(2)).sqrt();
                        if rho < delta {
                            total += density[g.idx(i as usize, j as usize)] * phi.radial_value(rho).powi(3);
                        }
                    }
                }
                best = best.max(total);
            }
            Ok(best)
        }
    }
}

/// Boundedness verdict on a series of `‖n‖∞` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNormVerdict {
    pub first_half_max: f64,
    pub final_half_max: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Tolerated growth of the final-half maximum.
pub const SUP_NORM_GROWTH: f64 = 0.05;

/// Pass iff the maximum over the final half of the records is at most
/// `1.05` times the maximum over the first half. Needs at least 8 records.
pub fn sup_norm_monitor(linf: &[f64]) -> Result<SupNormVerdict> {
    if linf.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "sup-norm monitor needs at least 8 records, got {}",
            linf.len()
        )));
    }
    let mid = linf.len() / 2;
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (max(&linf[..mid]), max(&linf[mid..]));
    Ok(SupNormVerdict {
        first_half_max: a,
        final_half_max: b,
        ratio: b / a,
        pass: b <= (1.0 + SUP_NORM_GROWTH) * a,
    })
}

/// Max of the final quarter of `series` against the max of the whole series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalGrowth {
    pub final_quarter_max: f64,
    pub series_max: f64,
    pub pass: bool,
}

pub fn terminal_growth(series: &[f64]) -> Result<TerminalGrowth> {
    if series.is_empty() {
        return Err(Error::InvalidInput("empty series".into()));
    }
    let start = series.len() - series.len().div_ceil(4);
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (max(&series[start..]), max(series));
    Ok(TerminalGrowth {
        final_quarter_max: a,
        series_max: b,
        pass: a <= b,
    })
}

/// Everything recorded at one record time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub entropy: f64,
    pub linf: f64,
    pub grad_c_l2: f64,
    pub min_c: f64,
    pub max_c: f64,
    pub local_grad_max: f64,
    pub local_entropy_max: f64,
    pub elliptic_iterations: usize,
    /// `½γ²|∂Ω| − ∫|∇c|²`.
    pub energy_margin: f64,
    /// `min c`.
    pub lower_margin: f64,
    /// `γ − max c`.
    pub upper_margin: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 13] = [
        "t",
        "mass",
        "entropy",
        "linf",
        "grad_c_l2",
        "min_c",
        "max_c",
        "local_grad_max",
        "local_entropy_max",
        "elliptic_iterations",
        "energy_margin",
        "lower_margin",
        "upper_margin",
    ];

    pub fn compute(
        t: f64,
        n: &[f64],
        c: &[f64],
        grid: &Grid,
        gamma: f64,
        local_delta: f64,
        elliptic_iterations: usize,
    ) -> Result<Self> {
        let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
        let max_c = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let energy = grad_c_l2(c, grid);
        Ok(Self {
            t,
            mass: mass(n, grid),
            entropy: entropy(n, grid)?,
            linf: n.iter().copied().fold(0.0, f64::max),
            grad_c_l2: energy,
            min_c,
            max_c,
            local_grad_max: local_gradient_max(c, grid, local_delta),
            local_entropy_max: local_entropy_max(n, grid, local_delta)?,
            elliptic_iterations,
            energy_margin: energy_bound(gamma, grid) - energy,
            lower_margin: min_c,
            upper_margin: gamma - max_c,
        })
    }
}
