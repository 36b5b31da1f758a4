//! Radially symmetric system on a ball of radius `R` in `d ≥ 2` dimensions.
//!
//! `n` is stepped conservatively in the measure `σ_d r^{d−1} dr`; the
//! signal gradient `c_r` comes from the integral identity
//! `c_r(r) = r^{1−d} ∫₀^r ρ^{d−1} n c dρ`, which the discrete elliptic
//! solution satisfies face by face. The cumulative mass
//! `Q(r) = ∫_{B_r} n` is checked against `M₀ r^d`, and a second integrator
//! evolves `Q` directly for cross-checking.

use crate::elliptic::solve_signal;
use crate::error::{Error, Result};
use crate::model::field::ScalarField;
use crate::model::grid::{unit_sphere_area, Grid, RadialGrid};
use crate::model::scenario::BoundaryData;
use crate::model::sensitivity::RadialSensitivity;
use crate::parabolic::{
    admissible_dt, cfl_dt, positivity_dt, step_with_velocity, FaceField, FaceVelocity, StepReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub grid: RadialGrid,
    pub n: ScalarField,
    pub c: ScalarField,
    pub t: f64,
}

/// Constants of the radial bound chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBounds {
    /// `M₀`, the slope of the comparison function `W = M₀ r^d`.
    pub m_big: f64,
    /// `m₀`, the lower bound of `c` at the intermediate radius.
    pub m_small: f64,
    pub c_star: f64,
    pub dim: usize,
    pub radius: f64,
    pub sigma: f64,
    pub gamma: f64,
}

impl RadialBounds {
    /// Floor below which a singular `χ` is never evaluated.
    pub fn c_floor(&self) -> f64 {
        self.c_star / 10.0
    }

    /// `M₀ r^d`.
    pub fn comparison(&self, r: f64) -> f64 {
        self.m_big * r.powi(self.dim as i32)
    }

    /// Upper envelope `γ M₀ r / σ_d` of `c_r`.
    pub fn gradient_envelope(&self, r: f64) -> f64 {
        self.gamma * self.m_big * r / self.sigma
    }
}

/// Elliptic and stepping parameters shared by both radial integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSettings {
    pub boundary: BoundaryData,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Scale applied to every step limit.
    pub safety: f64,
    /// When set, a singular `χ` aborts once `min c` drops below this value.
    pub c_floor: Option<f64>,
}

impl RadialSettings {
    pub fn new(boundary: BoundaryData) -> Self {
        Self {
            boundary,
            tolerance: 1e-11,
            max_iterations: 20_000,
            safety: 0.9,
            c_floor: None,
        }
    }
}

/// `Q` at the faces `r_f = f h`: `Q_0 = 0`, `Q_f = Σ_{k<f} w_k n_k`.
pub fn cumulative_mass(n: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let mut q = Vec::with_capacity(n.len() + 1);
    let mut acc = 0.0;
    q.push(0.0);
    for (v, w) in n.iter().zip(grid.weights()) {
        acc += v * w;
        q.push(acc);
    }
    q
}

/// `M₀ = max{‖n₀‖₁ / R^d, (σ_d/d) ‖n₀‖∞}`.
pub fn compute_m0(l1: f64, linf: f64, dim: usize, radius: f64) -> Result<f64> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(l1) && ok(linf) && ok(radius)) || dim < 2 {
        return Err(Error::InvalidInput(format!(
            "M0 needs positive finite norms, radius and d >= 2 (l1={l1}, linf={linf}, R={radius}, d={dim})"
        )));
    }
    let sigma = unit_sphere_area(dim);
    Ok((l1 / radius.powi(dim as i32)).max(sigma / dim as f64 * linf))
}

/// `m₀ = (γ/2)(M₀R/σ_d + 1)^{−1}` and `c* = m₀ exp(−½ M₀R²/σ_d)`.
pub fn compute_bounds(m_big: f64, gamma: f64, radius: f64, dim: usize) -> Result<RadialBounds> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    if !(ok(m_big) && ok(gamma) && ok(radius)) || dim < 2 {
        return Err(Error::InvalidInput(format!(
            "bounds need positive finite M0, gamma, radius and d >= 2 (M0={m_big}, gamma={gamma}, R={radius}, d={dim})"
        )));
    }
    let sigma = unit_sphere_area(dim);
    let m_small = 0.5 * gamma / (m_big * radius / sigma + 1.0);
    let c_star = m_small * (-0.5 * m_big * radius * radius / sigma).exp();
    Ok(RadialBounds {
        m_big,
        m_small,
        c_star,
        dim,
        radius,
        sigma,
        gamma,
    })
}

/// `c_r` at every face by the integral formula; `0` at the origin.
pub fn signal_gradient(n: &[f64], c: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.nr + 1];
    let mut acc = 0.0;
    for i in 0..grid.nr {
        acc += grid.weights()[i] * n[i] * c[i];
        out[i + 1] = acc / grid.face_area(i + 1);
    }
    out
}

/// Face velocities `χ(r_f, n_f, c_f) c_r(r_f)` on interior faces.
pub fn radial_velocity(
    state: &RadialState,
    chi: &dyn RadialSensitivity,
    c_floor: Option<f64>,
) -> Result<FaceVelocity> {
    radial_face_velocity(&state.n.values, &state.c.values, &state.grid, chi, c_floor, state.t)
}

/// [`radial_velocity`] on bare arrays; `t` only labels error messages.
pub fn radial_face_velocity(
    n: &[f64],
    c: &[f64],
    g: &RadialGrid,
    chi: &dyn RadialSensitivity,
    c_floor: Option<f64>,
    t: f64,
) -> Result<FaceVelocity> {
    if n.len() != g.nr || c.len() != g.nr {
        return Err(Error::InvalidInput("fields do not match the radial grid".into()));
    }
    if chi.singular_at_zero() {
        let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = c_floor.unwrap_or(0.0);
        if !(min_c > floor) {
            return Err(Error::BoundViolation(format!(
                "min c = {min_c:e} reached the floor {floor:e} of the singular sensitivity at t = {t}"
            )));
        }
    }
    let cr = signal_gradient(n, c, g);
    let mut v = vec![0.0; g.nr + 1];
    for f in 1..g.nr {
        let chi_f = chi.eval(g.face_radius(f), 0.5 * (n[f - 1] + n[f]), 0.5 * (c[f - 1] + c[f]));
        v[f] = chi_f * cr[f];
        if !v[f].is_finite() {
            return Err(Error::NonFinite(format!("radial drift at face {f}")));
        }
    }
    Ok(FaceField::Radial { r: v })
}

/// Largest step for which the induced update of `Q` is monotone, which is
/// what carries `Q ≤ M₀ r^d` from one step to the next.
pub fn q_monotone_dt(velocity: &FaceVelocity, grid: &RadialGrid) -> f64 {
    let FaceField::Radial { r: v } = velocity else {
        return f64::NAN;
    };
    let w = grid.weights();
    let mut worst = 0.0f64;
    for f in 1..grid.nr {
        let a = grid.face_area(f);
        let rate = a / (w[f] * grid.h)
            + a / (w[f - 1] * grid.h)
            + a * (v[f].max(0.0) / w[f - 1] + (-v[f]).max(0.0) / w[f]);
        worst = worst.max(rate);
    }
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// The step refused beyond by [`step_radial`].
pub fn radial_admissible_dt(velocity: &FaceVelocity, grid: &RadialGrid) -> f64 {
    admissible_dt(velocity, &Grid::Radial(grid.clone())).min(q_monotone_dt(velocity, grid))
}

/// The step a run takes: every limit scaled by `safety`.
pub fn radial_step_dt(velocity: &FaceVelocity, grid: &RadialGrid, safety: f64) -> f64 {
    let whole = Grid::Radial(grid.clone());
    cfl_dt(velocity, &whole, safety)
        .min(safety * positivity_dt(velocity, &whole))
        .min(safety * q_monotone_dt(velocity, grid))
}

impl RadialState {
    /// Solves for the signal of `n` and returns the state at time `t`.
    pub fn new(grid: RadialGrid, n: Vec<f64>, t: f64, settings: &RadialSettings) -> Result<Self> {
        if n.len() != grid.nr {
            return Err(Error::InvalidInput(format!(
                "density has {} values, grid has {} cells",
                n.len(),
                grid.nr
            )));
        }
        let whole = Grid::Radial(grid.clone());
        let sol = solve_signal(
            &whole,
            &n,
            &settings.boundary,
            settings.tolerance,
            settings.max_iterations,
            None,
        )?;
        Ok(Self {
            grid,
            n: ScalarField::density(n),
            c: sol.v,
            t,
        })
    }

    pub fn cumulative_mass(&self) -> Vec<f64> {
        cumulative_mass(&self.n.values, &self.grid)
    }

    pub fn signal_gradient(&self) -> Vec<f64> {
        signal_gradient(&self.n.values, &self.c.values, &self.grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialStep {
    pub state: RadialState,
    pub report: StepReport,
    pub iterations: usize,
}

/// One explicit step of `n` followed by a fresh signal solve.
pub fn step_radial(
    state: &RadialState,
    chi: &dyn RadialSensitivity,
    dt: f64,
    settings: &RadialSettings,
) -> Result<RadialStep> {
    let velocity = radial_velocity(state, chi, settings.c_floor)?;
    step_radial_with_velocity(state, &velocity, dt, settings)
}

pub fn step_radial_with_velocity(
    state: &RadialState,
    velocity: &FaceVelocity,
    dt: f64,
    settings: &RadialSettings,
) -> Result<RadialStep> {
    let q_limit = q_monotone_dt(velocity, &state.grid);
    if dt > q_limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation {
            dt,
            admissible: radial_admissible_dt(velocity, &state.grid),
        });
    }
    let whole = Grid::Radial(state.grid.clone());
    let (n, report) = step_with_velocity(&state.n.values, velocity, dt, &whole)?;
    let sol = solve_signal(
        &whole,
        &n,
        &settings.boundary,
        settings.tolerance,
        settings.max_iterations,
        Some(&state.c.values),
    )?;
    Ok(RadialStep {
        state: RadialState {
            grid: state.grid.clone(),
            n: ScalarField::density(n),
            c: sol.v,
            t: state.t + dt,
        },
        report,
        iterations: sol.iterations,
    })
}

/// Runs [`step_radial`] and returns `Q` at each requested time, landing on
/// them exactly. `times` must be nondecreasing and not before `state.t`.
pub fn run_radial_to(
    state: RadialState,
    chi: &dyn RadialSensitivity,
    settings: &RadialSettings,
    times: &[f64],
) -> Result<(RadialState, Vec<Vec<f64>>)> {
    let mut state = state;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < state.t {
            return Err(Error::InvalidInput(format!(
                "record time {target} precedes the state time {}",
                state.t
            )));
        }
        while state.t < target {
            let velocity = radial_velocity(&state, chi, settings.c_floor)?;
            let mut dt = radial_step_dt(&velocity, &state.grid, settings.safety);
            if state.t + dt >= target {
                dt = target - state.t;
            }
            let mut next = step_radial_with_velocity(&state, &velocity, dt, settings)?.state;
            if next.t >= target || target - next.t < 1e-14 * target.max(1.0) {
                next.t = target;
            }
            state = next;
        }
        out.push(state.cumulative_mass());
    }
    Ok((state, out))
}

/// Worst slack of `Q ≤ M₀ r^d` over a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBoundReport {
    /// `min over (r, t) of M₀ r^d − Q(r, t)`.
    pub min_margin: f64,
    pub worst_r: f64,
    pub worst_t: f64,
    /// `min_margin ≥ −10⁻⁸ M₀ R^d`.
    pub pass: bool,
}

/// `profiles` pairs record times with face values of `Q`.
pub fn check_q_bound(profiles: &[(f64, Vec<f64>)], grid: &RadialGrid, m_big: f64) -> QBoundReport {
    let mut report = QBoundReport {
        min_margin: f64::INFINITY,
        worst_r: 0.0,
        worst_t: 0.0,
        pass: true,
    };
    for (t, q) in profiles {
        for (f, qf) in q.iter().enumerate() {
            let r = grid.face_radius(f);
            let margin = m_big * r.powi(grid.dim as i32) - qf;
            if margin < report.min_margin || margin.is_nan() {
                report.min_margin = margin;
                report.worst_r = r;
                report.worst_t = *t;
            }
        }
    }
    let allowance = 1e-8 * m_big * grid.radius.powi(grid.dim as i32);
    report.pass = report.min_margin >= -allowance;
    report
}

/// Output of [`evolve_q_direct`].
#[derive(Debug, Clone, PartialEq)]
pub struct QTrajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
    pub steps: usize,
}

/// Cell densities `(Q_{i+1} − Q_i) / |shell_i|` with exact shell volumes.
fn shell_density(q: &[f64], shells: &[f64]) -> Vec<f64> {
    shells
        .iter()
        .enumerate()
        .map(|(i, s)| (q[i + 1] - q[i]) / s)
        .collect()
}

/// Evolves `Q_t = r^{d−1}(r^{1−d} Q_r)_r − Q_r χ c_r` on the faces with
/// `Q(0) = 0` and `Q(R)` fixed, and returns `Q` at the requested times.
///
/// Diffusion differences the shell-averaged density `d ΔQ / (r_{+}^d − r_{−}^d)`,
/// which makes `M₀ r^d` an exact steady state; drift uses one-sided `Q_r`
/// taken upwind. The signal is re-solved from the recovered density after
/// every step.
pub fn evolve_q_direct(
    q0: &[f64],
    grid: &RadialGrid,
    chi: &dyn RadialSensitivity,
    settings: &RadialSettings,
    times: &[f64],
) -> Result<QTrajectory> {
    let nr = grid.nr;
    if q0.len() != nr + 1 {
        return Err(Error::InvalidInput(format!(
            "Q has {} face values, grid has {} faces",
            q0.len(),
            nr + 1
        )));
    }
    if q0[0] != 0.0 {
        return Err(Error::InvalidInput("Q must vanish at the origin".into()));
    }
    if q0.windows(2).any(|w| w[1] < w[0]) || q0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("Q must be finite and nondecreasing".into()));
    }
    let dim = grid.dim as i32;
    let sigma = grid.sigma;
    let shells: Vec<f64> = (0..nr)
        .map(|i| sigma / grid.dim as f64 * (grid.face_radius(i + 1).powi(dim) - grid.face_radius(i).powi(dim)))
        .collect();
    let whole = Grid::Radial(grid.clone());
    let total = q0[nr];
    let tol_mono = 1e-8 * total.max(f64::MIN_POSITIVE);

    let mut q = q0.to_vec();
    let mut t = 0.0;
    let mut c_prev: Option<Vec<f64>> = None;
    let mut out = QTrajectory {
        times: Vec::with_capacity(times.len()),
        profiles: Vec::with_capacity(times.len()),
        steps: 0,
    };
    for &target in times {
        if target < t {
            return Err(Error::InvalidInput(format!("record times must be nondecreasing, got {target} after {t}")));
        }
        while t < target {
            let n = shell_density(&q, &shells);
            let n_solve: Vec<f64> = n.iter().map(|v| v.max(0.0)).collect();
            let sol = solve_signal(
                &whole,
                &n_solve,
                &settings.boundary,
                settings.tolerance,
                settings.max_iterations,
                c_prev.as_deref(),
            )?;
            let c = sol.v.values;
            if chi.singular_at_zero() {
                let min_c = c.iter().copied().fold(f64::INFINITY, f64::min);
                let floor = settings.c_floor.unwrap_or(0.0);
                if !(min_c > floor) {
                    return Err(Error::BoundViolation(format!(
                        "min c = {min_c:e} reached the floor {floor:e} at t = {t}"
                    )));
                }
            }
            let cr = signal_gradient(&n_solve, &c, grid);
            let mut v = vec![0.0; nr + 1];
            let mut rate_max = 0.0f64;
            for f in 1..nr {
                let r = grid.face_radius(f);
                let chi_f = chi.eval(r, 0.5 * (n_solve[f - 1] + n_solve[f]), 0.5 * (c[f - 1] + c[f]));
                v[f] = chi_f * cr[f];
                if !v[f].is_finite() {
                    return Err(Error::NonFinite(format!("Q-drift at face {f}")));
                }
                let rp = grid.face_area(f) / sigma;
                let rate = sigma * rp / grid.h * (1.0 / shells[f] + 1.0 / shells[f - 1])
                    + v[f].abs() / grid.h;
                rate_max = rate_max.max(rate);
            }
            let mut dt = if rate_max > 0.0 {
                settings.safety / rate_max
            } else {
                target - t
            };
            if t + dt >= target {
                dt = target - t;
            }
            let mut next = q.clone();
            for f in 1..nr {
                let rp = grid.face_area(f) / sigma;
                let g_hi = sigma * n[f];
                let g_lo = sigma * n[f - 1];
                let diffusion = rp * (g_hi - g_lo) / grid.h;
                let qr = if v[f] >= 0.0 {
                    (q[f] - q[f - 1]) / grid.h
                } else {
                    (q[f + 1] - q[f]) / grid.h
                };
                next[f] = q[f] + dt * (diffusion - v[f] * qr);
            }
            if let Some(f) = (0..nr).find(|&f| next[f + 1] < next[f] - tol_mono) {
                return Err(Error::Internal(format!(
                    "Q lost monotonicity between faces {f} and {} at t = {t}",
                    f + 1
                )));
            }
            q = next;
            c_prev = Some(c);
            t = if t + dt >= target || target - (t + dt) < 1e-14 * target.max(1.0) {
                target
            } else {
                t + dt
            };
            out.steps += 1;
        }
        out.times.push(target);
        out.profiles.push(q.clone());
    }
    Ok(out)
}
