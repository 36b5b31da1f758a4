//! Running scenarios, checking recorded trajectories, and the on-disk
//! layout shared by `run` and `verify`.
//!
//! A run records `(n, c)` snapshots at the record cadence. Every check is a
//! function of the snapshots alone, so re-checking a written trajectory
//! reproduces the in-run margins bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::{
    find_delta_for_epsilon, grad_c_l2_margin, mass, sup_norm_monitor, terminal_growth, Certificate,
    DiagnosticsRecord, ENERGY_ALLOWANCE,
};
use crate::elliptic::solve_signal;
use crate::error::{Error, Result};
use crate::io::{
    read_snapshot, write_certificate_csv, write_diagnostics_csv, write_radial_csv, write_snapshot,
    RadialRecord, SnapshotShape,
};
use crate::model::grid::Grid;
use crate::model::initial::make_initial_density;
use crate::model::scenario::{DtControl, ScenarioConfig};
use crate::model::sensitivity::{RadialSensitivity, SensitivityModel, TensorSensitivity};
use crate::parabolic::{
    admissible_dt, cfl_dt, detect_blowup, drift_velocity, positivity_dt, step_with_velocity, FaceVelocity,
};
use crate::radial::{
    compute_bounds, compute_m0, cumulative_mass, radial_admissible_dt, radial_face_velocity, radial_step_dt,
    signal_gradient, RadialBounds,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    BlowUp,
    EllipticFailure,
    BoundViolation,
    /// A scheme invariant (positivity, monotonicity of `Q`, finiteness)
    /// broke, which signals a bug rather than a property of the data.
    InternalError,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUp => "blow-up",
            RunStatus::EllipticFailure => "elliptic-failure",
            RunStatus::BoundViolation => "bound-violation",
            RunStatus::InternalError => "internal-error",
        }
    }

    fn of(err: &Error) -> Self {
        match err {
            Error::NonConvergence { .. } => RunStatus::EllipticFailure,
            Error::BoundViolation(_) => RunStatus::BoundViolation,
            _ => RunStatus::InternalError,
        }
    }
}

/// Exit status of a run or verification: `0` when completed with every
/// check passing, `1` for failed checks, bound violations and blow-up,
/// `3` for solver failures. Configuration errors (`2`) never reach here.
pub fn exit_code(status: RunStatus, checks: &[CheckResult]) -> i32 {
    match status {
        RunStatus::Completed if checks.iter().all(|c| c.pass) => 0,
        RunStatus::Completed | RunStatus::BlowUp | RunStatus::BoundViolation => 1,
        RunStatus::EllipticFailure | RunStatus::InternalError => 3,
    }
}

/// `(t, n, c)` at one record time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    pub t: f64,
    pub n: Vec<f64>,
    pub c: Vec<f64>,
}

/// Quantities tracked at every step, not only at records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub steps: usize,
    pub min_c: f64,
    pub max_c: f64,
    /// `max |m(t) − m(0)| / m(0)` over all steps.
    pub max_mass_drift: f64,
    pub max_cfl_ratio: f64,
    pub elliptic_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: ScenarioConfig,
    pub grid: Grid,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<SnapshotPair>,
    pub radial_records: Vec<RadialRecord>,
    pub bounds: Option<RadialBounds>,
    pub stats: StepStats,
    pub status: RunStatus,
    pub message: Option<String>,
    pub final_t: f64,
    pub wall_time: f64,
}

enum Model<'a> {
    Tensor(&'a dyn TensorSensitivity),
    Radial(&'a dyn RadialSensitivity, Option<f64>),
}

impl Model<'_> {
    fn velocity(&self, n: &[f64], c: &[f64], grid: &Grid, t: f64) -> Result<FaceVelocity> {
        match (self, grid) {
            (Model::Tensor(s), Grid::Rect(g)) => drift_velocity(n, c, *s, g),
            (Model::Radial(chi, floor), Grid::Radial(g)) => radial_face_velocity(n, c, g, *chi, *floor, t),
            _ => Err(Error::config("sensitivity", "does not match the geometry")),
        }
    }

    fn step_limit(&self, v: &FaceVelocity, grid: &Grid, safety: f64) -> f64 {
        match grid {
            Grid::Rect(_) => cfl_dt(v, grid, safety).min(safety * positivity_dt(v, grid)),
            Grid::Radial(g) => radial_step_dt(v, g, safety),
        }
    }

    fn admissible(&self, v: &FaceVelocity, grid: &Grid) -> f64 {
        match grid {
            Grid::Rect(_) => admissible_dt(v, grid),
            Grid::Radial(g) => radial_admissible_dt(v, g),
        }
    }
}

/// Bounds of the radial chain for an initial density.
pub fn radial_bounds_for(n0: &[f64], grid: &Grid, gamma: f64) -> Result<Option<RadialBounds>> {
    let Grid::Radial(g) = grid else {
        return Ok(None);
    };
    let l1 = mass(n0, grid);
    let linf = n0.iter().copied().fold(0.0, f64::max);
    let m = compute_m0(l1, linf, g.dim, g.radius)
        .map_err(|_| Error::config("initial", "radial bounds need an initial density with positive mass"))?;
    compute_bounds(m, gamma, g.radius, g.dim).map(Some)
}

/// Radial margins of one snapshot.
pub fn radial_record(t: f64, n: &[f64], c: &[f64], grid: &Grid, bounds: &RadialBounds) -> Option<RadialRecord> {
    let Grid::Radial(g) = grid else {
        return None;
    };
    let q = cumulative_mass(n, g);
    let cr = signal_gradient(n, c, g);
    let mut q_margin = f64::INFINITY;
    let mut cr_excess = f64::NEG_INFINITY;
    for f in 0..=g.nr {
        let r = g.face_radius(f);
        q_margin = q_margin.min(bounds.comparison(r) - q[f]);
        cr_excess = cr_excess.max(cr[f] - bounds.gradient_envelope(r));
    }
    Some(RadialRecord {
        t,
        q_margin,
        min_c: c.iter().copied().fold(f64::INFINITY, f64::min),
        c_star: bounds.c_star,
        cr_excess,
    })
}

/// Lagrange extrapolation of the signal through up to three time levels.
fn extrapolate(history: &[(f64, Vec<f64>)], current: (f64, &[f64]), t_new: f64) -> Vec<f64> {
    let mut nodes: Vec<(f64, &[f64])> = history.iter().map(|(t, c)| (*t, c.as_slice())).collect();
    nodes.push(current);
    let weights: Vec<f64> = (0..nodes.len())
        .map(|i| {
            (0..nodes.len())
                .filter(|&j| j != i)
                .map(|j| (t_new - nodes[j].0) / (nodes[i].0 - nodes[j].0))
                .product()
        })
        .collect();
    let mut out = vec![0.0; current.1.len()];
    for ((_, c), w) in nodes.iter().zip(&weights) {
        for (o, v) in out.iter_mut().zip(c.iter()) {
            *o += w * v;
        }
    }
    out
}

fn land(t: f64, target: f64) -> bool {
    t >= target || target - t <= 1e-12 * target.abs().max(1.0)
}

/// Runs a scenario to `t_end` or until it fails.
///
/// Configuration problems are returned as errors; failures during the run
/// are reported through [`Trajectory::status`] with the records up to the
/// failure.
pub fn run(scenario: &ScenarioConfig) -> Result<Trajectory> {
    let started = Instant::now();
    scenario.validate()?;
    let grid = scenario.geometry.build()?;
    let init = make_initial_density(&scenario.initial, &grid)?;
    if init.linf >= scenario.blowup_threshold {
        return Err(Error::config(
            "blowup_threshold",
            format!("must exceed the initial maximum {}", init.linf),
        ));
    }
    let boundary = scenario.boundary;
    let gamma = boundary.gamma;
    let bounds = radial_bounds_for(&init.field.values, &grid, gamma)?;
    let tensor;
    let radial;
    let model = match scenario.sensitivity {
        SensitivityModel::Tensor(p) => {
            tensor = p;
            Model::Tensor(&tensor)
        }
        SensitivityModel::Radial(p) => {
            radial = p;
            let floor = if p.singular_at_zero() {
                bounds.map(|b| b.c_floor())
            } else {
                None
            };
            Model::Radial(&radial, floor)
        }
    };
    let (tol, max_it) = (scenario.elliptic_tolerance, scenario.elliptic_max_iterations);

    let mut traj = Trajectory {
        scenario: scenario.clone(),
        grid: grid.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
        radial_records: Vec::new(),
        bounds,
        stats: StepStats {
            steps: 0,
            min_c: f64::INFINITY,
            max_c: f64::NEG_INFINITY,
            max_mass_drift: 0.0,
            max_cfl_ratio: 0.0,
            elliptic_iterations: 0,
        },
        status: RunStatus::Completed,
        message: None,
        final_t: 0.0,
        wall_time: 0.0,
    };

    let mut n = init.field.values;
    let first = match solve_signal(&grid, &n, &boundary, tol, max_it, None) {
        Ok(s) => s,
        Err(e) => {
            traj.status = RunStatus::of(&e);
            traj.message = Some(e.to_string());
            traj.wall_time = started.elapsed().as_secs_f64();
            return Ok(traj);
        }
    };
    let mut c = first.v.values;
    let mut last_iterations = first.iterations;
    traj.stats.elliptic_iterations += first.iterations;
    let mass0 = mass(&n, &grid);

    let record = |traj: &mut Trajectory, t: f64, n: &[f64], c: &[f64], iterations: usize| -> Result<()> {
        traj.records.push(DiagnosticsRecord::compute(
            t,
            n,
            c,
            &grid,
            gamma,
            scenario.local_delta,
            iterations,
        )?);
        if let Some(b) = &traj.bounds {
            traj.radial_records.extend(radial_record(t, n, c, &grid, b));
        }
        traj.snapshots.push(SnapshotPair {
            t,
            n: n.to_vec(),
            c: c.to_vec(),
        });
        Ok(())
    };
    let track_c = |stats: &mut StepStats, c: &[f64]| {
        for v in c {
            stats.min_c = stats.min_c.min(*v);
            stats.max_c = stats.max_c.max(*v);
        }
    };
    track_c(&mut traj.stats, &c);
    record(&mut traj, 0.0, &n, &c, last_iterations)?;

    let mut t = 0.0;
    let mut since_record = 0usize;
    let mut last_record_t = 0.0;
    // earlier signals for extrapolating the next elliptic initial iterate
    let mut history: Vec<(f64, Vec<f64>)> = Vec::new();
    let t_end = scenario.t_end;
    let outcome: Result<()> = (|| {
        while !land(t, t_end) {
            let v = model.velocity(&n, &c, &grid, t)?;
            let mut dt = match scenario.dt_control {
                DtControl::Cfl { safety } => model.step_limit(&v, &grid, safety),
                DtControl::Fixed(dt) => {
                    let admissible = model.admissible(&v, &grid);
                    if dt > admissible * (1.0 + 1e-12) {
                        return Err(Error::config(
                            "dt",
                            format!("fixed step {dt:e} exceeds the admissible step {admissible:e} at t = {t}"),
                        ));
                    }
                    dt
                }
            };
            let next_record = if scenario.cadence.time > 0.0 {
                last_record_t + scenario.cadence.time
            } else {
                f64::INFINITY
            };
            let target = if land(next_record, t_end) { t_end } else { next_record.min(t_end) };
            if t + dt >= target || land(t + dt, target) {
                dt = target - t;
            }
            if !(dt > 0.0) {
                return Err(Error::Internal(format!("step size collapsed to {dt:e} at t = {t}")));
            }
            let (next, report) = step_with_velocity(&n, &v, dt, &grid)?;
            traj.stats.max_cfl_ratio = traj.stats.max_cfl_ratio.max(report.cfl_ratio);
            let guess = if grid.as_rect().is_some() {
                extrapolate(&history, (t, &c), t + dt)
            } else {
                c.clone()
            };
            let sol = solve_signal(&grid, &next, &boundary, tol, max_it, Some(&guess))?;
            let old = std::mem::replace(&mut c, sol.v.values);
            if history.len() == 2 {
                history.remove(0);
            }
            history.push((t, old));
            n = next;
            last_iterations = sol.iterations;
            traj.stats.elliptic_iterations += sol.iterations;
            traj.stats.steps += 1;
            track_c(&mut traj.stats, &c);
            let drift = ((mass(&n, &grid) - mass0) / mass0).abs();
            if mass0 > 0.0 {
                traj.stats.max_mass_drift = traj.stats.max_mass_drift.max(drift);
            }
            t = if land(t + dt, target) { target } else { t + dt };
            since_record += 1;
            if detect_blowup(&n, scenario.blowup_threshold) {
                record(&mut traj, t, &n, &c, last_iterations)?;
                traj.status = RunStatus::BlowUp;
                traj.message = Some(format!(
                    "max n exceeded {} at t = {t}",
                    scenario.blowup_threshold
                ));
                return Ok(());
            }
            let due = (scenario.cadence.steps > 0 && since_record >= scenario.cadence.steps)
                || land(t, next_record)
                || land(t, t_end);
            if due {
                record(&mut traj, t, &n, &c, last_iterations)?;
                since_record = 0;
                last_record_t = t;
            }
        }
        Ok(())
    })();
    traj.final_t = t;
    if let Err(e) = outcome {
        if matches!(e, Error::Config { .. }) {
            return Err(e);
        }
        traj.status = RunStatus::of(&e);
        traj.message = Some(e.to_string());
    }
    traj.wall_time = started.elapsed().as_secs_f64();
    Ok(traj)
}

/// Names of every check, in report order.
pub const CHECK_NAMES: [&str; 9] = [
    "max-principle",
    "mass",
    "energy",
    "sup-norm",
    "entropy-growth",
    "certificate",
    "q-bound",
    "c-lower",
    "cr-envelope",
];

/// Tolerances of the checks.
pub const C_RANGE_SLACK: f64 = 1e-12;
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;
pub const Q_BOUND_SLACK: f64 = 1e-8;
pub const C_STAR_SLACK: f64 = 1e-3;
pub const CR_SLACK: f64 = 1e-8;

/// A check passes iff its margin is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub margin: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            margin,
            pass: margin >= 0.0,
            detail,
        }
    }
}

/// Evaluates every enabled check on a list of snapshots.
///
/// `disabled` names checks to skip; unknown names are an error.
pub fn evaluate_checks(
    scenario: &ScenarioConfig,
    grid: &Grid,
    snapshots: &[SnapshotPair],
    disabled: &[String],
) -> Result<(Vec<CheckResult>, Option<Certificate>)> {
    if let Some(bad) = disabled.iter().find(|d| !CHECK_NAMES.contains(&d.as_str())) {
        return Err(Error::config("no-check", format!("unknown check `{bad}`")));
    }
    if snapshots.is_empty() {
        return Err(Error::InvalidInput("no snapshots to check".into()));
    }
    let on = |name: &str| !disabled.iter().any(|d| d == name);
    let gamma = scenario.boundary.gamma;
    let mut out = Vec::new();
    let mut certificate = None;

    if on("max-principle") {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in snapshots {
            for v in &s.c {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        out.push(CheckResult::new(
            "max-principle",
            lo.min(gamma - hi) + C_RANGE_SLACK,
            format!("min c = {lo:e}, max c = {hi:e}, gamma = {gamma}"),
        ));
    }
    if on("mass") {
        let m0 = mass(&snapshots[0].n, grid);
        let drift = snapshots
            .iter()
            .map(|s| ((mass(&s.n, grid) - m0) / m0).abs())
            .fold(0.0, f64::max);
        out.push(CheckResult::new(
            "mass",
            MASS_DRIFT_LIMIT - drift,
            format!("max relative drift {drift:e}"),
        ));
    }
    if on("energy") {
        let worst = snapshots
            .iter()
            .map(|s| grad_c_l2_margin(&s.c, grid, gamma))
            .fold(f64::INFINITY, f64::min);
        out.push(CheckResult::new(
            "energy",
            worst + ENERGY_ALLOWANCE,
            format!("min of bound minus gradient energy {worst:e}"),
        ));
    }
    let linf: Vec<f64> = snapshots
        .iter()
        .map(|s| s.n.iter().copied().fold(0.0, f64::max))
        .collect();
    if on("sup-norm") {
        out.push(match sup_norm_monitor(&linf) {
            Ok(v) => CheckResult::new(
                "sup-norm",
                (1.0 + crate::diagnostics::SUP_NORM_GROWTH) * v.first_half_max - v.final_half_max,
                format!("final/first half max ratio {}", v.ratio),
            ),
            Err(e) => CheckResult {
                name: "sup-norm".into(),
                margin: f64::NAN,
                pass: false,
                detail: e.to_string(),
            },
        });
    }
    if on("entropy-growth") {
        let series: Vec<f64> = snapshots
            .iter()
            .map(|s| crate::diagnostics::entropy(&s.n, grid))
            .collect::<Result<_>>()?;
        let g = terminal_growth(&series)?;
        out.push(CheckResult::new(
            "entropy-growth",
            g.series_max - g.final_quarter_max,
            format!("final quarter max {}, series max {}", g.final_quarter_max, g.series_max),
        ));
    }
    if on("certificate") {
        let eps = scenario.certificate_epsilon * gamma;
        let series: Vec<(f64, Vec<f64>)> = snapshots.iter().map(|s| (s.t, s.c.clone())).collect();
        let cert = find_delta_for_epsilon(&series, grid, eps)?;
        let margin = if cert.found {
            cert.delta
        } else {
            eps * eps - cert.worst_value
        };
        out.push(CheckResult::new(
            "certificate",
            margin,
            format!(
                "epsilon {eps}, delta {}, worst {:e} at q = ({}, {}), t = {}",
                cert.delta, cert.worst_value, cert.worst_q[0], cert.worst_q[1], cert.worst_t
            ),
        ));
        certificate = Some(cert);
    }
    if let Some(b) = radial_bounds_for(&snapshots[0].n, grid, gamma)? {
        let g = grid.as_radial().expect("radial bounds imply a radial grid");
        let records: Vec<RadialRecord> = snapshots
            .iter()
            .filter_map(|s| radial_record(s.t, &s.n, &s.c, grid, &b))
            .collect();
        if on("q-bound") {
            let worst = records.iter().map(|r| r.q_margin).fold(f64::INFINITY, f64::min);
            let slack = Q_BOUND_SLACK * b.m_big * g.radius.powi(g.dim as i32);
            out.push(CheckResult::new(
                "q-bound",
                worst + slack,
                format!("min of M0 r^d - Q = {worst:e}, M0 = {}", b.m_big),
            ));
        }
        if on("c-lower") {
            let worst = records.iter().map(|r| r.min_c).fold(f64::INFINITY, f64::min);
            out.push(CheckResult::new(
                "c-lower",
                worst - (b.c_star - C_STAR_SLACK),
                format!("min c = {worst}, c* = {}", b.c_star),
            ));
        }
        if on("cr-envelope") {
            let mut worst = f64::INFINITY;
            for s in snapshots {
                let cr = signal_gradient(&s.n, &s.c, g);
                for (f, v) in cr.iter().enumerate() {
                    worst = worst.min(*v).min(b.gradient_envelope(g.face_radius(f)) - v);
                }
            }
            out.push(CheckResult::new(
                "cr-envelope",
                worst + CR_SLACK,
                format!("min over faces of c_r and envelope - c_r: {worst:e}"),
            ));
        }
    }
    Ok((out, certificate))
}

/// Machine-readable run summary, printed as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema: u32,
    pub id: String,
    pub status: RunStatus,
    pub wall_time: f64,
    pub final_t: f64,
    pub steps: usize,
    pub checks: Vec<CheckResult>,
    pub files: Vec<String>,
    pub message: Option<String>,
    pub exit_code: i32,
}

impl RunSummary {
    pub fn new(traj: &Trajectory, checks: Vec<CheckResult>, files: Vec<String>) -> Self {
        let exit_code = exit_code(traj.status, &checks);
        Self {
            schema: 1,
            id: traj.scenario.id.clone(),
            status: traj.status,
            wall_time: traj.wall_time,
            final_t: traj.final_t,
            steps: traj.stats.steps,
            checks,
            files,
            message: traj.message.clone(),
            exit_code,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "scenario {}: {} at t = {} after {} steps ({:.2} s)\n",
            self.id,
            self.status.as_str(),
            self.final_t,
            self.steps,
            self.wall_time
        );
        if let Some(m) = &self.message {
            s.push_str(&format!("  {m}\n"));
        }
        for c in &self.checks {
            s.push_str(&format!(
                "  {:<15} {}  margin {:e}  ({})\n",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.margin,
                c.detail
            ));
        }
        s
    }
}

fn snapshot_path(dir: &Path, field: &str, index: usize) -> PathBuf {
    dir.join("snapshots").join(format!("{field}_{index:06}.txt"))
}

/// Writes `scenario.txt`, the snapshots, `diagnostics.csv`,
/// `certificate.csv` and, for radial runs, `radial.csv`. Returns the paths
/// written, relative to `dir`.
pub fn write_outputs(traj: &Trajectory, certificate: Option<&Certificate>, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir.join("snapshots")).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let scenario_path = dir.join("scenario.txt");
    fs::write(&scenario_path, traj.scenario.to_text()).map_err(|e| Error::io(&scenario_path, e))?;
    files.push("scenario.txt".to_string());
    let shape = SnapshotShape::of(&traj.grid);
    for (k, s) in traj.snapshots.iter().enumerate() {
        write_snapshot(&snapshot_path(dir, "n", k), s.t, shape, &s.n)?;
        write_snapshot(&snapshot_path(dir, "c", k), s.t, shape, &s.c)?;
    }
    files.push(format!("snapshots/ ({} pairs)", traj.snapshots.len()));
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj.records)?;
    files.push("diagnostics.csv".to_string());
    if let Some(c) = certificate {
        write_certificate_csv(&dir.join("certificate.csv"), std::slice::from_ref(c))?;
        files.push("certificate.csv".to_string());
    }
    if traj.bounds.is_some() {
        write_radial_csv(&dir.join("radial.csv"), &traj.radial_records)?;
        files.push("radial.csv".to_string());
    }
    Ok(files)
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub trajectory: Trajectory,
    pub checks: Vec<CheckResult>,
    pub certificate: Option<Certificate>,
    pub summary: RunSummary,
}

/// Runs, checks and (when the scenario names an output directory) writes a
/// scenario.
pub fn execute(scenario: &ScenarioConfig, disabled: &[String]) -> Result<Outcome> {
    if let Some(bad) = disabled.iter().find(|d| !CHECK_NAMES.contains(&d.as_str())) {
        return Err(Error::config("no-check", format!("unknown check `{bad}`")));
    }
    let trajectory = run(scenario)?;
    let (checks, certificate) = if trajectory.snapshots.is_empty() {
        (Vec::new(), None)
    } else {
        evaluate_checks(scenario, &trajectory.grid, &trajectory.snapshots, disabled)?
    };
    let files = match &scenario.output_dir {
        Some(dir) => write_outputs(&trajectory, certificate.as_ref(), dir)?,
        None => Vec::new(),
    };
    let summary = RunSummary::new(&trajectory, checks.clone(), files);
    if let Some(dir) = &scenario.output_dir {
        let p = dir.join("summary.json");
        fs::write(&p, summary.to_json_line() + "\n").map_err(|e| Error::io(&p, e))?;
    }
    Ok(Outcome {
        trajectory,
        checks,
        certificate,
        summary,
    })
}

/// Result of re-checking a written trajectory.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub scenario: ScenarioConfig,
    pub snapshots: usize,
    /// Time of the last snapshot.
    pub final_t: f64,
    pub checks: Vec<CheckResult>,
    pub certificate: Option<Certificate>,
    /// `Completed` when every check passes, `BoundViolation` otherwise.
    pub status: RunStatus,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.status, &self.checks)
    }
}

/// Loads `scenario.txt` and every snapshot pair from `dir`.
pub fn load_trajectory(dir: &Path) -> Result<(ScenarioConfig, Grid, Vec<SnapshotPair>)> {
    let scenario_path = dir.join("scenario.txt");
    if !scenario_path.is_file() {
        return Err(Error::Io {
            path: scenario_path.display().to_string(),
            reason: "missing scenario file; not a trajectory directory".into(),
        });
    }
    let scenario = ScenarioConfig::load(&scenario_path)?;
    let grid = scenario.geometry.build()?;
    let shape = SnapshotShape::of(&grid);
    let mut snapshots = Vec::new();
    for k in 0.. {
        let (np, cp) = (snapshot_path(dir, "n", k), snapshot_path(dir, "c", k));
        if !np.exists() && !cp.exists() {
            break;
        }
        let n = read_snapshot(&np)?;
        let c = read_snapshot(&cp)?;
        for (s, p) in [(&n, &np), (&c, &cp)] {
            if s.shape != shape {
                return Err(Error::Io {
                    path: p.display().to_string(),
                    reason: format!("shape {:?} does not match the scenario grid {shape:?}", s.shape),
                });
            }
        }
        if n.t != c.t {
            return Err(Error::Io {
                path: cp.display().to_string(),
                reason: format!("time {} differs from the density snapshot time {}", c.t, n.t),
            });
        }
        snapshots.push(SnapshotPair {
            t: n.t,
            n: n.values,
            c: c.values,
        });
    }
    if snapshots.is_empty() {
        return Err(Error::Io {
            path: snapshot_path(dir, "n", 0).display().to_string(),
            reason: "no snapshots found".into(),
        });
    }
    Ok((scenario, grid, snapshots))
}

/// Recomputes every check from the snapshots in `dir` and rewrites
/// `certificate.csv` there.
pub fn verify_dir(dir: &Path, disabled: &[String]) -> Result<VerifyReport> {
    let (scenario, grid, snapshots) = load_trajectory(dir)?;
    if let Some((k, _)) = snapshots
        .iter()
        .enumerate()
        .find(|(_, s)| s.n.iter().any(|v| *v < -crate::parabolic::POSITIVITY_SLACK))
    {
        return Ok(VerifyReport {
            scenario,
            snapshots: snapshots.len(),
            final_t: snapshots.last().map_or(0.0, |s| s.t),
            checks: vec![CheckResult {
                name: "positivity".into(),
                margin: f64::NAN,
                pass: false,
                detail: format!("snapshot {k} holds negative density"),
            }],
            certificate: None,
            status: RunStatus::BoundViolation,
        });
    }
    let (checks, certificate) = evaluate_checks(&scenario, &grid, &snapshots, disabled)?;
    if let Some(c) = &certificate {
        write_certificate_csv(&dir.join("certificate.csv"), std::slice::from_ref(c))?;
    }
    let status = if checks.iter().all(|c| c.pass) {
        RunStatus::Completed
    } else {
        RunStatus::BoundViolation
    };
    Ok(VerifyReport {
        scenario,
        snapshots: snapshots.len(),
        final_t: snapshots.last().map_or(0.0, |s| s.t),
        checks,
        certificate,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::initial::InitialSpec;
    use crate::model::scenario::GeometrySpec;
    use crate::model::sensitivity::TensorPreset;

    fn small() -> ScenarioConfig {
        let mut s = ScenarioConfig::new(
            "small",
            GeometrySpec::Rect2d {
                lx: 1.0,
                ly: 1.0,
                nx: 16,
                ny: 16,
            },
            SensitivityModel::Tensor(TensorPreset::Identity),
            InitialSpec::GaussianBump {
                amplitude: 2.0,
                width: 0.15,
                center: [0.5, 0.5],
                background: 0.1,
            },
        );
        s.t_end = 0.05;
        s.cadence.time = 0.005;
        s
    }

    #[test]
    fn small_run_completes_and_passes() {
        let out = execute(&small(), &[]).unwrap();
        assert_eq!(out.trajectory.status, RunStatus::Completed);
        assert!((out.trajectory.final_t - 0.05).abs() < 1e-15);
        for c in &out.checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(out.summary.exit_code, 0);
        let times: Vec<f64> = out.trajectory.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(times[0], 0.0);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn oversized_fixed_step_is_a_configuration_error() {
        let mut s = small();
        s.dt_control = DtControl::Fixed(0.01);
        assert!(matches!(run(&s), Err(Error::Config { .. })));
    }

    #[test]
    fn exit_codes() {
        let pass = CheckResult::new("mass", 1.0, String::new());
        let fail = CheckResult::new("mass", -1.0, String::new());
        assert_eq!(exit_code(RunStatus::Completed, &[pass.clone()]), 0);
        assert_eq!(exit_code(RunStatus::Completed, &[pass, fail]), 1);
        assert_eq!(exit_code(RunStatus::BlowUp, &[]), 1);
        assert_eq!(exit_code(RunStatus::BoundViolation, &[]), 1);
        assert_eq!(exit_code(RunStatus::EllipticFailure, &[]), 3);
        assert_eq!(exit_code(RunStatus::InternalError, &[]), 3);
    }

    #[test]
    fn unknown_check_names_are_rejected() {
        assert!(matches!(
            execute(&small(), &["nope".to_string()]),
            Err(Error::Config { .. })
        ));
    }
}
