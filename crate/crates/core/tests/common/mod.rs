//! Oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use chemosim::elliptic::{solve, solve_signal, BoundaryPoint, RobinData, RobinProblem};
use chemosim::model::grid::{Grid, Grid2D, RadialGrid};
use chemosim::model::scenario::BoundaryData;
use chemosim::radial::signal_gradient;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Dense system built cell by cell: the 5-point Laplacian plus screening,
/// with a ghost value behind every boundary face chosen so that
/// `(v_ghost − v)/h = q − g (v_ghost + v)/2`.
pub fn dense_system(
    g: &Grid2D,
    u: &[f64],
    f: &[f64],
    weight: &dyn Fn(BoundaryPoint) -> f64,
    q: &dyn Fn(BoundaryPoint) -> f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = g.nx * g.ny;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::from_column_slice(f);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = j * g.nx + i;
            let [x, y] = [(i as f64 + 0.5) * g.hx, (j as f64 + 0.5) * g.hy];
            a[(k, k)] += u[k];
            let neighbours = [
                (i > 0, k.wrapping_sub(1), g.hx, [0.0, y]),
                (i + 1 < g.nx, k + 1, g.hx, [g.lx, y]),
                (j > 0, k.wrapping_sub(g.nx), g.hy, [x, 0.0]),
                (j + 1 < g.ny, k + g.nx, g.hy, [x, g.ly]),
            ];
            for (inside, m, h, p) in neighbours {
                a[(k, k)] += 1.0 / (h * h);
                if inside {
                    a[(k, m)] -= 1.0 / (h * h);
                } else {
                    // v_ghost = (q + v (1/h − g/2)) / (1/h + g/2)
                    let (gw, qv) = (weight(p), q(p));
                    let den = 1.0 / h + 0.5 * gw;
                    a[(k, k)] -= (1.0 / h - 0.5 * gw) / den / (h * h);
                    b[k] += qv / den / (h * h);
                }
            }
        }
    }
    (a, b)
}

/// Worst max-norm gap between the iterative solver and a dense LU solve
/// over `instances` random problems alternating between 16² and 24² cells.
pub fn dense_oracle_worst(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for inst in 0..instances {
        let m = if inst % 2 == 0 { 16 } else { 24 };
        let g2 = Grid2D::new(1.0 + rng.gen::<f64>(), 1.0, m, m).unwrap();
        let grid = Grid::Rect(g2.clone());
        let u: Vec<f64> = (0..grid.len())
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { 10.0 * rng.gen::<f64>() })
            .collect();
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (g0, gv, eta) = (rng.gen_range(0.2..5.0), rng.gen_range(-0.8..0.8), rng.gen_range(0.0..3.0));
        let weight = move |p: BoundaryPoint| g0 * (1.0 + gv * (3.0 * p[0] + 2.0 * p[1]).sin());
        let general = move |p: BoundaryPoint| (p[0] - 2.0 * p[1]).cos();
        let level = move |p: BoundaryPoint| eta * weight(p);
        let use_level = inst % 3 != 0;
        let data = if use_level {
            RobinData::Level(eta)
        } else {
            RobinData::General(&general)
        };
        let problem = RobinProblem {
            grid: &grid,
            screening: &u,
            source: &f,
            weight: &weight,
            data,
        };
        let sol = solve(&problem, 1e-12, 50_000, None).unwrap();
        let q: &dyn Fn(BoundaryPoint) -> f64 = if use_level { &level } else { &general };
        let (a, b) = dense_system(&g2, &u, &f, &weight, q);
        let exact = a.lu().solve(&b).unwrap();
        let err = max_abs_diff(&sol.v.values, exact.as_slice());
        worst = worst.max(err);
    }
    worst
}

pub fn mms_error(m: usize) -> f64 {
    use std::f64::consts::PI;
    let exact = |x: f64, y: f64| 1.0 + 0.5 * (PI * x + 0.3).sin() * (2.0 * y).cos();
    let grad = |x: f64, y: f64| {
        [
            0.5 * PI * (PI * x + 0.3).cos() * (2.0 * y).cos(),
            -1.0 * (PI * x + 0.3).sin() * (2.0 * y).sin(),
        ]
    };
    let lap = |x: f64, y: f64| -0.5 * (PI * PI + 4.0) * (PI * x + 0.3).sin() * (2.0 * y).cos();
    let screen = |x: f64, y: f64| 1.0 + x * y;
    let weight = |p: BoundaryPoint| 2.0 + p[0] - 0.5 * p[1];
    let q = move |p: BoundaryPoint| {
        let [x, y] = p;
        let gr = grad(x, y);
        let normal = if x == 0.0 {
            -gr[0]
        } else if x == 1.0 {
            gr[0]
        } else if y == 0.0 {
            -gr[1]
        } else {
            gr[1]
        };
        normal + weight(p) * exact(x, y)
    };
    let g2 = Grid2D::new(1.0, 1.0, m, m).unwrap();
    let centers: Vec<[f64; 2]> = (0..m * m).map(|k| g2.center(k % m, k / m)).collect();
    let u: Vec<f64> = centers.iter().map(|p| screen(p[0], p[1])).collect();
    let f: Vec<f64> = centers
        .iter()
        .map(|p| -lap(p[0], p[1]) + screen(p[0], p[1]) * exact(p[0], p[1]))
        .collect();
    let grid = Grid::Rect(g2);
    let sol = solve(
        &RobinProblem {
            grid: &grid,
            screening: &u,
            source: &f,
            weight: &weight,
            data: RobinData::General(&q),
        },
        1e-12,
        100_000,
        None,
    )
    .unwrap();
    let truth: Vec<f64> = centers.iter().map(|p| exact(p[0], p[1])).collect();
    max_abs_diff(&sol.v.values, &truth)
}

/// Modified Bessel functions `I₀`, `I₁` by their power series.
pub fn bessel_i(nu: u32, x: f64) -> f64 {
    let mut term = (0.5 * x).powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= 0.25 * x * x / (k * (k + nu as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Disk signal for constant density `nbar`: value and radial derivative.
pub fn disk_oracle(nbar: f64, gamma: f64, g: f64, radius: f64) -> impl Fn(f64) -> (f64, f64) {
    let k = nbar.sqrt();
    let a = gamma * g / (k * bessel_i(1, k * radius) + g * bessel_i(0, k * radius));
    move |r| (a * bessel_i(0, k * r), a * k * bessel_i(1, k * r))
}

/// Max errors of the disk signal (cell centers) and of `c_r` (faces).
pub fn disk_errors(nr: usize) -> (f64, f64) {
    let (nbar, gamma, g) = (2.0, 1.0, 1.0);
    let rg = RadialGrid::new(2, 1.0, nr).unwrap();
    let grid = Grid::Radial(rg.clone());
    let n = vec![nbar; nr];
    let mut bd = BoundaryData::new(gamma);
    bd.g = g;
    let c = solve_signal(&grid, &n, &bd, 1e-14, 1000, None).unwrap().v.values;
    let oracle = disk_oracle(nbar, gamma, g, 1.0);
    let value_err = rg
        .centers()
        .iter()
        .zip(&c)
        .map(|(&r, &v)| (oracle(r).0 - v).abs())
        .fold(0.0, f64::max);
    let cr = signal_gradient(&n, &c, &rg);
    let slope_err = (1..=nr)
        .map(|f| (oracle(rg.face_radius(f)).1 - cr[f]).abs())
        .fold(0.0, f64::max);
    (value_err, slope_err)
}

pub fn random_density(rng: &mut ChaCha8Rng, grid: &Grid) -> Vec<f64> {
    let len = grid.len();
    match rng.gen_range(0..3) {
        0 => (0..len).map(|_| 50.0 * rng.gen::<f64>().powi(4)).collect(),
        1 => {
            let mut n = vec![0.0; len];
            for _ in 0..rng.gen_range(1..5) {
                n[rng.gen_range(0..len)] = rng.gen_range(0.0..1e3);
            }
            n
        }
        _ => {
            let amp = rng.gen_range(0.0..100.0);
            let at = rng.gen_range(0..len);
            (0..len).map(|k| amp * (-((k as f64 - at as f64) / 7.0).powi(2)).exp()).collect()
        }
    }
}


/// Smallest of `min c` and `γ − max c` over `instances` random signal
/// solves on rectangles and balls.
pub fn max_principle_margin(instances: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for inst in 0..instances {
        let grid: Grid = if inst % 4 == 3 {
            RadialGrid::new(rng.gen_range(2..4), rng.gen_range(0.5..2.0), rng.gen_range(8..64)).unwrap().into()
        } else {
            let (a, b) = (rng.gen_range(4..32), rng.gen_range(4..32));
            Grid2D::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), a, b).unwrap().into()
        };
        let n = random_density(&mut rng, &grid);
        let mut bd = BoundaryData::new(rng.gen_range(0.1..5.0));
        bd.g = rng.gen_range(0.1..10.0);
        if matches!(grid, Grid::Rect(_)) {
            bd.g_variation = rng.gen_range(-0.9..0.9);
        }
        let c = solve_signal(&grid, &n, &bd, 1e-10, 100_000, None).unwrap().v.values;
        let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        worst = worst.min(lo).min(bd.gamma - hi);
    }
    worst
}

/// Largest `sup_r |Q_step − Q_direct| / Q(R)` over `times`, comparing the
/// density stepper against the direct `Q` integrator from the same start.
pub fn q_cross_gap(scenario: &chemosim::model::scenario::ScenarioConfig, times: &[f64]) -> f64 {
    use chemosim::model::initial::make_initial_density;
    use chemosim::model::sensitivity::SensitivityModel;
    use chemosim::radial::{cumulative_mass, evolve_q_direct, run_radial_to, RadialSettings, RadialState};
    let grid = scenario.geometry.build().unwrap();
    let Grid::Radial(rg) = grid.clone() else {
        panic!("radial scenario expected")
    };
    let SensitivityModel::Radial(chi) = scenario.sensitivity else {
        panic!("radial sensitivity expected")
    };
    let n0 = make_initial_density(&scenario.initial, &grid).unwrap().field.values;
    let settings = RadialSettings::new(scenario.boundary);
    let q0 = cumulative_mass(&n0, &rg);
    let state = RadialState::new(rg.clone(), n0, 0.0, &settings).unwrap();
    let (_, stepped) = run_radial_to(state, &chi, &settings, times).unwrap();
    let direct = evolve_q_direct(&q0, &rg, &chi, &settings, times).unwrap();
    let total = q0[rg.nr];
    stepped
        .iter()
        .zip(&direct.profiles)
        .map(|(a, b)| max_abs_diff(a, b) / total)
        .fold(0.0, f64::max)
}
