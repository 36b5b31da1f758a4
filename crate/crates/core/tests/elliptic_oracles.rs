mod common;

use common::*;
use chemosim::elliptic::{assemble, solve, solve_signal, BoundaryPoint, RobinData, RobinProblem};
use chemosim::model::grid::{Grid, Grid2D, RadialGrid};
use chemosim::model::scenario::BoundaryData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn iterative_solve_matches_dense_lu_on_random_instances() {
    let worst = dense_oracle_worst(50, 7);
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn unit_screening_example_matches_dense_solve() {
    let g2 = Grid2D::new(1.0, 1.0, 16, 16).unwrap();
    let grid = Grid::Rect(g2.clone());
    let u = vec![1.0; 256];
    let f = vec![0.0; 256];
    let one = |_: BoundaryPoint| 1.0;
    let problem = RobinProblem {
        grid: &grid,
        screening: &u,
        source: &f,
        weight: &one,
        data: RobinData::Level(1.0),
    };
    let sol = solve(&problem, 1e-12, 10_000, None).unwrap();
    let (a, b) = dense_system(&g2, &u, &f, &one, &one);
    let exact = a.lu().solve(&b).unwrap();
    assert!(max_abs_diff(&sol.v.values, exact.as_slice()) <= 1e-8);
}

#[test]
fn assembled_operators_are_m_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for inst in 0..40 {
        let grid: Grid = if inst % 2 == 0 {
            Grid2D::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(4..20), rng.gen_range(4..20))
                .unwrap()
                .into()
        } else {
            RadialGrid::new(rng.gen_range(2..5), rng.gen_range(0.5..2.0), rng.gen_range(8..40)).unwrap().into()
        };
        let u: Vec<f64> = (0..grid.len()).map(|_| 3.0 * rng.gen::<f64>()).collect();
        let f = vec![0.0; grid.len()];
        let g0 = rng.gen_range(0.1..10.0);
        let weight = move |p: BoundaryPoint| g0 * (1.0 + 0.5 * (p[0] * 5.0).sin());
        let sys = assemble(&RobinProblem {
            grid: &grid,
            screening: &u,
            source: &f,
            weight: &weight,
            data: RobinData::Level(1.0),
        })
        .unwrap();
        for k in 0..grid.len() {
            let row = sys.operator.row(k);
            assert!(row[0].1 > 0.0);
            assert!(row[1..].iter().all(|(_, v)| *v <= 0.0));
            let sum: f64 = row.iter().map(|(_, v)| v).sum();
            assert!(sum >= u[k] - 1e-9 * row[0].1, "row {k}: sum {sum} < u {}", u[k]);
        }
    }
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let e: Vec<f64> = [16, 32, 64].iter().map(|&m| mms_error(m)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {e:?}, order {order}");
    }
}

#[test]
fn bessel_series_sanity() {
    // Abramowitz-Stegun table values
    assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!((bessel_i(1, 1.0) - 0.565_159_103_992_485_0).abs() < 1e-15);
    assert!((bessel_i(0, 3.0) - 4.880_792_585_865_024).abs() < 1e-13);
}

#[test]
fn disk_signal_converges_to_the_bessel_solution() {
    let e: Vec<(f64, f64)> = [64, 128, 256].iter().map(|&nr| disk_errors(nr)).collect();
    for w in e.windows(2) {
        let order = (w[0].0 / w[1].0).log2();
        assert!(order >= 1.9, "value errors {e:?}, order {order}");
        let slope_order = (w[0].1 / w[1].1).log2();
        assert!(slope_order >= 1.9, "slope errors {e:?}, order {slope_order}");
    }
}

#[test]
fn ball_signal_converges_to_the_sinh_solution() {
    let (nbar, gamma, g): (f64, f64, f64) = (3.0, 2.0, 0.5);
    let k = nbar.sqrt();
    // c = A sinh(k r)/r with c_r(1) = (γ − c(1)) g
    let a = gamma * g / (k * k.cosh() - k.sinh() + g * k.sinh());
    let exact = |r: f64| a * (k * r).sinh() / r;
    let errors: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&nr| {
            let rg = RadialGrid::new(3, 1.0, nr).unwrap();
            let grid = Grid::Radial(rg.clone());
            let mut bd = BoundaryData::new(gamma);
            bd.g = g;
            let c = solve_signal(&grid, &vec![nbar; nr], &bd, 1e-14, 1000, None).unwrap().v.values;
            rg.centers()
                .iter()
                .zip(&c)
                .map(|(&r, &v)| (exact(r) - v).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    // the midpoint shell weights r_i² h approach second order from below
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{errors:?}");
    }
}

#[test]
fn unit_density_disk_signal_is_positive_and_increasing() {
    let rg = RadialGrid::new(2, 1.0, 128).unwrap();
    let grid = Grid::Radial(rg);
    let c = solve_signal(&grid, &vec![1.0; 128], &BoundaryData::new(1.0), 1e-13, 1000, None)
        .unwrap()
        .v
        .values;
    assert!(c[0] > 0.0);
    assert!(c.windows(2).all(|w| w[1] >= w[0]));
    assert!(c[127] < 1.0);
}

#[test]
fn signal_obeys_the_maximum_principle_on_random_instances() {
    let worst = max_principle_margin(200, 2024);
    assert!(worst >= -1e-12, "{worst:e}");
}

#[test]
fn zero_density_gives_the_boundary_level() {
    for grid in [
        Grid::from(Grid2D::new(1.0, 2.0, 12, 9).unwrap()),
        Grid::from(RadialGrid::new(3, 1.5, 16).unwrap()),
    ] {
        let c = solve_signal(&grid, &vec![0.0; grid.len()], &BoundaryData::new(1.7), 1e-12, 100, None)
            .unwrap()
            .v
            .values;
        assert!(c.iter().all(|v| (v - 1.7).abs() < 1e-12));
    }
}
