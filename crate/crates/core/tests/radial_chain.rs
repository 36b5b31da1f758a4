mod common;

use chemosim::diagnostics::mass;
use chemosim::model::grid::{Grid, RadialGrid};
use chemosim::model::initial::InitialSpec;
use chemosim::model::scenario::{BoundaryData, GeometrySpec, ScenarioConfig};
use chemosim::model::sensitivity::{RadialPreset, SensitivityModel};
use chemosim::presets;
use chemosim::radial::{
    check_q_bound, compute_bounds, compute_m0, cumulative_mass, run_radial_to, RadialSettings, RadialState,
};
use chemosim::simulation::{run, RunStatus};
use common::q_cross_gap;
use proptest::prelude::*;

fn short(mut s: ScenarioConfig, t_end: f64) -> ScenarioConfig {
    s.t_end = t_end;
    s
}

#[test]
fn integrators_agree_on_a_short_horizon() {
    for s in presets::radial() {
        let gap = q_cross_gap(&s, &[0.05, 0.1, 0.2]);
        assert!(gap <= 0.02, "{}: {gap}", s.id);
    }
}

#[test]
fn annulus_with_unit_chi_respects_the_comparison_function() {
    let s = short(presets::by_id("ball2-constant-annulus").unwrap(), 0.5);
    let traj = run(&s).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    let bounds = traj.bounds.unwrap();
    let Grid::Radial(rg) = &traj.grid else { unreachable!() };
    let profiles: Vec<(f64, Vec<f64>)> = traj.snapshots.iter().map(|p| (p.t, cumulative_mass(&p.n, rg))).collect();
    let report = check_q_bound(&profiles, rg, bounds.m_big);
    assert!(report.min_margin >= -1e-8, "{report:?}");
}

#[test]
fn inverse_chi_in_three_dimensions_stays_above_c_star() {
    let s = short(presets::by_id("ball3-inverse-bump").unwrap(), 0.5);
    let traj = run(&s).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    let c_star = traj.bounds.unwrap().c_star;
    let min_c = traj.records.iter().map(|r| r.min_c).fold(f64::INFINITY, f64::min);
    assert!(min_c >= c_star - 1e-3, "{min_c} < {c_star}");
}

#[test]
fn q_at_the_boundary_is_the_mass() {
    for dim in [2, 3, 4] {
        let rg = RadialGrid::new(dim, 1.3, 40).unwrap();
        let n: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 * 0.37).sin().powi(2)).collect();
        let q = cumulative_mass(&n, &rg);
        let m = mass(&n, &Grid::Radial(rg.clone()));
        assert!((q[40] - m).abs() <= 1e-12 * m);
        assert_eq!(q[0], 0.0);
    }
}

#[test]
fn density_near_the_boundary_leaves_slack_near_the_origin() {
    let rg = RadialGrid::new(2, 1.0, 64).unwrap();
    let n: Vec<f64> = rg.centers().iter().map(|&r| if r > 0.8 { 3.0 } else { 0.0 }).collect();
    let grid = Grid::Radial(rg.clone());
    let m_big = compute_m0(mass(&n, &grid), 3.0, 2, 1.0).unwrap();
    let q = cumulative_mass(&n, &rg);
    let report = check_q_bound(&[(0.0, q.clone())], &rg, m_big);
    assert!(report.pass);
    for f in 1..=40 {
        assert!(m_big * rg.face_radius(f).powi(2) - q[f] > 0.0);
    }
}

#[test]
fn zero_sensitivity_is_radial_heat_flow() {
    let rg = RadialGrid::new(3, 1.0, 32).unwrap();
    let n0: Vec<f64> = rg.centers().iter().map(|&r| 1.0 + 4.0 * (-r * r / 0.05).exp()).collect();
    let settings = RadialSettings::new(BoundaryData::new(1.0));
    let state = RadialState::new(rg.clone(), n0.clone(), 0.0, &settings).unwrap();
    let times: Vec<f64> = (1..=10).map(|k| 0.01 * k as f64).collect();
    let (end, profiles) = run_radial_to(state, &RadialPreset::Constant(0.0), &settings, &times).unwrap();
    let m0 = cumulative_mass(&n0, &rg)[32];
    for q in &profiles {
        assert!((q[32] - m0).abs() <= 1e-12 * m0);
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(max(&end.n.values) < max(&n0));
    assert!(end.n.values.iter().all(|v| *v > 1.0));
}

#[test]
fn generic_scenario_runs_to_the_requested_times() {
    let mut s = ScenarioConfig::new(
        "ball4",
        GeometrySpec::Radial {
            dim: 4,
            radius: 2.0,
            nr: 32,
        },
        SensitivityModel::Radial(RadialPreset::Linear),
        InitialSpec::GaussianBump {
            amplitude: 2.0,
            width: 0.4,
            center: [0.0, 0.0],
            background: 0.1,
        },
    );
    s.t_end = 0.1;
    let traj = run(&s).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.final_t, 0.1);
    let rec = traj.radial_records.last().unwrap();
    assert!(rec.q_margin >= -1e-8 && rec.cr_excess <= 1e-8 && rec.min_c >= rec.c_star);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn m0_is_one_homogeneous(l1 in 0.01f64..100.0, linf in 0.01f64..100.0, lambda in 0.01f64..100.0, dim in 2usize..6) {
        let a = compute_m0(l1, linf, dim, 1.7).unwrap();
        let b = compute_m0(lambda * l1, lambda * linf, dim, 1.7).unwrap();
        prop_assert!((b - lambda * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn bounds_are_linear_in_gamma(m in 0.01f64..100.0, gamma in 0.01f64..10.0, dim in 2usize..6) {
        let a = compute_bounds(m, gamma, 1.0, dim).unwrap();
        let b = compute_bounds(m, 2.0 * gamma, 1.0, dim).unwrap();
        prop_assert!((b.m_small - 2.0 * a.m_small).abs() <= 1e-14 * b.m_small);
        prop_assert!((b.c_star - 2.0 * a.c_star).abs() <= 1e-14 * b.c_star);
        prop_assert!(a.c_star <= a.m_small && a.m_small < 0.5 * gamma);
    }
}
