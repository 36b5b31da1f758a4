//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p chemosim --test acceptance` (about 15 minutes on one core).

mod common;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use chemosim::diagnostics::{psi_eta_h1, CutoffPhi};
use chemosim::presets;
use chemosim::simulation::{execute, CheckResult, Outcome, RunStatus};
use common::*;

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Board {
    lines: Vec<Line>,
}

impl Board {
    fn record(&mut self, id: usize, name: &'static str, pass: bool, detail: String) {
        println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        std::io::stdout().flush().ok();
        self.lines.push(Line { id, name, pass, detail });
    }
}

fn check<'a>(o: &'a Outcome, name: &str) -> Option<&'a CheckResult> {
    o.checks.iter().find(|c| c.name == name)
}

fn passed(o: &Outcome, name: &str) -> bool {
    check(o, name).is_some_and(|c| c.pass)
}

fn margin(o: &Outcome, name: &str) -> f64 {
    check(o, name).map_or(f64::NAN, |c| c.margin)
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

struct Timed {
    outcome: Outcome,
    seconds: f64,
}

fn timed(s: &chemosim::model::scenario::ScenarioConfig) -> Timed {
    let start = Instant::now();
    let outcome = execute(s, &[]).unwrap_or_else(|e| panic!("{}: {e}", s.id));
    Timed {
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn main() -> ExitCode {
    let mut board = Board::default();
    let total = Instant::now();

    eprintln!("standard runs to T = 1 ...");
    let standard: Vec<Timed> = presets::standard_2d().iter().map(timed).collect();
    eprintln!("standard runs to T = 5 ...");
    let long: Vec<Timed> = presets::standard_2d()
        .into_iter()
        .map(|mut s| {
            s.t_end = 5.0;
            s.cadence.steps = 0;
            s.cadence.time = 0.01;
            timed(&s)
        })
        .collect();
    eprintln!("radial runs to T = 2 ...");
    let radial: Vec<Timed> = presets::radial().iter().map(timed).collect();
    let all: Vec<&Timed> = standard.iter().chain(&long).chain(&radial).collect();

    // 1
    let random_margin = max_principle_margin(200, 2024);
    let mut run_margin = f64::INFINITY;
    for r in &standard {
        let t = &r.outcome.trajectory;
        let gamma = t.scenario.boundary.gamma;
        run_margin = run_margin.min(t.stats.min_c).min(gamma - t.stats.max_c);
    }
    let seconds: f64 = standard.iter().map(|r| r.seconds).sum();
    let completed = standard.iter().all(|r| r.outcome.trajectory.status == RunStatus::Completed);
    board.record(
        1,
        "maximum principle",
        random_margin >= -1e-12 && run_margin >= -1e-12 && completed && seconds <= 300.0,
        format!(
            "worst margin {random_margin:.3e} over 200 random instances, {run_margin:.3e} over every step of 5 runs; {seconds:.1} s"
        ),
    );

    // 2
    let drift = all.iter().map(|r| r.outcome.trajectory.stats.max_mass_drift).fold(0.0, f64::max);
    let fewest = standard.iter().map(|r| r.outcome.trajectory.stats.steps).min().unwrap_or(0);
    board.record(
        2,
        "mass conservation",
        drift <= 1e-10 && fewest >= 10_000,
        format!("max relative drift {drift:.3e} over {} runs, fewest steps in a T = 1 run {fewest}", all.len()),
    );

    // 3
    let energy = all.iter().map(|r| margin(&r.outcome, "energy")).fold(f64::INFINITY, f64::min);
    board.record(
        3,
        "gradient energy bound",
        all.iter().all(|r| passed(&r.outcome, "energy")),
        format!("smallest margin (allowance 1e-6 included) {energy:.3e} over every record of {} runs", all.len()),
    );

    // 4
    let worst = dense_oracle_worst(50, 7);
    let e: Vec<f64> = [16, 32, 64].iter().map(|&m| mms_error(m)).collect();
    let orders: Vec<f64> = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    board.record(
        4,
        "elliptic oracle equivalence",
        worst <= 1e-8 && orders.iter().all(|o| *o >= 1.9),
        format!("max |iterative - dense| {worst:.3e}; manufactured-solution orders {orders:.3?}"),
    );

    // 5
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &radial {
        let o = &r.outcome;
        let good = ["q-bound", "c-lower", "cr-envelope"].iter().all(|n| passed(o, n))
            && o.trajectory.status == RunStatus::Completed
            && r.seconds <= 120.0;
        ok &= good;
        parts.push(format!(
            "{} q {:.2e} c {:.2e} cr {:.2e} ({:.1} s)",
            o.trajectory.scenario.id,
            margin(o, "q-bound"),
            margin(o, "c-lower"),
            margin(o, "cr-envelope"),
            r.seconds
        ));
    }
    board.record(5, "radial bound chain", ok, parts.join("; "));

    // 6
    let times: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let gaps: Vec<f64> = presets::radial().iter().map(|s| q_cross_gap(s, &times)).collect();
    board.record(
        6,
        "cross-integrator agreement",
        gaps.iter().all(|g| *g <= 0.02),
        format!("relative sup gaps {} at 20 matched times up to T = 2", sci(&gaps)),
    );

    // 7
    let d: Vec<(f64, f64)> = [64, 128, 256].iter().map(|&nr| disk_errors(nr)).collect();
    let orders: Vec<f64> = d.windows(2).map(|w| (w[0].0 / w[1].0).log2()).collect();
    board.record(
        7,
        "Bessel oracle",
        orders.iter().all(|o| *o >= 1.9),
        format!("max errors {}, orders {orders:.3?}", sci(&d.iter().map(|p| p.0).collect::<Vec<_>>())),
    );

    // 8
    let deltas: Vec<f64> = standard
        .iter()
        .map(|r| r.outcome.certificate.as_ref().filter(|c| c.found).map_or(0.0, |c| c.delta))
        .collect();
    board.record(
        8,
        "localized smallness certificate",
        deltas.iter().all(|d| *d > 0.0) && standard.iter().all(|r| passed(&r.outcome, "certificate")),
        format!("delta at epsilon = 0.1 gamma: {deltas:.4?}"),
    );

    // 9
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &long {
        let o = &r.outcome;
        ok &= o.trajectory.status == RunStatus::Completed && passed(o, "sup-norm") && passed(o, "entropy-growth");
        parts.push(format!(
            "{} sup {:.3e} entropy {:.3e}",
            o.trajectory.scenario.id,
            margin(o, "sup-norm"),
            margin(o, "entropy-growth")
        ));
    }
    board.record(9, "uniform-in-time boundedness", ok, parts.join("; "));

    // 10
    let h1 = |k: f64| {
        let (l2, semi) = psi_eta_h1((-k).exp(), 2, 1e-12).expect("psi norms");
        (l2 + semi).sqrt()
    };
    let norms: Vec<f64> = [2.0, 4.0, 8.0].iter().map(|&k| h1(k)).collect();
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let far = h1(50.0);
    board.record(
        10,
        "psi vanishing",
        decreasing && far < 1e-3,
        format!(
            "H1 norms {norms:.4?} (strictly decreasing: {decreasing}); at eta = e^-50: {far:.4e} (below 1e-3: {})",
            far < 1e-3
        ),
    );

    // 11
    let mut ok = true;
    let mut parts = Vec::new();
    for delta in [0.1, 0.3, 1.0] {
        let phi = CutoffPhi::new(delta, [0.2, -0.1]).expect("cutoff");
        let mut excess = f64::NEG_INFINITY;
        for s in 0..20_000 {
            let rho = 1.2 * delta * s as f64 / 20_000.0;
            let angle = 0.37 * s as f64;
            let x = [0.2 + rho * angle.cos(), -0.1 + rho * angle.sin()];
            let g = phi.gradient(x);
            excess = excess.max(g[0].hypot(g[1]) - phi.k * phi.value(x).sqrt());
        }
        ok &= phi.k <= 8.0 / delta && excess <= 1e-10;
        parts.push(format!("delta {delta}: K delta {:.3}, max excess {excess:.2e}", phi.k * delta));
    }
    board.record(11, "cutoff certification", ok, parts.join("; "));

    let failed = board.lines.iter().filter(|l| !l.pass).count();
    println!();
    println!("summary ({:.0} s)", total.elapsed().as_secs_f64());
    for l in &board.lines {
        println!("  {:>2} {:<32} {}", l.id, l.name, if l.pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", board.lines.len() - failed, board.lines.len());
    if failed > 0 {
        for l in board.lines.iter().filter(|l| !l.pass) {
            eprintln!("criterion {} ({}) failed: {}", l.id, l.name, l.detail);
        }
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
