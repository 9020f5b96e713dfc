//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line even when it succeeds.
//!
//! All stochastic experiments use master seed 1.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use collest::harness::{self, ExperimentSpec, Stat, Sweep, SweepSummary};
use collest::metrics::MetricsSample;
use collest::spatial::{brute_force_neighbors, UniformGrid};
use collest::{
    run, AgentState, Arena, FieldShape, Patch, Phase, SimParams, SwitchMode, Vec2, World,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const REPS: usize = 10;

/// Upper 5% point of Student's t with 18 degrees of freedom (two groups of 10).
const T_CRIT_95_DF18: f64 = 1.734_063_6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk_params() -> SimParams {
    SimParams {
        n_agents: 50,
        seed: SEED,
        ..Default::default()
    }
}

fn bias_variance_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let zs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let gt = rng.random_range(-10.0..=10.0);
        let s = MetricsSample::from_estimates(0, &zs, gt, 0.0).unwrap();
        worst = worst.max((s.e_a - (s.e_t + s.e_p)).abs() / s.e_a.max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 1.0,
        format!("max scaled residual {worst:.2e}, {secs:.3} s"),
    )
}

fn consensus_contraction() -> Outcome {
    let start = Instant::now();
    let (n, c, alpha, radius) = (10, 0.5, 0.99, 0.3);
    // Zig-zag chain: consecutive agents 0.2 apart, all others out of range.
    let positions: Vec<Vec2> = (0..n)
        .map(|k| Vec2::new(0.1 + 0.18 * k as f64, if k % 2 == 0 { 0.5 } else { 0.587 }))
        .collect();
    let initial = [0.9, 0.1, 0.7, 0.3, 0.45, 0.8, 0.2, 0.6, 0.35, 0.55];
    let params = SimParams {
        n_agents: n,
        arena: Arena::new(2.0, 1.0).unwrap(),
        comm_range: radius,
        sigma: 0.0,
        step_size: 0.0,
        alpha,
        field: FieldShape::constant(c),
        switch_mode: SwitchMode::Fixed { t_sw: 0 },
        t_f: 100_000,
        seed: SEED,
        ..Default::default()
    };
    let agents = positions
        .iter()
        .zip(initial)
        .map(|(&p, m)| {
            let mut a = AgentState::new(p, 0.0);
            a.phase = Phase::Exploiting;
            a.switch_time = Some(0);
            a.memory = m;
            a
        })
        .collect();
    let mut world = World::from_agents(&params, agents).unwrap();

    // Dense affine map m' = M m + b built directly from the geometry.
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && positions[i].distance(positions[j]) < radius)
                .collect()
        })
        .collect();
    let mut connected = vec![false; n];
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        if !connected[i] {
            connected[i] = true;
            stack.extend((0..n).filter(|&j| adj[i][j]));
        }
    }
    let mut m_mat = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let deg = adj[i].iter().filter(|&&x| x).count() as f64;
        m_mat[i][i] = alpha;
        for j in 0..n {
            if adj[i][j] {
                m_mat[i][j] = (1.0 - alpha) / (1.0 + deg);
            }
        }
        b[i] = (1.0 - alpha) * c / (1.0 + deg);
    }
    let mut oracle = initial.to_vec();

    let spread = |w: &World| {
        let ms = w.estimates();
        ms.iter().cloned().fold(f64::MIN, f64::max) - ms.iter().cloned().fold(f64::MAX, f64::min)
    };
    let s0 = spread(&world);
    let mut prev = s0;
    let mut monotone = true;
    let mut reached = None;
    for k in 1..=100_000u32 {
        world.tick();
        oracle = (0..n)
            .map(|i| b[i] + (0..n).map(|j| m_mat[i][j] * oracle[j]).sum::<f64>())
            .collect();
        let s = spread(&world);
        monotone &= s <= prev;
        prev = s;
        if reached.is_none() && s < 1e-6 * s0 {
            reached = Some(k);
        }
    }
    let est = world.estimates();
    let common = est.iter().sum::<f64>() / n as f64;
    let oracle_common = oracle.iter().sum::<f64>() / n as f64;
    let max_dev = est
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        connected.iter().all(|&x| x)
            && monotone
            && reached.is_some()
            && (common - oracle_common).abs() <= 1e-9
            && max_dev <= 1e-9
            && secs < 5.0,
        format!(
            "monotone {monotone}, below 1e-6 at tick {reached:?}, common {common:.12} vs oracle {oracle_common:.12}, {secs:.2} s"
        ),
    )
}

fn timeseries_shape() -> Outcome {
    let spec = ExperimentSpec {
        base: desk_params(),
        repetitions: REPS,
        record_stride: 2500,
        ..Default::default()
    };
    let series = harness::run_fixed_switch_timeseries(&spec).unwrap();
    let at = |t| *series.at(t).unwrap();
    let (r0, r1, r2) = (at(0), at(2500), at(5000));
    let a = r1.e_t < 0.25 * r0.e_t;
    let b = r1.e_p > r0.e_p;
    let c = r2.e_p < 0.10 * r1.e_p;
    let d = r2.e_a < r1.e_a;
    outcome(
        a && b && c && d,
        format!(
            "(a) E_T {:.4e} -> {:.4e} [{}] (b) E_P {:.4e} -> {:.4e} [{}] (c) E_P {:.4e} -> {:.4e}, ratio {:.3} [{}] (d) E_A {:.4e} -> {:.4e} [{}]",
            r0.e_t, r1.e_t, ok(a), r0.e_p, r1.e_p, ok(b), r1.e_p, r2.e_p, r2.e_p / r1.e_p, ok(c), r1.e_a, r2.e_a, ok(d)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fails"
    }
}

const SWITCH_GRID: [u64; 6] = [0, 625, 1250, 2500, 3750, 5000];

fn switch_sweep() -> SweepSummary {
    let spec = ExperimentSpec {
        base: desk_params(),
        repetitions: REPS,
        sweep: Sweep::SwitchTime {
            values: SWITCH_GRID.to_vec(),
        },
        record_stride: 5000,
        ..Default::default()
    };
    harness::sweep_switch_time(&spec).unwrap()
}

fn argmin(summary: &SweepSummary) -> usize {
    (0..summary.points.len())
        .min_by(|&a, &b| {
            summary.points[a]
                .final_e_a
                .mean
                .total_cmp(&summary.points[b].final_e_a.mean)
        })
        .unwrap()
}

fn switch_time_u_shape(summary: &SweepSummary) -> Outcome {
    let ea: Vec<f64> = summary.points.iter().map(|p| p.final_e_a.mean).collect();
    let k = argmin(summary);
    let min = ea[k];
    let last = ea.len() - 1;
    let left = ea[0] >= 2.0 * min;
    let right = ea[last] > min;
    let interior = k > 0 && k < last;
    let et: Vec<Stat> = summary.points.iter().map(|p| p.final_e_t).collect();
    let trueness_monotone = et.windows(2).all(|w| {
        let tol = (w[0].std_error().powi(2) + w[1].std_error().powi(2)).sqrt();
        w[1].mean <= w[0].mean + tol
    });
    outcome(
        left && right && interior && trueness_monotone,
        format!(
            "E_A {:?}, argmin t_sw={} [{}], E_A(0)/min {:.2} [{}], E_A(end)>min [{}], E_T {:?} non-increasing [{}]",
            ea.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(),
            SWITCH_GRID[k],
            ok(interior),
            ea[0] / min,
            ok(left),
            ok(right),
            et.iter().map(|s| format!("{:.4e}", s.mean)).collect::<Vec<_>>(),
            ok(trueness_monotone),
        ),
    )
}

fn arena_size_ordering() -> Outcome {
    let base = SimParams {
        switch_mode: SwitchMode::Adaptive,
        delta_prec: 1e-6,
        seed: SEED,
        ..Default::default()
    };
    let arenas = [1.0, 1.4, 1.73]
        .into_iter()
        .map(|side| harness::ArenaPoint {
            arena: Arena::square(side).unwrap(),
            patch: Patch::anchored(0.7, 0.7),
        })
        .collect();
    let spec = ExperimentSpec {
        base,
        repetitions: REPS,
        sweep: Sweep::ArenaSize { arenas },
        record_stride: 5000,
        ..Default::default()
    };
    let summary = harness::sweep_arena(&spec).unwrap().summary;
    let times: Vec<Option<f64>> = summary
        .points
        .iter()
        .map(|p| p.decision_time.map(|d| d.mean))
        .collect();
    let pass = times
        .windows(2)
        .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a));
    outcome(pass, format!("mean decision times {times:.1?}"))
}

/// Decision time of a sweep point, counting a point where nobody switched as
/// lasting the whole run.
fn point_decision_time(p: &harness::SweepPoint) -> f64 {
    p.decision_time.map_or(p.t_f as f64, |d| d.mean)
}

fn time_budget_effect() -> Outcome {
    let spec = ExperimentSpec {
        base: SimParams {
            switch_mode: SwitchMode::Adaptive,
            seed: SEED,
            ..Default::default()
        },
        repetitions: REPS,
        sweep: Sweep::DeltaPrec {
            values: harness::default_delta_prec_grid(),
            horizons: vec![5000, 50_000],
        },
        record_stride: 50_000,
        ..Default::default()
    };
    let summary = harness::sweep_adaptive(&spec).unwrap();
    // Initial trueness error, identical across points because seeds are shared.
    let first = harness::run_repetitions(
        &SimParams {
            t_f: 0,
            ..spec.base.clone()
        },
        REPS,
        1,
    )
    .unwrap();
    let e_t0 = first.iter().map(|r| r.samples[0].e_t).sum::<f64>() / REPS as f64;

    let mut details = Vec::new();
    let mut tails = Vec::new();
    let mut trueness_low = true;
    for horizon in [5000, 50_000] {
        let pts: Vec<_> = summary.points.iter().filter(|p| p.t_f == horizon).collect();
        let min = pts
            .iter()
            .map(|p| p.final_e_a.mean)
            .fold(f64::INFINITY, f64::min);
        let slowest = pts
            .iter()
            .max_by(|a, b| point_decision_time(a).total_cmp(&point_decision_time(b)))
            .unwrap();
        let tail = slowest.final_e_a.mean / min - 1.0;
        trueness_low &= slowest.final_e_t.mean < 0.25 * e_t0;
        tails.push(tail);
        details.push(format!(
            "t_f={horizon}: curve {:?}, tail +{:.0}%, E_T at slowest {:.3e}",
            pts.iter()
                .map(|p| format!("({:.0}, {:.3e})", point_decision_time(p), p.final_e_a.mean))
                .collect::<Vec<_>>(),
            100.0 * tail,
            slowest.final_e_t.mean
        ));
    }
    let pass = tails[0] >= 0.5 && tails[1] < 0.5 && trueness_low;
    outcome(
        pass,
        format!(
            "{}; initial E_T {e_t0:.3e} [low: {}]",
            details.join("; "),
            ok(trueness_low)
        ),
    )
}

fn noise_ordering(sweep: &SweepSummary) -> Outcome {
    let t_opt = SWITCH_GRID[argmin(sweep)];
    let noisy = sweep.points[argmin(sweep)].final_e_a;
    let spec = ExperimentSpec {
        base: SimParams {
            sigma: 0.0,
            ..desk_params()
        },
        repetitions: REPS,
        sweep: Sweep::SwitchTime {
            values: vec![t_opt],
        },
        record_stride: 5000,
        ..Default::default()
    };
    let clean = harness::sweep_switch_time(&spec).unwrap().points[0].final_e_a;
    let pooled_var = ((noisy.n - 1) as f64 * noisy.std.powi(2)
        + (clean.n - 1) as f64 * clean.std.powi(2))
        / (noisy.n + clean.n - 2) as f64;
    let se = (pooled_var * (1.0 / noisy.n as f64 + 1.0 / clean.n as f64)).sqrt();
    let t = (noisy.mean - clean.mean) / se;
    outcome(
        t > T_CRIT_95_DF18,
        format!(
            "t_sw={t_opt}: noisy E_A {:.4e}, noiseless {:.4e}, t = {t:.2} (critical {T_CRIT_95_DF18})",
            noisy.mean, clean.mean
        ),
    )
}

fn spatial_aggregation() -> Outcome {
    let params = SimParams {
        seed: SEED,
        ..Default::default()
    };
    let records = harness::run_repetitions(&params, REPS, params.t_f).unwrap();
    let field = params.field_spec().unwrap();
    let (mut before, mut after, mut n) = (0.0, 0.0, 0.0);
    for r in &records {
        for (p0, pf) in r.initial_positions.iter().zip(&r.final_positions) {
            before += (field.intensity_at(&params.arena, *p0).unwrap() - r.z_gt).abs();
            after += (field.intensity_at(&params.arena, *pf).unwrap() - r.z_gt).abs();
            n += 1.0;
        }
    }
    let (before, after) = (before / n, after / n);
    outcome(
        after < 0.5 * before,
        format!(
            "mean |g - z_gt| initial {before:.4}, final {after:.4}, ratio {:.3}",
            after / before
        ),
    )
}

fn golden_params() -> SimParams {
    SimParams {
        n_agents: 8,
        t_f: 200,
        switch_mode: SwitchMode::Fixed { t_sw: 100 },
        seed: 7,
        ..Default::default()
    }
}

fn determinism_golden() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/run_record.json");
    let a = run(&golden_params(), 10).unwrap().to_json().unwrap();
    let b = run(&golden_params(), 10).unwrap().to_json().unwrap();
    if std::env::var_os("COLLEST_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &a).unwrap();
    }
    let golden = fs::read_to_string(&path).unwrap_or_default();
    outcome(
        a == b && a == golden,
        format!(
            "repeat identical {}, matches {} {}",
            a == b,
            path.file_name().unwrap().to_string_lossy(),
            a == golden
        ),
    )
}

fn spatial_index_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0;
    let mut queries = 0;
    for _ in 0..1000 {
        let arena = Arena::new(rng.random_range(0.1..4.0), rng.random_range(0.1..4.0)).unwrap();
        let radius = rng.random_range(0.005..2.0);
        let n = rng.random_range(1..=150);
        let positions: Vec<Vec2> = (0..n)
            .map(|_| {
                Vec2::new(
                    rng.random_range(0.0..=arena.width()),
                    rng.random_range(0.0..=arena.height()),
                )
            })
            .collect();
        let eligible: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
        let mut grid = UniformGrid::new(&arena, radius);
        grid.rebuild(&positions, &eligible);
        for i in 0..n {
            queries += 1;
            if grid.neighbors(&positions, i, radius)
                != brute_force_neighbors(&positions, &eligible, i, radius)
            {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {queries} queries in 1000 layouts"),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected =
        |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));

    let mut sweep: Option<SweepSummary> = None;
    let mut sweep_once = || -> SweepSummary { sweep.get_or_insert_with(switch_sweep).clone() };

    let mut failures = 0;
    let mut report = |k: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        if !selected(name) {
            return;
        }
        let start = Instant::now();
        let o = guarded(AssertUnwindSafe(&mut *run));
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {k:>2} {name:<26} {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };

    report(1, "bias_variance_identity", &mut bias_variance_identity);
    report(2, "consensus_contraction", &mut consensus_contraction);
    report(3, "timeseries_shape", &mut timeseries_shape);
    report(4, "switch_time_u_shape", &mut || {
        switch_time_u_shape(&sweep_once())
    });
    report(5, "arena_size_ordering", &mut arena_size_ordering);
    report(6, "time_budget_effect", &mut time_budget_effect);
    report(7, "noise_ordering", &mut || noise_ordering(&sweep_once()));
    report(8, "spatial_aggregation", &mut spatial_aggregation);
    report(9, "determinism_golden", &mut determinism_golden);
    report(
        10,
        "spatial_index_equivalence",
        &mut spatial_index_equivalence,
    );

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
