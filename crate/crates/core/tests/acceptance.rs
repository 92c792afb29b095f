//! Acceptance suite. Each test prints one `[acceptance N] PASS|FAIL` line
//! to the real stdout, so the summary is visible without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iic_dsa::decoder::run_engine;
use iic_dsa::fixtures::worked_example;
use iic_dsa::framegen::{generate_access_map, superpose, window_rng};
use iic_dsa::harness::{run_point_with, run_sweep_with, Execution, PointResult, SweepSpec};
use iic_dsa::metrics::{bound_alpha2, bound_general};
use iic_dsa::model::{build_power_pool, Alpha, ChannelParams, PowerPool, Rational, SystemConfig};
use iic_dsa::oracle::{closure_decode, enumerate_access_maps, exact_access_probability};

const Z95: f64 = 1.959964;
const Z99: f64 = 2.575829;

fn report(id: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance {id}] {verdict} {detail}");
}

fn fig4() -> &'static [PointResult] {
    static ROWS: OnceLock<Vec<PointResult>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let gammas = (1..=9).map(|i| i as f64 / 10.0).collect();
        let spec = SweepSpec::gamma_grid(
            gammas,
            100,
            vec![2, 3, 4, 5],
            vec![Alpha::Finite(1), Alpha::Finite(2), Alpha::Unbounded],
        )
        .with_windows(10_000)
        .with_seed(7);
        run_sweep_with(&spec, Execution::Parallel).unwrap()
    })
}

fn fig5() -> &'static [PointResult] {
    static ROWS: OnceLock<Vec<PointResult>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let spec = SweepSpec::gamma_grid(vec![0.3, 0.6, 0.9], 100, vec![2, 4], (1..=5).map(Alpha::Finite).collect())
            .with_windows(10_000)
            .with_seed(7);
        run_sweep_with(&spec, Execution::Parallel).unwrap()
    })
}

/// Index by (gamma in tenths, K, alpha).
fn by_key(points: &[PointResult]) -> BTreeMap<(u32, usize, Alpha), &PointResult> {
    points
        .iter()
        .map(|p| (((p.row.gamma * 10.0).round() as u32, p.row.k, p.row.alpha), p))
        .collect()
}

/// z statistic of `a - b` for independent points, using per-window standard errors.
fn z_diff(a: &PointResult, b: &PointResult) -> f64 {
    let se = (a.stat.window_std_error.powi(2) + b.stat.window_std_error.powi(2)).sqrt();
    let diff = a.row.access_prob - b.row.access_prob;
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

#[test]
fn acceptance_1_power_pool_levels() {
    let pool = build_power_pool(&ChannelParams::default(), 3).unwrap();
    let expected: Vec<Rational> = [1, 2, 4].map(Rational::from_integer).to_vec();
    let ok = pool.levels() == expected.as_slice();
    let shown: Vec<String> = pool.levels().iter().map(|l| l.to_string()).collect();
    report("1", ok, &format!("pool(tau=1, N0=1, L=3) = [{}]", shown.join(", ")));
    assert!(ok);
}

#[test]
fn acceptance_2_worked_example() {
    let map = worked_example();
    let m0 = superpose(&map, 10);
    let decode = |a| {
        let config = SystemConfig::new(5, 10, 3, Alpha::Finite(a));
        run_engine(&m0, &config, &map).unwrap().decoded
    };
    let (two, three) = (decode(2), decode(3));
    let ok = two == vec![0, 1, 3, 4] && three == vec![0, 1, 2, 3, 4];
    report("2", ok, &format!("alpha=2 -> {two:?}, alpha=3 -> {three:?}"));
    assert!(ok);
}

#[test]
fn acceptance_3_engine_matches_closure_on_all_small_instances() {
    let start = Instant::now();
    let levels = [1i64, 2, 4];
    let mut instances = 0u64;
    let mut mismatches = 0u64;
    let mut examples = Vec::new();
    for mask in 1u32..8 {
        let subset: Vec<i64> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| levels[b]).collect();
        let pool = PowerPool::from_integers(&subset).unwrap();
        for n in 1..=4 {
            for r in 1..=4 {
                for k in 1..=r {
                    let config = SystemConfig::new(n, r, k, Alpha::Unbounded).with_pool(pool.clone());
                    for map in enumerate_access_maps(&config).unwrap() {
                        let m0 = superpose(&map, r);
                        let engine = run_engine(&m0, &config, &map).unwrap();
                        let closure = closure_decode(&m0, &config.channel).unwrap();
                        let closure: Vec<u32> = closure.decodable.into_iter().collect();
                        if engine.decoded != closure {
                            mismatches += 1;
                            if examples.len() < 5 {
                                examples.push(serde_json::to_string(&map).unwrap());
                            }
                        }
                        instances += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && elapsed < Duration::from_secs(300);
    report("3", ok, &format!("{instances} access maps, {mismatches} mismatches, {:.1}s", elapsed.as_secs_f64()));
    assert!(ok, "{examples:?}");
}

#[test]
fn acceptance_4_monte_carlo_matches_exact_probability() {
    let config = SystemConfig::new(2, 2, 1, Alpha::Unbounded).with_windows(10_000).with_seed(2024);
    let exact = exact_access_probability(&config).unwrap();
    let start = Instant::now();
    let point = run_point_with(&config, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    let p = *exact.numer() as f64 / *exact.denom() as f64;
    let half = Z99 * (p * (1.0 - p) / config.windows as f64).sqrt();
    let estimate = point.row.access_prob;
    let ok = exact == Ratio::new(5, 6) && (estimate - p).abs() <= half && elapsed < Duration::from_secs(10);
    report(
        "4",
        ok,
        &format!("estimate {estimate:.5} vs exact {exact} +/- {half:.5} (99%), {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn acceptance_5_alpha_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = Vec::new();
    let realizations = 2_000;
    for i in 0..realizations {
        let n = rng.gen_range(2..=20);
        let r = rng.gen_range(5..=50);
        let k = rng.gen_range(1..=5);
        let base = SystemConfig::new(n, r, k, Alpha::Finite(1));
        let map = generate_access_map(&base, &mut window_rng(5, i)).unwrap();
        let m0 = superpose(&map, r);
        let decoded: Vec<Vec<u32>> = (1..=4)
            .map(|a| run_engine(&m0, &base.clone().with_alpha(Alpha::Finite(a)), &map).unwrap().decoded)
            .collect();
        for a in 0..3 {
            if !decoded[a].iter().all(|d| decoded[a + 1].contains(d)) {
                violations.push((i, a + 1));
            }
        }
    }
    let ok = violations.is_empty();
    report("5", ok, &format!("{realizations} realizations, {} violations", violations.len()));
    assert!(ok, "{violations:?}");
}

#[test]
fn acceptance_6a_access_probability_falls_with_load() {
    let points = by_key(fig4());
    let mut violations = Vec::new();
    for k in 2..=5 {
        for alpha in [Alpha::Finite(1), Alpha::Finite(2), Alpha::Unbounded] {
            for g1 in 1..=9u32 {
                for g2 in g1 + 1..=9 {
                    let (a, b) = (points[&(g1, k, alpha)], points[&(g2, k, alpha)]);
                    // heavier load may only look better within overlapping intervals
                    if b.row.access_prob - b.row.ci95 > a.row.access_prob + a.row.ci95 {
                        violations.push(format!("K={k} alpha={alpha} gamma 0.{g1} -> 0.{g2}"));
                    }
                }
            }
        }
    }
    let ok = violations.is_empty();
    report("6a", ok, &format!("{} increases beyond CI overlap {violations:?}", violations.len()));
    assert!(ok);
}

#[test]
fn acceptance_6b_best_replica_count_at_two_iterations() {
    let points = by_key(fig4());
    let alpha = Alpha::Finite(2);
    let mut wrong = Vec::new();
    let mut summary = Vec::new();
    for g in 1..=9u32 {
        let (k2, k3) = (points[&(g, 2, alpha)], points[&(g, 3, alpha)]);
        let z = z_diff(k3, k2);
        summary.push(format!("0.{g}:{:.4}/{:.4}(z={z:.1})", k3.row.access_prob, k2.row.access_prob));
        let expected_k3_better = g <= 3;
        let significant = if expected_k3_better { z > Z95 } else { -z > Z95 };
        if !significant {
            wrong.push(format!("0.{g}"));
        }
    }
    let ok = wrong.is_empty();
    report(
        "6b",
        ok,
        &format!("K=3/K=2 at alpha=2 {}; not as expected at gamma {wrong:?}", summary.join(" ")),
    );
    assert!(ok, "gamma points against the expected ordering: {wrong:?}");
}

#[test]
fn acceptance_6c_three_replicas_best_without_iteration_limit() {
    let points = by_key(fig4());
    let mut wins = Vec::new();
    for g in 1..=9u32 {
        let best = (2..=5)
            .map(|k| points[&(g, k, Alpha::Unbounded)].row.access_prob)
            .fold(f64::NEG_INFINITY, f64::max);
        if points[&(g, 3, Alpha::Unbounded)].row.access_prob >= best {
            wins.push(g);
        }
    }
    let ok = wins.len() * 2 > 9;
    report("6c", ok, &format!("K=3 is the argmax at {} of 9 load points (tenths: {wins:?})", wins.len()));
    assert!(ok);
}

#[test]
fn acceptance_7_counters_within_worst_case() {
    let mut checked = 0u64;
    let mut violations = Vec::new();
    for p in fig4().iter().filter(|p| p.row.alpha == Alpha::Finite(2)) {
        let bound = bound_alpha2(p.row.n, p.row.r);
        for (w, window) in p.windows.iter().enumerate() {
            checked += 1;
            if !window.counters.within(&bound) {
                violations.push(format!("alpha=2 n={} k={} window {w}", p.row.n, p.row.k));
            }
        }
    }
    for p in fig5() {
        let Alpha::Finite(a) = p.row.alpha else { continue };
        if !(3..=5).contains(&a) || p.row.n < 2 * a as usize + 2 {
            continue;
        }
        let bound = bound_general(a, p.row.n, p.row.r).unwrap();
        for (w, window) in p.windows.iter().enumerate() {
            checked += 1;
            if !window.counters.within(&bound) {
                violations.push(format!("alpha={a} n={} k={} window {w}", p.row.n, p.row.k));
            }
        }
    }
    let ok = violations.is_empty() && checked > 0;
    report("7", ok, &format!("{checked} windows checked, {} over the bound", violations.len()));
    assert!(ok, "{:?}", &violations[..violations.len().min(10)]);
}

#[test]
fn acceptance_8_deeper_iterations_cost_more_than_they_gain() {
    let points = by_key(fig5());
    let at = |a: u32| points[&(6, 4, Alpha::Finite(a))];
    let (two, four, five) = (at(2), at(4), at(5));
    let growth = [
        five.row.mean_wr / two.row.mean_wr,
        five.row.mean_dec / two.row.mean_dec,
        five.row.mean_peak_storage / two.row.mean_peak_storage,
    ];
    let z = z_diff(five, four);
    let ok = growth.iter().all(|g| *g >= 10.0) && z.abs() < Z95;
    report(
        "8",
        ok,
        &format!(
            "alpha 2->5 growth wr x{:.1} dec x{:.1} sto x{:.1}; access {:.5} -> {:.5} (z={z:.2})",
            growth[0], growth[1], growth[2], four.row.access_prob, five.row.access_prob
        ),
    );
    assert!(ok);
}

#[test]
fn acceptance_9_outputs_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let csv = dir.path().join(format!("t{threads}.csv"));
        let svg = dir.path().join(format!("t{threads}.svg"));
        let status = Command::new(env!("CARGO_BIN_EXE_iic-dsa"))
            .args([
                "sweep", "--r", "100", "--gamma", "0.3,0.6,0.9", "--k", "2,4", "--alpha", "1:5", "--windows", "500",
                "--seed", "7", "--out", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap(), "--plot-x", "alpha",
            ])
            .env("GFA_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(&svg).unwrap()));
    }
    let ok = outputs[0] == outputs[1];
    report(
        "9",
        ok,
        &format!("GFA_THREADS=1 vs 4: csv {} bytes, svg {} bytes, identical={ok}", outputs[0].0.len(), outputs[0].1.len()),
    );
    assert!(ok);
}
