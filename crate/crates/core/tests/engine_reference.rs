//! The optimised engine against a literal one that materialises every
//! hypothesis matrix with `ic` and decodes it with `dec_crc`.

use std::collections::{BTreeSet, HashSet};

use iic_dsa::decoder::{dec_crc, ic, run_engine, Termination};
use iic_dsa::framegen::{generate_access_map, superpose, window_rng, AccessMap, SignalMatrix};
use iic_dsa::metrics::Counters;
use iic_dsa::model::{Alpha, DecodedSignal, PowerPool, SystemConfig};

struct Literal {
    decoded: Vec<u32>,
    iterations_run: u32,
    terminated_by: Termination,
    counters: Counters,
    /// (new matrices, newly decoded, pool size) per iteration
    trace: Vec<(u64, Vec<u32>, usize)>,
}

fn literal_engine(m0: &SignalMatrix, config: &SystemConfig, truth: &AccessMap) -> Literal {
    let n = truth.n_devices();
    let r = m0.rbs.len() as u64;
    let cap = match config.alpha {
        Alpha::Finite(a) => a,
        Alpha::Unbounded => config.limits.safety_iterations,
    };
    let mut counters = Counters::default();
    let first = dec_crc(m0, &config.channel, truth, &mut counters);
    let mut pool: Vec<DecodedSignal> = first.clone();
    let mut held = 1u64;
    counters.peak_storage = r;
    let mut trace = vec![(0, first.iter().map(|s| s.device_id).collect(), pool.len())];
    let mut frontier = vec![m0.clone()];
    let mut iteration = 1;

    let terminated_by = loop {
        if pool.len() == n {
            break Termination::AllRecovered;
        }
        if iteration >= cap {
            break Termination::AlphaReached;
        }
        let expandable = frontier
            .iter()
            .any(|m| pool.iter().any(|s| !m.lineage.contains(&s.device_id)));
        if !expandable {
            break Termination::Exhausted;
        }
        iteration += 1;
        let last = iteration == cap;
        let mai = pool.clone();
        counters.peak_storage = counters.peak_storage.max(r * held + mai.len() as u64);
        let mut seen: HashSet<BTreeSet<u32>> = HashSet::new();
        let mut next = Vec::new();
        let mut found: BTreeSet<u32> = BTreeSet::new();
        for parent in &frontier {
            for signal in &mai {
                if parent.lineage.contains(&signal.device_id) {
                    continue;
                }
                let mut lineage = parent.lineage.clone();
                lineage.insert(signal.device_id);
                if !seen.insert(lineage) {
                    continue;
                }
                let child = ic(parent, signal, iteration, &mut counters).unwrap();
                for s in dec_crc(&child, &config.channel, truth, &mut counters) {
                    if !pool.iter().any(|p| p.device_id == s.device_id) {
                        found.insert(s.device_id);
                    }
                }
                if !last {
                    held += 1;
                    counters.peak_storage = counters.peak_storage.max(r * held + mai.len() as u64);
                    next.push(child);
                }
            }
        }
        let born = seen.len() as u64;
        for &d in &found {
            pool.push(DecodedSignal::new(d, truth.devices[d as usize].power));
        }
        trace.push((born, found.into_iter().collect(), pool.len()));
        frontier = next;
    };

    let mut decoded: Vec<u32> = pool.iter().map(|s| s.device_id).collect();
    decoded.sort_unstable();
    Literal {
        decoded,
        iterations_run: iteration,
        terminated_by,
        counters,
        trace,
    }
}

/// Returns the number of devices the engine found after iteration 2.
fn compare(config: &SystemConfig, window: u64) -> usize {
    let map = generate_access_map(config, &mut window_rng(config.seed, window)).unwrap();
    let m0 = superpose(&map, config.n_rbs);
    let fast = run_engine(&m0, config, &map).unwrap();
    let slow = literal_engine(&m0, config, &map);
    let ctx = format!("{config:?} window {window}");
    assert!(!fast.budget_exhausted, "{ctx}");
    assert_eq!(fast.decoded, slow.decoded, "{ctx}");
    assert_eq!(fast.iterations_run, slow.iterations_run, "{ctx}");
    assert_eq!(fast.terminated_by, slow.terminated_by, "{ctx}");
    assert_eq!(fast.counters, slow.counters, "{ctx}");
    let fast_trace: Vec<(u64, Vec<u32>, usize)> = fast
        .trace
        .iter()
        .map(|t| (t.new_matrices, t.new_decoded.clone(), t.pool_size))
        .collect();
    assert_eq!(fast_trace, slow.trace, "{ctx}");
    fast.trace.iter().skip(2).map(|t| t.new_decoded.len()).sum()
}

#[test]
fn optimised_engine_matches_literal_materialisation() {
    let alphas = [Alpha::Finite(1), Alpha::Finite(2), Alpha::Finite(3), Alpha::Finite(4), Alpha::Unbounded];
    let mut cases = 0;
    for seed in 0..60u64 {
        let n = 1 + (seed as usize * 7) % 10;
        let r = 2 + (seed as usize * 5) % 11;
        let k = 1 + (seed as usize) % r.min(4);
        for alpha in alphas {
            let mut config = SystemConfig::new(n, r, k, alpha).with_seed(seed);
            config.limits.storage_budget = u64::MAX;
            for window in 0..8 {
                let _ = compare(&config, window);
                cases += 1;
            }
        }
    }
    assert_eq!(cases, 60 * 5 * 8);
}

#[test]
fn matches_on_crowded_frames() {
    let mut late = 0;
    for (n, r, k) in [(8, 4, 2), (10, 6, 3), (9, 5, 1), (12, 8, 2)] {
        let mut config = SystemConfig::new(n, r, k, Alpha::Unbounded).with_seed(n as u64 * 31 + r as u64);
        config.limits.storage_budget = u64::MAX;
        for window in 0..25 {
            late += compare(&config, window);
        }
    }
    // the comparison must reach beyond the second iteration
    assert!(late > 0);
}

#[test]
fn matches_with_other_pools() {
    let pools = [vec![1], vec![1, 2], vec![2, 4], vec![1, 2, 4, 8]];
    for (i, levels) in pools.iter().enumerate() {
        let mut config = SystemConfig::new(7, 6, 2, Alpha::Unbounded)
            .with_pool(PowerPool::from_integers(levels).unwrap())
            .with_seed(100 + i as u64);
        config.limits.storage_budget = u64::MAX;
        for window in 0..30 {
            let _ = compare(&config, window);
        }
    }
}
