//! Iteration driver.
//!
//! Matrices are identified by their lineage (the set of MAI signals
//! subtracted from M(0)). Iteration `i` extends every lineage born in
//! iteration `i - 1` by every pool signal it does not yet contain, so a
//! matrix born in iteration `i` has exactly `i - 1` subtractions.
//!
//! Lineages are stored as ascending pool indices, pool indices follow join
//! order, and a lineage is only extended by indices above its last one.
//! Every `(i-1)`-subset of the pool that the frontier can reach is thereby
//! produced exactly once, without a dedup table: the parent obtained by
//! dropping the highest index is always in the previous frontier.
//!
//! A child `L + s` differs from its parent `L` only by `s`: RBs holding `s`
//! lose it, every other RB gains a ghost of `s`'s power. Extra interference
//! can only shorten an SIC pass, so RBs without `s` decode a subset of what
//! the parent already yielded. Only RBs holding `s` and at least one
//! still-undecoded device are scanned. Counters are charged for the full
//! materialization regardless.

use crate::decoder::{EngineOutcome, IterationRecord, MaiPool, Termination};
use crate::error::{Error, Result};
use crate::framegen::{AccessMap, SignalMatrix};
use crate::metrics::Counters;
use crate::model::{Alpha, DecodedSignal, SystemConfig, UnitScale};

#[derive(Debug, Clone, Copy)]
struct Component {
    device: u32,
    units: u64,
}

/// Integer-unit index of the raw matrix.
struct FrameIndex {
    /// Real components per RB, strongest first, ties by lowest device id.
    rb_components: Vec<Vec<Component>>,
    rb_real_units: Vec<u64>,
    rb_ghost_units: Vec<u64>,
    device_units: Vec<u64>,
    device_rbs: Vec<Vec<u32>>,
    noise_units: u64,
}

impl FrameIndex {
    fn build(m0: &SignalMatrix, n_devices: usize, scale: &UnitScale) -> Result<Self> {
        let n_rbs = m0.rbs.len();
        let mut rb_components = Vec::with_capacity(n_rbs);
        let mut rb_real_units = Vec::with_capacity(n_rbs);
        let mut rb_ghost_units = Vec::with_capacity(n_rbs);
        let mut device_units = vec![0u64; n_devices];
        let mut device_rbs = vec![Vec::new(); n_devices];
        let off_grid = || Error::invalid("m0", "power is not representable on the pool's unit grid");
        for (rb_idx, rb) in m0.rbs.iter().enumerate() {
            let mut comps = Vec::with_capacity(rb.real_components.len());
            for c in &rb.real_components {
                let device = c.device_id as usize;
                if device >= n_devices {
                    return Err(Error::invalid("m0", format!("device {} outside 0..N", c.device_id)));
                }
                if device_rbs[device].last() == Some(&(rb_idx as u32)) {
                    return Err(Error::invalid("m0", format!("device {} appears twice in RB {rb_idx}", c.device_id)));
                }
                let units = scale.units_of(&c.power).ok_or_else(off_grid)?;
                device_units[device] = units;
                device_rbs[device].push(rb_idx as u32);
                comps.push(Component {
                    device: c.device_id,
                    units,
                });
            }
            comps.sort_by(|a, b| b.units.cmp(&a.units).then(a.device.cmp(&b.device)));
            rb_real_units.push(comps.iter().map(|c| c.units).sum());
            let ghost = rb
                .ghost_components
                .iter()
                .map(|g| scale.units_of(g).ok_or_else(off_grid))
                .sum::<Result<u64>>()?;
            rb_ghost_units.push(ghost);
            rb_components.push(comps);
        }
        Ok(FrameIndex {
            rb_components,
            rb_real_units,
            rb_ghost_units,
            device_units,
            device_rbs,
            noise_units: scale.noise_units(),
        })
    }

    /// SIC pass over RB `rb` of the matrix whose lineage is flagged in
    /// `in_lineage` and whose subtracted powers total `lineage_units`.
    #[inline]
    fn decode_rb(
        &self,
        rb: usize,
        lineage_units: u64,
        in_lineage: &[bool],
        scale: &UnitScale,
        mut on_decoded: impl FnMut(u32),
    ) {
        let comps = &self.rb_components[rb];
        let mut removed = 0u64;
        for c in comps {
            if in_lineage[c.device as usize] {
                removed += c.units;
            }
        }
        let ghost = lineage_units - removed + self.rb_ghost_units[rb];
        let mut total = self.rb_real_units[rb] - removed + ghost + self.noise_units;
        for c in comps {
            if in_lineage[c.device as usize] {
                continue;
            }
            let rest = total - c.units;
            if !scale.decodable(c.units, rest) {
                break;
            }
            on_decoded(c.device);
            total = rest;
        }
    }
}

/// Lineages of one iteration, flattened with a fixed width.
struct Layer {
    width: usize,
    count: usize,
    data: Vec<u32>,
}

impl Layer {
    fn root() -> Self {
        Layer {
            width: 0,
            count: 1,
            data: Vec::new(),
        }
    }

    fn lineage(&self, j: usize) -> &[u32] {
        &self.data[j * self.width..(j + 1) * self.width]
    }
}

struct Run<'a> {
    index: FrameIndex,
    scale: UnitScale,
    truth: &'a AccessMap,
    n_rbs: u64,
    decoded: Vec<bool>,
    in_lineage: Vec<bool>,
    pool: Vec<u32>,
    joined: Vec<u32>,
    counters: Counters,
    held: u64,
}

impl Run<'_> {
    fn accept(&mut self, device: u32, found: &mut Vec<u32>) {
        if self.decoded[device as usize] {
            return;
        }
        let access = &self.truth.devices[device as usize];
        let signal = DecodedSignal::new(device, access.power);
        // the CRC stand-in; components of M(0) come from the truth map
        if self.truth.validates(&signal) {
            self.decoded[device as usize] = true;
            found.push(device);
        }
    }

    fn note_storage(&mut self, mai: u64) {
        let storage = self.n_rbs * self.held + mai;
        self.counters.peak_storage = self.counters.peak_storage.max(storage);
    }
}

/// Runs the blind iterative IC decoder on the raw matrix `m0`.
///
/// `truth` supplies the CRC check and the device count used by the
/// all-recovered termination test. Matrices of the final iteration (alpha,
/// or the one in which the storage budget ran out) are scanned and dropped;
/// all earlier ones count as buffered.
pub fn run_engine(m0: &SignalMatrix, config: &SystemConfig, truth: &AccessMap) -> Result<EngineOutcome> {
    config.validate_allowing_empty()?;
    if !m0.is_raw() {
        return Err(Error::invalid("m0", "engine input must be a raw superposition"));
    }
    let n = truth.n_devices();
    let scale = UnitScale::new(&config.channel, &config.pool)?;
    let index = FrameIndex::build(m0, n, &scale)?;
    let n_rbs = m0.rbs.len() as u64;
    let budget = config.limits.storage_budget;
    let cap = match config.alpha {
        Alpha::Finite(a) => a,
        Alpha::Unbounded => config.limits.safety_iterations,
    };

    let mut run = Run {
        index,
        scale,
        truth,
        n_rbs,
        decoded: vec![false; n],
        in_lineage: vec![false; n],
        pool: Vec::new(),
        joined: Vec::new(),
        counters: Counters::default(),
        held: 1,
    };
    let mut trace = Vec::new();

    // iteration 1: plain per-RB SIC on M(0)
    run.counters.dec_ops += n_rbs;
    run.note_storage(0);
    let mut found = Vec::new();
    for rb in 0..m0.rbs.len() {
        let mut hits = Vec::new();
        run.index.decode_rb(rb, 0, &run.in_lineage, &run.scale, |d| hits.push(d));
        for d in hits {
            run.accept(d, &mut found);
        }
    }
    found.sort_unstable();
    run.joined.extend(std::iter::repeat_n(1, found.len()));
    run.pool.extend_from_slice(&found);
    trace.push(IterationRecord {
        iter: 1,
        new_matrices: 0,
        new_decoded: found,
        pool_size: run.pool.len(),
    });

    let mut frontier = Layer::root();
    let mut iteration = 1u32;
    let mut budget_exhausted = false;
    let mut safety_cap_hit = false;

    let terminated_by = loop {
        if run.pool.len() == n {
            break Termination::AllRecovered;
        }
        if budget_exhausted {
            break Termination::Exhausted;
        }
        if iteration >= cap {
            if config.alpha == Alpha::Unbounded {
                safety_cap_hit = true;
            }
            break Termination::AlphaReached;
        }
        let pool_size = run.pool.len();
        let expandable = (0..frontier.count).any(|j| {
            let start = frontier.lineage(j).last().map_or(0, |&last| last as usize + 1);
            start < pool_size
        });
        if !expandable {
            break Termination::Exhausted;
        }

        iteration += 1;
        let last_iteration = iteration == cap;
        let (next, born, found) = expand(&mut run, &frontier, last_iteration, budget, &mut budget_exhausted);
        let mut found = found;
        found.sort_unstable();
        run.joined.extend(std::iter::repeat_n(iteration, found.len()));
        run.pool.extend_from_slice(&found);
        trace.push(IterationRecord {
            iter: iteration,
            new_matrices: born,
            new_decoded: found,
            pool_size: run.pool.len(),
        });
        frontier = next;
    };

    let mut decoded: Vec<u32> = run.pool.clone();
    decoded.sort_unstable();
    let signals = run
        .pool
        .iter()
        .map(|&d| DecodedSignal::new(d, truth.devices[d as usize].power))
        .collect();
    Ok(EngineOutcome {
        decoded,
        iterations_run: iteration,
        counters: run.counters,
        terminated_by,
        pool: MaiPool {
            signals,
            joined: run.joined,
        },
        budget_exhausted,
        safety_cap_hit,
        trace,
    })
}

/// One IC + decode iteration over `frontier` using the current pool as MAI.
/// Returns the buffered children, the number of matrices materialized and
/// the newly decoded devices.
fn expand(
    run: &mut Run<'_>,
    frontier: &Layer,
    last_iteration: bool,
    budget: u64,
    budget_exhausted: &mut bool,
) -> (Layer, u64, Vec<u32>) {
    let pool_size = run.pool.len();
    let mai = pool_size as u64;
    let n_rbs = run.n_rbs;
    run.note_storage(mai);

    // RBs worth scanning for each pool signal: those it occupies that still
    // hold an undecoded device
    let mut rb_open = vec![false; run.index.rb_components.len()];
    for (rb, comps) in run.index.rb_components.iter().enumerate() {
        rb_open[rb] = comps.iter().any(|c| !run.decoded[c.device as usize]);
    }
    let useful_rbs: Vec<Vec<u32>> = run
        .pool
        .iter()
        .map(|&d| {
            run.index.device_rbs[d as usize]
                .iter()
                .copied()
                .filter(|&rb| rb_open[rb as usize])
                .collect()
        })
        .collect();
    let useful_members: Vec<usize> = (0..pool_size).filter(|&k| !useful_rbs[k].is_empty()).collect();

    let mut next = Layer {
        width: frontier.width + 1,
        count: 0,
        data: Vec::new(),
    };
    let mut holding = !last_iteration;
    let mut born = 0u64;
    let mut found = Vec::new();

    for j in 0..frontier.count {
        let lineage = frontier.lineage(j);
        let start = lineage.last().map_or(0, |&last| last as usize + 1);
        if start >= pool_size {
            continue;
        }
        let mut lineage_units = 0u64;
        for &k in lineage {
            let d = run.pool[k as usize] as usize;
            run.in_lineage[d] = true;
            lineage_units += run.index.device_units[d];
        }

        let mut k = start;
        while k < pool_size {
            if holding {
                if n_rbs * (run.held + 1) + mai > budget {
                    *budget_exhausted = true;
                    holding = false;
                    continue;
                }
                run.held += 1;
                run.note_storage(mai);
                next.data.extend_from_slice(lineage);
                next.data.push(k as u32);
                next.count += 1;
                born += 1;
                run.counters.wr_ops += 2 * n_rbs;
                run.counters.dec_ops += n_rbs;
                if !useful_rbs[k].is_empty() {
                    scan_child(run, k, lineage_units, &useful_rbs[k], &mut found);
                }
                k += 1;
            } else {
                // transient children: charged in bulk, only useful ones scanned
                let count = (pool_size - k) as u64;
                born += count;
                run.counters.wr_ops += 2 * n_rbs * count;
                run.counters.dec_ops += n_rbs * count;
                let from = useful_members.partition_point(|&m| m < k);
                for &m in &useful_members[from..] {
                    scan_child(run, m, lineage_units, &useful_rbs[m], &mut found);
                }
                break;
            }
        }

        for &k in lineage {
            run.in_lineage[run.pool[k as usize] as usize] = false;
        }
    }
    (next, born, found)
}

fn scan_child(run: &mut Run<'_>, k: usize, parent_units: u64, rbs: &[u32], found: &mut Vec<u32>) {
    let device = run.pool[k] as usize;
    run.in_lineage[device] = true;
    let lineage_units = parent_units + run.index.device_units[device];
    let mut hits = Vec::new();
    for &rb in rbs {
        run.index
            .decode_rb(rb as usize, lineage_units, &run.in_lineage, &run.scale, |d| hits.push(d));
    }
    run.in_lineage[device] = false;
    for d in hits {
        run.accept(d, found);
    }
}
