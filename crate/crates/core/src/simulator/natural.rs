//! Exact event-driven simulation in natural time.

use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::rng::{Domain, NodeKey, StreamFactory};
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    /// Self-similarity index; 0 selects the homogeneous process.
    pub alpha: f64,
    pub t_max: f64,
    /// Children smaller than this (absolute size) are frozen, not simulated.
    pub child_floor: f64,
    pub max_particles: usize,
    pub master_seed: u64,
    pub snapshot_times: Vec<f64>,
}

impl SimulationConfig {
    pub fn new(alpha: f64, snapshot_times: Vec<f64>, master_seed: u64) -> Self {
        let t_max = snapshot_times.iter().copied().fold(0.0, f64::max);
        Self { alpha, t_max, child_floor: 1e-9, max_particles: 10_000_000, master_seed, snapshot_times }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("α must be ≥ 0, got {}", self.alpha)));
        }
        if !(self.child_floor >= 0.0) {
            return Err(Error::InvalidConfig("child floor must be ≥ 0".into()));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("snapshot times must be sorted".into()));
        }
        if self.snapshot_times.iter().any(|&s| !(0.0..=self.t_max).contains(&s)) {
            return Err(Error::InvalidConfig("snapshot times must lie in [0, t_max]".into()));
        }
        Ok(())
    }
}

/// Sizes alive at time `t` in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSnapshot {
    pub t: f64,
    pub replicate_id: u64,
    pub master_seed: u64,
    /// Sizes in ]0, 1], decreasing.
    pub sizes: Vec<f64>,
    /// β*-mass of lineages frozen below the child floor so far.
    pub frozen_beta_mass_bound: f64,
    pub child_floor: f64,
}

impl PopulationSnapshot {
    pub fn power_sum(&self, beta: f64) -> f64 {
        snapshot_power_sum(self, beta).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSum {
    pub value: f64,
    /// Bound on the contribution of frozen lineages (only for β ≥ β*).
    pub truncation_bound: Option<f64>,
}

/// M(t, β) = Σ_j X_j(t)^β, with the frozen-mass bound scaled to exponent β.
pub fn snapshot_power_sum(snapshot: &PopulationSnapshot, beta: f64) -> PowerSum {
    let value = snapshot.sizes.iter().map(|x| x.powf(beta)).sum();
    PowerSum { value, truncation_bound: None }
}

/// Like [`snapshot_power_sum`], attaching `frozen · floor^{β-β*}` when β ≥ β*.
pub fn snapshot_power_sum_bounded(snapshot: &PopulationSnapshot, beta: f64, beta_star: f64) -> PowerSum {
    let mut s = snapshot_power_sum(snapshot, beta);
    if beta >= beta_star {
        let scale = if beta == beta_star { 1.0 } else { snapshot.child_floor.powf(beta - beta_star) };
        s.truncation_bound = Some(snapshot.frozen_beta_mass_bound * scale);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub replicate_id: u64,
    pub snapshots: Vec<PopulationSnapshot>,
    /// Set when the population cap stopped the run; later snapshots are missing.
    pub cap_exceeded: bool,
    pub splits: u64,
}

#[derive(Debug, Clone, Copy)]
struct Particle {
    death: f64,
    size: f64,
    key: NodeKey,
}

impl PartialEq for Particle {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Particle {}
impl PartialOrd for Particle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Particle {
    // min-heap on death time; ties broken by node key for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other.death.total_cmp(&self.death).then_with(|| other.key.cmp(&self.key))
    }
}

fn lifetime(factory: &StreamFactory, replicate: u64, key: NodeKey, size: f64, alpha: f64) -> f64 {
    let mut rng = factory.stream(Domain::Exponential, replicate, key.0);
    let e: f64 = Exp1.sample(&mut rng);
    if alpha == 0.0 {
        e
    } else {
        e * size.powf(-alpha)
    }
}

/// One replicate. Each particle's lifetime and offspring come from streams
/// labelled by its node key, so the outcome does not depend on event order.
pub fn run(config: &SimulationConfig, law: &ReproductionLaw, replicate: u64) -> Result<RunOutput> {
    config.validate()?;
    if !law.has_sampler() {
        return Err(Error::UnsupportedSampler(format!("{} exposes φ only", law.name())));
    }
    let beta_star = law.beta_star()?;
    let factory = StreamFactory::new(config.master_seed);
    let mut heap = BinaryHeap::new();
    let root = NodeKey::ROOT;
    heap.push(Particle { death: lifetime(&factory, replicate, root, 1.0, config.alpha), size: 1.0, key: root });
    let mut frozen = 0.0;
    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    let mut next_snap = 0;
    let mut splits = 0u64;
    let take = |heap: &BinaryHeap<Particle>, t: f64, frozen: f64| {
        let mut sizes: Vec<f64> = heap.iter().map(|p| p.size).collect();
        sizes.sort_by(|a, b| b.total_cmp(a));
        PopulationSnapshot {
            t,
            replicate_id: replicate,
            master_seed: config.master_seed,
            sizes,
            frozen_beta_mass_bound: frozen,
            child_floor: config.child_floor,
        }
    };
    while next_snap < config.snapshot_times.len() {
        let horizon = heap.peek().map_or(f64::INFINITY, |p| p.death);
        while next_snap < config.snapshot_times.len() && config.snapshot_times[next_snap] < horizon {
            snapshots.push(take(&heap, config.snapshot_times[next_snap], frozen));
            next_snap += 1;
        }
        if next_snap == config.snapshot_times.len() {
            break;
        }
        let parent = heap.pop().expect("non-empty heap below the horizon");
        let mut rng = factory.stream(Domain::Offspring, replicate, parent.key.0);
        let rel_floor = if parent.size > 0.0 { config.child_floor / parent.size } else { 1.0 };
        let offspring = law.sample_offspring(&mut rng, rel_floor)?;
        splits += 1;
        frozen += parent.size.powf(beta_star) * offspring.truncated_beta_mass_bound;
        for (i, &xi) in offspring.sizes.iter().enumerate() {
            let size = parent.size * xi;
            debug_assert!(size <= parent.size);
            let key = parent.key.child(i);
            let death = parent.death + lifetime(&factory, replicate, key, size, config.alpha);
            heap.push(Particle { death, size, key });
        }
        if heap.len() > config.max_particles {
            return Ok(RunOutput { replicate_id: replicate, snapshots, cap_exceeded: true, splits });
        }
    }
    Ok(RunOutput { replicate_id: replicate, snapshots, cap_exceeded: false, splits })
}

/// Replicates `first..first+count`, in parallel on the current rayon pool.
/// The result is ordered by replicate id.
pub fn run_replicates(config: &SimulationConfig, law: &ReproductionLaw, first: u64, count: u64) -> Result<Vec<RunOutput>> {
    (first..first + count).into_par_iter().map(|r| run(config, law, r)).collect()
}
