//! Generation-indexed simulation of the intrinsic martingale
//! M_n = Σ_{|u|=n} ξ_u^β*.

use crate::error::{Error, Result};
use crate::laws::ReproductionLaw;
use crate::rng::{Domain, NodeKey, StreamFactory};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRun {
    /// Σ over live generation-n nodes of ξ_u^β*.
    pub alive: Vec<f64>,
    /// β*-weight of pruned lineages up to generation n; each is carried at
    /// its (conditional mean) value, so `alive + pruned` has mean one.
    pub pruned: Vec<f64>,
}

impl GenerationRun {
    /// M_n with pruned lineages carried forward.
    pub fn martingale(&self, n: usize) -> f64 {
        self.alive[n] + self.pruned[n]
    }

    pub fn depth(&self) -> usize {
        self.alive.len() - 1
    }
}

/// One tree to depth `depth`. Lineages whose weight falls below `prune`
/// are cut; at most `max_nodes` nodes are kept per generation.
pub fn generation_martingale(
    law: &ReproductionLaw,
    depth: usize,
    prune: f64,
    master_seed: u64,
    replicate: u64,
    max_nodes: usize,
) -> Result<GenerationRun> {
    let beta_star = law.beta_star()?;
    let factory = StreamFactory::new(master_seed);
    let mut layer: Vec<(NodeKey, f64)> = vec![(NodeKey::ROOT, 1.0)];
    let mut alive = vec![1.0];
    let mut pruned = vec![0.0];
    let mut cut = 0.0;
    for _ in 0..depth {
        let mut next = Vec::with_capacity(layer.len() * 2);
        for &(key, w) in &layer {
            let mut rng = factory.stream(Domain::Generation, replicate, key.0);
            // children of weight below `prune` are not needed individually
            let floor = if prune > 0.0 { (prune / w).powf(1.0 / beta_star).min(1.0) } else { 0.0 };
            let off = law.sample_offspring(&mut rng, floor)?;
            cut += w * off.truncated_beta_mass_bound;
            for (i, &xi) in off.sizes.iter().enumerate() {
                let cw = w * xi.powf(beta_star);
                if cw < prune {
                    cut += cw;
                } else {
                    next.push((key.child(i), cw));
                }
            }
        }
        if next.len() > max_nodes {
            return Err(Error::InvalidConfig(format!(
                "generation tree exceeds {max_nodes} nodes; raise the pruning threshold"
            )));
        }
        alive.push(next.iter().map(|&(_, w)| w).sum());
        pruned.push(cut);
        layer = next;
    }
    Ok(GenerationRun { alive, pruned })
}

/// Monte Carlo moments of M∞ from the generation martingale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MInfinityEstimate {
    pub replicates: usize,
    pub depth: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
    /// First depth at which |Var M_n - Var M_{n-2}| fell below two standard
    /// errors; `None` flags non-convergence.
    pub plateau_depth: Option<usize>,
    /// (E M_n, E M_n²) estimates for n = 0..=depth.
    pub per_generation: Vec<(f64, f64)>,
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_m_infinity_moments(
    law: &ReproductionLaw,
    depth: usize,
    replicates: usize,
    prune: f64,
    master_seed: u64,
) -> Result<MInfinityEstimate> {
    if replicates < 2 || depth < 2 {
        return Err(Error::InvalidConfig("need at least two replicates and depth ≥ 2".into()));
    }
    let runs: Vec<GenerationRun> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| generation_martingale(law, depth, prune, master_seed, r, 5_000_000))
        .collect::<Result<_>>()?;
    let column = |n: usize| -> Vec<f64> { runs.iter().map(|r| r.martingale(n)).collect() };
    let mut per_generation = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let c = column(n);
        let m = c.iter().sum::<f64>() / c.len() as f64;
        let m2 = c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
        per_generation.push((m, m2));
    }
    let mut plateau_depth = None;
    for n in 2..=depth {
        let (a, b) = (column(n), column(n - 2));
        let (ma, mb) = (per_generation[n].0, per_generation[n - 2].0);
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - ma).powi(2) - (y - mb).powi(2)).collect();
        let (dm, dse) = mean_se(&d);
        if dm.abs() < 2.0 * dse || (dm == 0.0 && dse == 0.0) {
            plateau_depth = Some(n);
            break;
        }
    }
    let last = column(depth);
    let (mean, mean_se_v) = mean_se(&last);
    let sq: Vec<f64> = last.iter().map(|x| x * x).collect();
    let (second_moment, second_moment_se) = mean_se(&sq);
    Ok(MInfinityEstimate {
        replicates,
        depth,
        mean,
        mean_se: mean_se_v,
        second_moment,
        second_moment_se,
        plateau_depth,
        per_generation,
    })
}
