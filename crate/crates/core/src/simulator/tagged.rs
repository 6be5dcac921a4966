//! The tagged fragment and the exponential functional Y.

use crate::laws::TaggedLaw;
use crate::rng::Stream;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

/// Piecewise-constant path: `sizes[i]` holds on `[times[i], times[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggedPath {
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl TaggedPath {
    pub fn size_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.sizes[i.saturating_sub(1)]
    }
}

/// L on [0, t_max]: a fragment of size x waits an exponential time of rate
/// x^α, then shrinks by an independent factor η drawn from the tilted law.
pub fn tagged_fragment_path(tag: &TaggedLaw, alpha: f64, t_max: f64, rng: &mut Stream) -> TaggedPath {
    let mut times = vec![0.0];
    let mut sizes = vec![1.0];
    let mut t = 0.0;
    let mut x = 1.0f64;
    loop {
        let e: f64 = Exp1.sample(rng);
        t += if alpha == 0.0 { e } else { e * x.powf(-alpha) };
        if t > t_max || x == 0.0 {
            break;
        }
        x *= tag.sample(rng);
        times.push(t);
        sizes.push(x);
    }
    TaggedPath { times, sizes }
}

/// L_{t} only, without storing the path.
pub fn tagged_size_at(tag: &TaggedLaw, alpha: f64, t: f64, rng: &mut Stream) -> f64 {
    let mut clock = 0.0;
    let mut x = 1.0f64;
    loop {
        let e: f64 = Exp1.sample(rng);
        clock += if alpha == 0.0 { e } else { e * x.powf(-alpha) };
        if clock > t {
            return x;
        }
        x *= tag.sample(rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YSample {
    pub value: f64,
    /// Expected value of the discarded tail, P·q/(1-q) with q = E η^α.
    pub tail_bound: f64,
}

/// Y = Σ_{k≥0} e_k Π_{j≤k} η_j^α with η_0 from the stationary law, summed until
/// the running product drops below `eps_tail`.
pub fn sample_y(tag: &TaggedLaw, alpha: f64, eps_tail: f64, rng: &mut Stream) -> YSample {
    let q = tag.moment(alpha);
    let mut prod = tag.sample_initial(rng).powf(alpha);
    let mut value = 0.0;
    loop {
        let e: f64 = Exp1.sample(rng);
        value += e * prod;
        if prod < eps_tail {
            break;
        }
        prod *= tag.sample(rng).powf(alpha);
    }
    YSample { value, tail_bound: prod * q / (1.0 - q) }
}
