//! Monte Carlo: the process in natural time, the generation tree, and the
//! tagged fragment.

mod genealogy;
mod natural;
mod tagged;

pub use genealogy::{estimate_m_infinity_moments, generation_martingale, mean_se, GenerationRun, MInfinityEstimate};
pub use natural::{
    run, run_replicates, snapshot_power_sum, snapshot_power_sum_bounded, PopulationSnapshot, PowerSum, RunOutput,
    SimulationConfig,
};
pub use tagged::{sample_y, tagged_fragment_path, tagged_size_at, TaggedPath, YSample};

