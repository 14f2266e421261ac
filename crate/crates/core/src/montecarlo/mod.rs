//! Monte Carlo trajectories through the box, sharded over reproducible streams,
//! with joint histograms binned in each face pair's canonical frame.

pub mod direction;
pub mod histogram;
pub mod record;
pub mod rng;
pub mod sampler;

use serde::{Deserialize, Serialize};

pub use direction::{sample_direction, DirectionStats};
pub use histogram::{
    CollectSpec, Collector, HistogramSet, HistogramSpec, JointHistogram, LengthHistogram,
    LengthRange, PairTable, ProbeResult, ProbeSpec,
};
pub use rng::{SeededStream, StreamRng, GENERATOR};
pub use sampler::{
    exit_ray, for_each_in_order, generate, measure_throughput, run_shards, SampleConfig,
    SamplerKind, SamplerStats, ShardSampler, Trajectory, DEFAULT_SHARDS,
};

use crate::error::Result;

/// Everything a sampling run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub config: SampleConfig,
    pub stats: SamplerStats,
    pub collected: Collector,
}

impl SampleRun {
    pub fn joint(&self) -> Option<&HistogramSet> {
        self.collected.joint.as_ref()
    }

    pub fn lengths(&self) -> Option<&LengthHistogram> {
        self.collected.lengths.as_ref()
    }

    /// Same-face redraws per accepted Case II sample.
    pub fn same_face_rate(&self) -> f64 {
        let s = &self.stats;
        s.same_face_resamples as f64 / (s.samples + s.same_face_resamples) as f64
    }
}

/// Draw `cfg.n_samples` trajectories and accumulate them per `spec`. Shard
/// collectors are merged in shard order, so floating-point sums are identical
/// for any worker count.
pub fn sample(cfg: &SampleConfig, spec: &CollectSpec) -> Result<SampleRun> {
    let template = Collector::new(cfg.dims, spec)?;
    let shards = run_shards(cfg, || template.clone(), |c, t| c.visit(t))?;
    let mut collected = template;
    let mut stats = SamplerStats::default();
    for (c, s) in &shards {
        collected.merge(c)?;
        stats.merge(s);
    }
    collected.finish();
    Ok(SampleRun {
        config: cfg.clone(),
        stats,
        collected,
    })
}
