//! Trajectory samplers. Sample `i` of a run is always drawn by shard
//! `i mod shards` from stream `(seed, shard)`, so results do not depend on the
//! number of worker threads.

use serde::{Deserialize, Serialize};

use crate::case1::DirectionModel;
use crate::error::{Error, Result};
use crate::geometry::{face_area, BoxDims, FaceId, Side};
use crate::montecarlo::direction::{sample_direction, DirectionStats};
use crate::montecarlo::rng::{SeededStream, StreamRng};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub entry_face: FaceId,
    /// Face-local entry coordinates (in-plane axes in ascending order).
    pub entry: [f64; 2],
    pub exit_face: FaceId,
    pub exit: [f64; 2],
    pub length: f64,
}

impl Trajectory {
    pub fn entry_point(&self, dims: &BoxDims) -> [f64; 3] {
        self.entry_face.to_world(dims, self.entry)
    }

    pub fn exit_point(&self, dims: &BoxDims) -> [f64; 3] {
        self.exit_face.to_world(dims, self.exit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerKind {
    /// Uniform entry point and a random inward direction.
    Case1 { direction: DirectionModel },
    /// Uniform entry and exit points on distinct faces (same-face exits resampled).
    Case2,
    /// Two uniform surface points, same-face pairs kept.
    Baseline,
}

impl SamplerKind {
    pub fn label(&self) -> String {
        match self {
            SamplerKind::Case1 { direction } => format!("case1/{}", direction.label()),
            SamplerKind::Case2 => "case2".into(),
            SamplerKind::Baseline => "baseline".into(),
        }
    }
}

pub const DEFAULT_SHARDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub dims: BoxDims,
    pub kind: SamplerKind,
    pub seed: u64,
    pub n_samples: u64,
    #[serde(default = "default_shards")]
    pub shards: usize,
    /// Restrict entries to one face (uniform on it).
    #[serde(default)]
    pub entry_face: Option<FaceId>,
}

fn default_shards() -> usize {
    DEFAULT_SHARDS
}

impl SampleConfig {
    pub fn new(dims: BoxDims, kind: SamplerKind, seed: u64, n_samples: u64) -> Self {
        Self {
            dims,
            kind,
            seed,
            n_samples,
            shards: DEFAULT_SHARDS,
            entry_face: None,
        }
    }

    pub fn with_entry_face(mut self, face: FaceId) -> Self {
        self.entry_face = Some(face);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Unsupported("at least one sample is required".into()));
        }
        if self.shards == 0 {
            return Err(Error::Unsupported("at least one shard is required".into()));
        }
        Ok(())
    }

    /// Number of samples drawn by `shard`.
    pub fn shard_len(&self, shard: usize) -> u64 {
        let s = self.shards as u64;
        let shard = shard as u64;
        if shard >= self.n_samples {
            0
        } else {
            (self.n_samples - shard).div_ceil(s)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub samples: u64,
    /// Case II exits redrawn because they fell on the entry face.
    pub same_face_resamples: u64,
    /// Rays redrawn because they left through an edge of the entry face.
    pub degenerate_rays: u64,
    pub direction_proposals: u64,
    pub directions_accepted: u64,
}

impl SamplerStats {
    pub fn merge(&mut self, other: &SamplerStats) {
        self.samples += other.samples;
        self.same_face_resamples += other.same_face_resamples;
        self.degenerate_rays += other.degenerate_rays;
        self.direction_proposals += other.direction_proposals;
        self.directions_accepted += other.directions_accepted;
    }
}

/// Face draws proportional to area, by inverse CDF over [`FaceId::ALL`].
#[derive(Debug, Clone, Copy)]
struct FacePicker {
    cumulative: [f64; 6],
}

impl FacePicker {
    fn new(dims: &BoxDims) -> Self {
        let mut cumulative = [0.0; 6];
        let mut acc = 0.0;
        for (m, f) in FaceId::ALL.iter().enumerate() {
            acc += face_area(dims, *f);
            cumulative[m] = acc;
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        Self { cumulative }
    }

    #[inline]
    fn pick(&self, u: f64) -> FaceId {
        let m = self.cumulative.iter().position(|c| u < *c).unwrap_or(5);
        FaceId::ALL[m]
    }
}

/// Draws trajectories for one shard.
pub struct ShardSampler {
    dims: BoxDims,
    sides: [f64; 3],
    kind: SamplerKind,
    entry_face: Option<FaceId>,
    faces: FacePicker,
    rng: StreamRng,
    dir_stats: DirectionStats,
    pub stats: SamplerStats,
}

impl ShardSampler {
    pub fn new(cfg: &SampleConfig, shard: usize) -> Self {
        Self {
            dims: cfg.dims,
            sides: cfg.dims.as_array(),
            kind: cfg.kind,
            entry_face: cfg.entry_face,
            faces: FacePicker::new(&cfg.dims),
            rng: SeededStream::new(cfg.seed, shard as u64).rng(),
            dir_stats: DirectionStats::default(),
            stats: SamplerStats::default(),
        }
    }

    #[inline]
    fn point_on(&mut self, face: FaceId) -> [f64; 2] {
        let [a, b] = face.local_dims(&self.dims);
        [self.rng.uniform() * a, self.rng.uniform() * b]
    }

    #[inline]
    pub fn next_trajectory(&mut self) -> Trajectory {
        let t = match self.kind {
            SamplerKind::Case1 { direction } => self.case1(direction),
            SamplerKind::Case2 => self.two_point(false),
            SamplerKind::Baseline => self.two_point(true),
        };
        self.stats.samples += 1;
        t
    }

    fn entry(&mut self) -> FaceId {
        match self.entry_face {
            Some(f) => f,
            None => {
                let u = self.rng.uniform();
                self.faces.pick(u)
            }
        }
    }

    fn case1(&mut self, direction: DirectionModel) -> Trajectory {
        loop {
            let face = self.entry();
            let local = self.point_on(face);
            let p = face.to_world(&self.dims, local);
            let sign = match face.side() {
                Side::Low => 1.0,
                Side::High => -1.0,
            };
            let d = sample_direction(
                &mut self.rng,
                direction,
                face.axis(),
                sign,
                &mut self.dir_stats,
            );
            self.stats.direction_proposals = self.dir_stats.proposals;
            self.stats.directions_accepted = self.dir_stats.accepted;
            match exit_ray(self.sides, p, d) {
                Some((exit_face, q)) => {
                    let exit = exit_face.to_local(q);
                    return Trajectory {
                        entry_face: face,
                        entry: local,
                        exit_face,
                        exit,
                        length: distance(p, q),
                    };
                }
                None => self.stats.degenerate_rays += 1,
            }
        }
    }

    fn two_point(&mut self, keep_same_face: bool) -> Trajectory {
        let face = self.entry();
        let local = self.point_on(face);
        let exit_face = loop {
            let u = self.rng.uniform();
            let f = self.faces.pick(u);
            if keep_same_face || f != face {
                break f;
            }
            self.stats.same_face_resamples += 1;
        };
        let exit = self.point_on(exit_face);
        let p = face.to_world(&self.dims, local);
        let q = exit_face.to_world(&self.dims, exit);
        Trajectory {
            entry_face: face,
            entry: local,
            exit_face,
            exit,
            length: distance(p, q),
        }
    }
}

#[inline]
fn distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Exit of the ray `p + t d` from the box `[0, X]³` by the slab method. Zero
/// components never bound the exit time. `None` when the ray has no positive
/// exit time (it grazes the entry face's boundary).
#[inline]
pub fn exit_ray(sides: [f64; 3], p: [f64; 3], d: [f64; 3]) -> Option<(FaceId, [f64; 3])> {
    let mut best = f64::INFINITY;
    let mut axis = 0;
    for a in 0..3 {
        let t = if d[a] > 0.0 {
            (sides[a] - p[a]) / d[a]
        } else if d[a] < 0.0 {
            -p[a] / d[a]
        } else {
            f64::INFINITY
        };
        if t < best {
            best = t;
            axis = a;
        }
    }
    if !(best > 0.0 && best.is_finite()) {
        return None;
    }
    let side = if d[axis] > 0.0 { Side::High } else { Side::Low };
    let mut q = [0.0; 3];
    for a in 0..3 {
        q[a] = (p[a] + best * d[a]).clamp(0.0, sides[a]);
    }
    q[axis] = if side == Side::High { sides[axis] } else { 0.0 };
    Some((FaceId::new(axis, side), q))
}

/// Run every shard with its own accumulator; results come back in shard order.
pub fn run_shards<T: Send>(
    cfg: &SampleConfig,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, &Trajectory) + Sync,
) -> Result<Vec<(T, SamplerStats)>> {
    cfg.validate()?;
    Ok(par::map_indices(cfg.shards, |shard| {
        let mut acc = init();
        let mut sampler = ShardSampler::new(cfg, shard);
        for _ in 0..cfg.shard_len(shard) {
            let t = sampler.next_trajectory();
            visit(&mut acc, &t);
        }
        (acc, sampler.stats)
    }))
}

/// All trajectories of a run in sample-index order. Meant for small runs.
pub fn generate(cfg: &SampleConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let per_shard = par::map_indices(cfg.shards, |shard| {
        let mut sampler = ShardSampler::new(cfg, shard);
        (0..cfg.shard_len(shard))
            .map(|_| sampler.next_trajectory())
            .collect::<Vec<_>>()
    });
    let mut out = Vec::with_capacity(cfg.n_samples as usize);
    let mut cursors = vec![0usize; cfg.shards];
    for i in 0..cfg.n_samples as usize {
        let s = i % cfg.shards;
        out.push(per_shard[s][cursors[s]]);
        cursors[s] += 1;
    }
    Ok(out)
}

/// Visit every trajectory in sample-index order, generating blocks in parallel.
pub fn for_each_in_order(
    cfg: &SampleConfig,
    block: usize,
    mut visit: impl FnMut(&Trajectory) -> Result<()>,
) -> Result<SamplerStats> {
    cfg.validate()?;
    let block = block.max(1) as u64;
    let mut samplers: Vec<ShardSampler> =
        (0..cfg.shards).map(|s| ShardSampler::new(cfg, s)).collect();
    let mut done = vec![0u64; cfg.shards];
    let mut index = 0u64;
    while index < cfg.n_samples {
        let take: Vec<u64> = (0..cfg.shards)
            .map(|s| block.min(cfg.shard_len(s) - done[s]))
            .collect();
        let chunks: Vec<Vec<Trajectory>> = par::map_mut(&mut samplers, |s, sampler| {
            (0..take[s]).map(|_| sampler.next_trajectory()).collect()
        });
        let rows = take.iter().copied().max().unwrap_or(0) as usize;
        for r in 0..rows {
            for chunk in &chunks {
                if let Some(t) = chunk.get(r) {
                    visit(t)?;
                    index += 1;
                }
            }
        }
        for (d, t) in done.iter_mut().zip(&take) {
            *d += t;
        }
    }
    let mut stats = SamplerStats::default();
    for s in &samplers {
        stats.merge(&s.stats);
    }
    Ok(stats)
}

/// Trajectories per second drawn by one thread without any accumulation.
pub fn measure_throughput(cfg: &SampleConfig, n: u64) -> f64 {
    let mut sampler = ShardSampler::new(cfg, 0);
    let start = std::time::Instant::now();
    let mut sink = 0.0;
    for _ in 0..n {
        sink += sampler.next_trajectory().length;
    }
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    n as f64 / elapsed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_across_from_the_centre() {
        let (face, q) = exit_ray([1.0; 3], [0.5, 0.0, 0.5], [0.0, 0.7, 0.0]).unwrap();
        assert_eq!(face, FaceId::new(1, Side::High));
        assert_eq!(q, [0.5, 1.0, 0.5]);
        assert!(exit_ray([1.0; 3], [0.0, 0.0, 0.5], [-1.0, 1.0, 0.0]).is_none());
    }

    #[test]
    fn shard_lengths_cover_the_run() {
        let mut cfg = SampleConfig::new(BoxDims::cube(), SamplerKind::Case2, 1, 1000);
        cfg.shards = 64;
        assert_eq!((0..64).map(|s| cfg.shard_len(s)).sum::<u64>(), 1000);
        cfg.n_samples = 10;
        assert_eq!((0..64).map(|s| cfg.shard_len(s)).sum::<u64>(), 10);
    }

    #[test]
    fn ordered_visit_matches_generate() {
        let mut cfg = SampleConfig::new(
            BoxDims::new(1.0, 2.0, 1.0).unwrap(),
            SamplerKind::Case1 {
                direction: DirectionModel::CubeComponents,
            },
            9,
            777,
        );
        cfg.shards = 8;
        let all = generate(&cfg).unwrap();
        let mut seen = Vec::new();
        for_each_in_order(&cfg, 5, |t| {
            seen.push(*t);
            Ok(())
        })
        .unwrap();
        assert_eq!(all, seen);
    }

    #[test]
    fn trajectory_invariants() {
        let dims = BoxDims::new(1.0, 0.1, 1.0).unwrap();
        for kind in [
            SamplerKind::Case1 {
                direction: DirectionModel::BallRejection,
            },
            SamplerKind::Case2,
        ] {
            let cfg = SampleConfig::new(dims, kind, 5, 20_000);
            for t in generate(&cfg).unwrap() {
                assert_ne!(t.entry_face, t.exit_face);
                let d = distance(t.entry_point(&dims), t.exit_point(&dims));
                assert!((d - t.length).abs() <= 1e-12 * d.max(1.0));
            }
        }
    }
}
