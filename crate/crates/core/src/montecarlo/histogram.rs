//! Histograms of sampled trajectories. Exit coordinates are binned in the
//! canonical frame of each face pair's class, so a bin of any world pair lines
//! up with a cell of the class density.

use serde::{Deserialize, Serialize};

use crate::density::grid::{Axis, GridDensity1D, GridDensity2D, GridDensity3D};
use crate::error::{Error, Result};
use crate::geometry::{classify_pair, BoxDims, CanonicalClass, FaceId, FacePairClass, PairKind};
use crate::montecarlo::sampler::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthRange {
    /// The class's own length range.
    #[default]
    Class,
    /// `[0, diagonal]` for every class.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub n_bins: usize,
    pub a_bins: usize,
    pub b_bins: usize,
    #[serde(default)]
    pub n_range: LengthRange,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            n_bins: 12,
            a_bins: 6,
            b_bins: 6,
            n_range: LengthRange::Class,
        }
    }
}

impl HistogramSpec {
    /// Bin axes over `(n, a, b)` for `class`.
    pub fn axes(&self, dims: &BoxDims, class: CanonicalClass) -> Result<[Axis; 3]> {
        let (lo, hi) = match self.n_range {
            LengthRange::Class => class.length_range(dims),
            LengthRange::Full => (0.0, dims.diagonal()),
        };
        let [ea, eb] = class.exit_dims(dims);
        Ok([
            Axis::cells(lo, hi, self.n_bins)?,
            Axis::cells(0.0, ea, self.a_bins)?,
            Axis::cells(0.0, eb, self.b_bins)?,
        ])
    }
}

/// Bin index of `x` on a cell axis, `None` outside it.
#[inline]
fn bin_of(axis: &Axis, x: f64) -> Option<usize> {
    if !(x >= axis.lo() && x <= axis.hi()) {
        return None;
    }
    Some((((x - axis.lo()) / axis.step()) as usize).min(axis.len() - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointHistogram {
    pub entry_face: FaceId,
    pub exit_face: FaceId,
    pub class: CanonicalClass,
    pub axes: [Axis; 3],
    /// Row-major over `(n, a, b)`.
    pub counts: Vec<u64>,
    /// Samples of this pair falling outside the bins.
    pub overflow: u64,
    /// Samples in the whole run; the denominator of densities.
    pub total: u64,
}

impl JointHistogram {
    pub fn new(
        entry_face: FaceId,
        exit_face: FaceId,
        class: CanonicalClass,
        axes: [Axis; 3],
    ) -> Self {
        let len = axes.iter().map(|a| a.len()).product();
        Self {
            entry_face,
            exit_face,
            class,
            axes,
            counts: vec![0; len],
            overflow: 0,
            total: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, n: f64, a: f64, b: f64) {
        match (
            bin_of(&self.axes[0], n),
            bin_of(&self.axes[1], a),
            bin_of(&self.axes[2], b),
        ) {
            (Some(i), Some(j), Some(k)) => {
                let (na, nb) = (self.axes[1].len(), self.axes[2].len());
                self.counts[(i * na + j) * nb + k] += 1;
            }
            _ => self.overflow += 1,
        }
    }

    /// Adds counts of a histogram with the same axes.
    pub fn merge(&mut self, other: &JointHistogram) -> Result<()> {
        if self.axes != other.axes {
            return Err(Error::IncompatibleBins(
                "joint histograms use different bins".into(),
            ));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts divided by the run total and the bin volume.
    pub fn to_density(&self) -> Result<GridDensity3D> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let vol = self.axes[0].step() * self.axes[1].step() * self.axes[2].step();
        let scale = 1.0 / (self.total as f64 * vol);
        GridDensity3D::new(
            self.axes,
            self.counts.iter().map(|c| *c as f64 * scale).collect(),
        )
    }
}

/// Joint histograms for all thirty ordered pairs of distinct faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSet {
    pub dims: BoxDims,
    pub spec: HistogramSpec,
    pub pairs: Vec<JointHistogram>,
    /// Baseline samples whose endpoints share a face (not binned).
    pub same_face: u64,
    pub total: u64,
}

impl HistogramSet {
    pub fn new(dims: BoxDims, spec: HistogramSpec) -> Result<Self> {
        let mut pairs = Vec::with_capacity(30);
        for entry in FaceId::ALL {
            for exit in FaceId::ALL.into_iter().filter(|f| *f != entry) {
                let class = classify_pair(entry, exit).class;
                pairs.push(JointHistogram::new(
                    entry,
                    exit,
                    class,
                    spec.axes(&dims, class)?,
                ));
            }
        }
        Ok(Self {
            dims,
            spec,
            pairs,
            same_face: 0,
            total: 0,
        })
    }

    fn slot(entry: FaceId, exit: FaceId) -> usize {
        let (e, x) = (entry.index(), exit.index());
        e * 5 + if x > e { x - 1 } else { x }
    }

    pub fn pair(&self, entry: FaceId, exit: FaceId) -> Option<&JointHistogram> {
        if entry == exit {
            return None;
        }
        self.pairs.get(Self::slot(entry, exit))
    }

    #[inline]
    fn add(&mut self, table: &PairTable, t: &Trajectory) {
        self.total += 1;
        if t.entry_face == t.exit_face {
            self.same_face += 1;
            return;
        }
        let [a, b] = table.canonical_exit(&self.dims, t);
        self.pairs[Self::slot(t.entry_face, t.exit_face)].add(t.length, a, b);
    }

    pub fn merge(&mut self, other: &HistogramSet) -> Result<()> {
        if self.spec != other.spec || self.dims != other.dims {
            return Err(Error::IncompatibleBins(
                "histogram sets use different bins".into(),
            ));
        }
        for (p, o) in self.pairs.iter_mut().zip(&other.pairs) {
            p.merge(o)?;
        }
        self.same_face += other.same_face;
        self.total += other.total;
        self.set_totals();
        Ok(())
    }

    fn set_totals(&mut self) {
        let total = self.total;
        for p in &mut self.pairs {
            p.total = total;
        }
    }

    /// Sum of the histograms of every pair in `class`.
    pub fn fold(&self, class: CanonicalClass) -> Result<JointHistogram> {
        let (entry, exit) = class.representative();
        let mut out = JointHistogram::new(entry, exit, class, self.spec.axes(&self.dims, class)?);
        out.total = self.total;
        for p in self.pairs.iter().filter(|p| p.class == class) {
            out.merge(p)?;
        }
        Ok(out)
    }

    pub fn overflow(&self) -> u64 {
        self.pairs.iter().map(|p| p.overflow).sum()
    }

    pub fn binned(&self) -> u64 {
        self.pairs.iter().map(|p| p.in_range()).sum()
    }
}

/// Canonical-frame maps of all 36 ordered face pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    pairs: Vec<FacePairClass>,
}

impl Default for PairTable {
    fn default() -> Self {
        let mut pairs = Vec::with_capacity(36);
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                pairs.push(classify_pair(entry, exit));
            }
        }
        Self { pairs }
    }
}

impl PairTable {
    #[inline]
    pub fn get(&self, entry: FaceId, exit: FaceId) -> &FacePairClass {
        &self.pairs[entry.index() * 6 + exit.index()]
    }

    #[inline]
    pub fn canonical_exit(&self, dims: &BoxDims, t: &Trajectory) -> [f64; 2] {
        self.get(t.entry_face, t.exit_face)
            .exit_to_canonical(dims, t.exit)
    }
}

/// Histogram of lengths over all face pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub axis: Axis,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub total: u64,
    /// Sum of all sampled lengths, in range or not.
    pub sum: f64,
}

impl LengthHistogram {
    pub fn new(axis: Axis) -> Self {
        Self {
            axis,
            counts: vec![0; axis.len()],
            overflow: 0,
            total: 0,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, n: f64) {
        self.total += 1;
        self.sum += n;
        match bin_of(&self.axis, n) {
            Some(i) => self.counts[i] += 1,
            None => self.overflow += 1,
        }
    }

    pub fn merge(&mut self, other: &LengthHistogram) -> Result<()> {
        if self.axis != other.axis {
            return Err(Error::IncompatibleBins(
                "length histograms use different bins".into(),
            ));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.overflow += other.overflow;
        self.total += other.total;
        self.sum += other.sum;
        Ok(())
    }

    pub fn mean(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        Ok(self.sum / self.total as f64)
    }

    pub fn to_density(&self) -> Result<GridDensity1D> {
        if self.total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let scale = 1.0 / (self.total as f64 * self.axis.step());
        GridDensity1D::new(
            [self.axis],
            self.counts.iter().map(|c| *c as f64 * scale).collect(),
        )
    }
}

/// Extra collectors for figure products that need finer bins than the joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeSpec {
    /// Length histogram of `class` samples whose canonical exit lies in the cell.
    Location {
        class: CanonicalClass,
        a: (f64, f64),
        b: (f64, f64),
        n_axis: Axis,
    },
    /// Exit-location histogram of `class` samples with length in `n`.
    Band {
        class: CanonicalClass,
        n: (f64, f64),
        a_bins: usize,
        b_bins: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub spec: ProbeSpec,
    pub counts: Vec<u64>,
    /// Samples that satisfied the probe's filter.
    pub hits: u64,
    pub total: u64,
}

impl ProbeResult {
    fn new(spec: ProbeSpec) -> Self {
        let len = match &spec {
            ProbeSpec::Location { n_axis, .. } => n_axis.len(),
            ProbeSpec::Band { a_bins, b_bins, .. } => a_bins * b_bins,
        };
        Self {
            spec,
            counts: vec![0; len],
            hits: 0,
            total: 0,
        }
    }

    #[inline]
    fn add(&mut self, dims: &BoxDims, table: &PairTable, t: &Trajectory) {
        self.total += 1;
        let pair = table.get(t.entry_face, t.exit_face);
        let class = match &self.spec {
            ProbeSpec::Location { class, .. } | ProbeSpec::Band { class, .. } => *class,
        };
        if pair.class != class || pair.kind == PairKind::Same {
            return;
        }
        let [a, b] = pair.exit_to_canonical(dims, t.exit);
        match &self.spec {
            ProbeSpec::Location {
                a: ra,
                b: rb,
                n_axis,
                ..
            } => {
                if a >= ra.0 && a < ra.1 && b >= rb.0 && b < rb.1 {
                    self.hits += 1;
                    if let Some(i) = bin_of(n_axis, t.length) {
                        self.counts[i] += 1;
                    }
                }
            }
            ProbeSpec::Band {
                n,
                a_bins,
                b_bins,
                class,
            } => {
                if t.length >= n.0 && t.length <= n.1 {
                    self.hits += 1;
                    let [ea, eb] = class.exit_dims(dims);
                    let i = ((a / ea * *a_bins as f64) as usize).min(a_bins - 1);
                    let j = ((b / eb * *b_bins as f64) as usize).min(b_bins - 1);
                    self.counts[i * b_bins + j] += 1;
                }
            }
        }
    }

    fn merge(&mut self, other: &ProbeResult) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.hits += other.hits;
        self.total += other.total;
    }

    /// Length density of a location probe, normalized over its hits.
    pub fn location_density(&self) -> Result<GridDensity1D> {
        match &self.spec {
            ProbeSpec::Location { n_axis, .. } => {
                let binned: u64 = self.counts.iter().sum();
                if binned == 0 {
                    return Err(Error::EmptyCell);
                }
                let scale = 1.0 / (binned as f64 * n_axis.step());
                GridDensity1D::new(
                    [*n_axis],
                    self.counts.iter().map(|c| *c as f64 * scale).collect(),
                )
            }
            _ => Err(Error::Unsupported("not a location probe".into())),
        }
    }

    /// Exit density of a band probe per unit area, as a fraction of all samples.
    pub fn band_density(&self, dims: &BoxDims) -> Result<GridDensity2D> {
        match &self.spec {
            ProbeSpec::Band {
                class,
                a_bins,
                b_bins,
                ..
            } => {
                if self.total == 0 {
                    return Err(Error::EmptyHistogram);
                }
                let [ea, eb] = class.exit_dims(dims);
                let axes = [
                    Axis::cells(0.0, ea, *a_bins)?,
                    Axis::cells(0.0, eb, *b_bins)?,
                ];
                let scale = 1.0 / (self.total as f64 * axes[0].step() * axes[1].step());
                GridDensity2D::new(
                    axes,
                    self.counts.iter().map(|c| *c as f64 * scale).collect(),
                )
            }
            _ => Err(Error::Unsupported("not a band probe".into())),
        }
    }
}

/// What a sampling run accumulates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CollectSpec {
    #[serde(default)]
    pub joint: Option<HistogramSpec>,
    /// Cell count of the all-pairs length histogram over `[0, diagonal]`.
    #[serde(default)]
    pub length_bins: Option<usize>,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
}

/// Accumulates one shard (or a merged run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collector {
    pub joint: Option<HistogramSet>,
    pub lengths: Option<LengthHistogram>,
    pub probes: Vec<ProbeResult>,
    #[serde(skip)]
    table: PairTable,
    dims: BoxDims,
}

impl Collector {
    pub fn new(dims: BoxDims, spec: &CollectSpec) -> Result<Self> {
        let joint = spec.joint.map(|s| HistogramSet::new(dims, s)).transpose()?;
        let lengths = match spec.length_bins {
            Some(bins) => Some(LengthHistogram::new(Axis::cells(
                0.0,
                dims.diagonal(),
                bins,
            )?)),
            None => None,
        };
        let probes = spec.probes.iter().cloned().map(ProbeResult::new).collect();
        Ok(Self {
            joint,
            lengths,
            probes,
            table: PairTable::default(),
            dims,
        })
    }

    #[inline]
    pub fn visit(&mut self, t: &Trajectory) {
        let table = &self.table;
        if let Some(j) = &mut self.joint {
            j.add(table, t);
        }
        if let Some(l) = &mut self.lengths {
            l.add(t.length);
        }
        for p in &mut self.probes {
            p.add(&self.dims, table, t);
        }
    }

    pub fn merge(&mut self, other: &Collector) -> Result<()> {
        match (&mut self.joint, &other.joint) {
            (Some(a), Some(b)) => a.merge(b)?,
            (None, None) => {}
            _ => return Err(Error::IncompatibleBins("collectors differ".into())),
        }
        match (&mut self.lengths, &other.lengths) {
            (Some(a), Some(b)) => a.merge(b)?,
            (None, None) => {}
            _ => return Err(Error::IncompatibleBins("collectors differ".into())),
        }
        if self.probes.len() != other.probes.len() {
            return Err(Error::IncompatibleBins("collectors differ".into()));
        }
        for (a, b) in self.probes.iter_mut().zip(&other.probes) {
            a.merge(b);
        }
        Ok(())
    }

    /// Propagate run totals into every joint histogram.
    pub fn finish(&mut self) {
        if let Some(j) = &mut self.joint {
            j.set_totals();
        }
    }
}
