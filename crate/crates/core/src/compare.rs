//! Goodness of fit between sampled histograms and model densities, and the
//! derived products shown as figures: length bands over an exit face, length
//! against elevation on an adjacent face, and the length density seen by a
//! small exit cell.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::case1::Case1Model;
use crate::case2::{self, Case2Config};
use crate::density::grid::{Axis, GridDensity1D, GridDensity2D, GridDensity3D, Layout};
use crate::error::{Error, Result};
use crate::geometry::{BoxDims, CanonicalClass, PairKind};
use crate::montecarlo::{JointHistogram, LengthHistogram, ProbeResult, ProbeSpec};
use crate::par;
use crate::quadrature::GaussLegendre;

/// Bins whose expected count falls below this are pooled into one.
pub const POOL_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins merged into the pooled bin.
    pub pooled_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub axis: usize,
    /// Largest gap between the binned marginal CDFs.
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstBin {
    pub axis: usize,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Sum of absolute differences of bin probabilities, in `[0, 2]`.
    pub l1_distance: f64,
    pub chi_square: ChiSquareResult,
    pub ks: Vec<KsResult>,
    /// Marginal bin with the largest probability gap, one per axis.
    pub worst_bins: Vec<WorstBin>,
    /// Samples inside the bins.
    pub samples: u64,
}

/// Mass of `pdf` in every cell of `bins`, row-major. Contracts one axis at a
/// time with exact carrier weights.
pub fn bin_masses<const D: usize>(
    pdf: &crate::density::grid::GridDensity<D>,
    bins: &[Axis; D],
) -> Result<Vec<f64>> {
    for d in 0..D {
        if bins[d].layout() != Layout::Cells {
            return Err(Error::IncompatibleBins(format!(
                "bin axis {d} is not a cell axis"
            )));
        }
        let src = pdf.axis(d);
        let tol = 1e-9 * src.span().max(bins[d].span());
        if bins[d].lo() < src.lo() - tol || bins[d].hi() > src.hi() + tol {
            return Err(Error::IncompatibleBins(format!(
                "bins [{}, {}] on axis {d} extend past the density domain [{}, {}]",
                bins[d].lo(),
                bins[d].hi(),
                src.lo(),
                src.hi()
            )));
        }
    }
    let mut shape: Vec<usize> = pdf.axes().iter().map(|a| a.len()).collect();
    let mut values = pdf.values().to_vec();
    for d in 0..D {
        let weights: Vec<Vec<f64>> = (0..bins[d].len())
            .map(|m| {
                let (a, b) = bins[d].cell_bounds(m);
                pdf.axis(d).range_weights(a, b)
            })
            .collect();
        let outer: usize = shape[..d].iter().product();
        let inner: usize = shape[d + 1..].iter().product();
        let (src_len, dst_len) = (shape[d], bins[d].len());
        let mut next = vec![0.0; outer * dst_len * inner];
        for o in 0..outer {
            for (m, w) in weights.iter().enumerate() {
                let dst = &mut next[(o * dst_len + m) * inner..(o * dst_len + m + 1) * inner];
                for (s, ws) in w.iter().enumerate().take(src_len) {
                    if *ws == 0.0 {
                        continue;
                    }
                    let src = &values[(o * src_len + s) * inner..(o * src_len + s + 1) * inner];
                    for (x, y) in dst.iter_mut().zip(src) {
                        *x += ws * y;
                    }
                }
            }
        }
        shape[d] = dst_len;
        values = next;
    }
    Ok(values)
}

/// Kolmogorov tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn chi_square(counts: &[f64], probs: &[f64], total: f64) -> ChiSquareResult {
    let mut statistic = 0.0;
    let mut used = 0usize;
    let (mut pooled_obs, mut pooled_exp, mut pooled_bins) = (0.0, 0.0, 0usize);
    for (o, p) in counts.iter().zip(probs) {
        let e = p * total;
        if e >= POOL_THRESHOLD {
            statistic += (o - e) * (o - e) / e;
            used += 1;
        } else {
            pooled_obs += o;
            pooled_exp += e;
            pooled_bins += 1;
        }
    }
    if pooled_bins > 0 && (pooled_exp > 0.0 || pooled_obs > 0.0) {
        statistic += if pooled_exp > 0.0 {
            (pooled_obs - pooled_exp).powi(2) / pooled_exp
        } else {
            f64::INFINITY
        };
        used += 1;
    }
    let dof = used.saturating_sub(1).max(1);
    let p_value = if statistic.is_finite() {
        ChiSquared::new(dof as f64)
            .map(|c| 1.0 - c.cdf(statistic))
            .unwrap_or(0.0)
    } else {
        0.0
    };
    ChiSquareResult {
        statistic,
        dof,
        p_value: p_value.clamp(0.0, 1.0),
        pooled_bins,
    }
}

/// Marginal probabilities of a row-major array over `shape`.
fn marginal(values: &[f64], shape: &[usize], axis: usize) -> Vec<f64> {
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; shape[axis]];
    for (flat, v) in values.iter().enumerate() {
        out[(flat / inner) % shape[axis]] += v;
    }
    out
}

/// Report for observed `counts` against model bin probabilities `probs`
/// (both over the same bins); `probs` is renormalized over the bins.
pub fn compare_bins(counts: &[f64], probs: &[f64], axes: &[Axis]) -> Result<ComparisonReport> {
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyHistogram);
    }
    let expected: usize = axes.iter().map(|a| a.len()).product();
    if counts.len() != expected || probs.len() != expected {
        return Err(Error::IncompatibleBins(format!(
            "{} counts, {} model bins, {expected} cells",
            counts.len(),
            probs.len()
        )));
    }
    let pmass: f64 = probs.iter().sum();
    if !(pmass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let q: Vec<f64> = probs.iter().map(|p| p / pmass).collect();
    let e: Vec<f64> = counts.iter().map(|c| c / total).collect();
    let l1_distance = crate::density::l1_masses(&e, &q);
    let chi = chi_square(counts, &q, total);
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let mut ks = Vec::new();
    let mut worst_bins = Vec::new();
    for (d, axis) in axes.iter().enumerate() {
        let me = marginal(&e, &shape, d);
        let mq = marginal(&q, &shape, d);
        let (mut ce, mut cq, mut dmax) = (0.0, 0.0, 0.0f64);
        let mut worst = (0usize, -1.0f64);
        for m in 0..me.len() {
            ce += me[m];
            cq += mq[m];
            dmax = dmax.max((ce - cq).abs());
            let gap = (me[m] - mq[m]).abs();
            if gap > worst.1 {
                worst = (m, gap);
            }
        }
        let sn = total.sqrt();
        ks.push(KsResult {
            axis: d,
            statistic: dmax,
            p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * dmax),
        });
        let (lo, hi) = axis.cell_bounds(worst.0);
        worst_bins.push(WorstBin {
            axis: d,
            bin: worst.0,
            lo,
            hi,
            empirical: me[worst.0],
            model: mq[worst.0],
        });
    }
    Ok(ComparisonReport {
        l1_distance,
        chi_square: chi,
        ks,
        worst_bins,
        samples: total as u64,
    })
}

/// Compare a joint histogram with a model density over `(n, a, b)`; the model
/// is integrated over every histogram bin.
pub fn compare(hist: &JointHistogram, pdf: &GridDensity3D) -> Result<ComparisonReport> {
    let counts: Vec<f64> = hist.counts.iter().map(|c| *c as f64).collect();
    let probs = bin_masses(pdf, &hist.axes)?;
    compare_bins(&counts, &probs, &hist.axes)
}

/// Compare a length histogram with a length density.
pub fn compare_lengths(hist: &LengthHistogram, pdf: &GridDensity1D) -> Result<ComparisonReport> {
    let counts: Vec<f64> = hist.counts.iter().map(|c| *c as f64).collect();
    let probs = bin_masses(pdf, &[hist.axis])?;
    compare_bins(&counts, &probs, &[hist.axis])
}

/// Either side of a joint comparison.
#[derive(Debug, Clone, Copy)]
pub enum JointSource<'a> {
    Histogram(&'a JointHistogram),
    Density(&'a GridDensity3D),
}

impl<'a> From<&'a JointHistogram> for JointSource<'a> {
    fn from(h: &'a JointHistogram) -> Self {
        JointSource::Histogram(h)
    }
}

impl<'a> From<&'a GridDensity3D> for JointSource<'a> {
    fn from(g: &'a GridDensity3D) -> Self {
        JointSource::Density(g)
    }
}

impl JointSource<'_> {
    fn density(&self) -> Result<GridDensity3D> {
        match self {
            JointSource::Histogram(h) => {
                if h.class.kind() == PairKind::Same {
                    return Err(Error::Unsupported("same-face pairs have no joint".into()));
                }
                h.to_density()
            }
            JointSource::Density(g) => Ok((*g).clone()),
        }
    }
}

/// Density over `(n, elevation)` on an adjacent face: the joint with the
/// in-plane exit coordinate integrated out.
pub fn elevation_profile<'a>(source: impl Into<JointSource<'a>>) -> Result<GridDensity2D> {
    let source = source.into();
    if let JointSource::Histogram(h) = source {
        if h.class.kind() != PairKind::Adjacent {
            return Err(Error::Unsupported(format!(
                "{} is not an adjacent pair",
                h.class
            )));
        }
    }
    source.density()?.marginalize(1)
}

/// Coordinates `(n, elevation)` of the largest value of a profile.
pub fn profile_mode(profile: &GridDensity2D) -> [f64; 2] {
    let (flat, _) =
        profile
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (m, v)| {
                if *v > best.1 {
                    (m, *v)
                } else {
                    best
                }
            });
    profile.coord_of(flat)
}

/// Mean length in each elevation slice of a profile; `None` where the slice is empty.
pub fn mean_length_by_elevation(profile: &GridDensity2D) -> Vec<(f64, Option<f64>)> {
    let n_axis = profile.axis(0);
    let e_axis = profile.axis(1);
    let w = n_axis.weights();
    let ns = n_axis.coords();
    (0..e_axis.len())
        .map(|k| {
            let (mut mass, mut moment) = (0.0, 0.0);
            for i in 0..n_axis.len() {
                let v = profile.get([i, k]) * w[i];
                mass += v;
                moment += v * ns[i];
            }
            (e_axis.coord(k), (mass > 0.0).then(|| moment / mass))
        })
        .collect()
}

/// A rectangle of exit coordinates on one face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitCell {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl ExitCell {
    /// Cell of widths `(da, db)` centered at `center`, clipped to the face.
    pub fn around(
        dims: &BoxDims,
        class: CanonicalClass,
        center: [f64; 2],
        da: f64,
        db: f64,
    ) -> Result<Self> {
        let [ea, eb] = class.exit_dims(dims);
        let clip = |c: f64, w: f64, e: f64| ((c - 0.5 * w).max(0.0), (c + 0.5 * w).min(e));
        let cell = Self {
            a: clip(center[0], da, ea),
            b: clip(center[1], db, eb),
        };
        if !(cell.a.1 > cell.a.0 && cell.b.1 > cell.b.0) {
            return Err(Error::ExitOutOfBounds {
                coords: center,
                bounds: [ea, eb],
            });
        }
        Ok(cell)
    }

    pub fn whole_face(dims: &BoxDims, class: CanonicalClass) -> Self {
        let [ea, eb] = class.exit_dims(dims);
        Self {
            a: (0.0, ea),
            b: (0.0, eb),
        }
    }
}

/// Where a location density comes from.
#[derive(Debug, Clone, Copy)]
pub enum LocationSource<'a> {
    /// A tabulated joint (analytic or sampled).
    Joint(&'a GridDensity3D),
    /// Case I joint averaged over the cell on a cell-layout length axis.
    Case1(&'a Case1Model, Axis),
    /// Case II conditional masses averaged over Gauss points of the cell.
    Case2(&'a Case2Config, Axis),
    /// Samples collected by a location probe (the cell is the probe's own).
    Probe(&'a ProbeResult),
}

/// Gauss points per axis for averaging Case II conditionals over a cell.
const CELL_POINTS: usize = 3;

/// Normalized length density of trajectories exiting through `cell`.
pub fn location_pdf(source: LocationSource<'_>, cell: ExitCell) -> Result<GridDensity1D> {
    match source {
        LocationSource::Joint(g) => g.length_profile(cell.a, cell.b)?.normalize(),
        LocationSource::Case1(model, axis) => {
            if axis.layout() != Layout::Cells {
                return Err(Error::InvalidGrid(
                    "Case I location densities need a cell-layout length axis".into(),
                ));
            }
            let values = par::map_indices(axis.len(), |m| {
                model.cell_average(axis.cell_bounds(m), cell.a, cell.b)
            });
            GridDensity1D::new([axis], values)?.normalize()
        }
        LocationSource::Case2(cfg, axis) => {
            if axis.layout() != Layout::Cells {
                return Err(Error::InvalidGrid(
                    "Case II location densities need a cell-layout length axis".into(),
                ));
            }
            let gl = GaussLegendre::new(CELL_POINTS);
            let pts: Vec<(f64, f64, f64)> = gl
                .points(cell.a.0, cell.a.1)
                .flat_map(|(a, wa)| {
                    gl.points(cell.b.0, cell.b.1)
                        .map(move |(b, wb)| (a, b, wa * wb))
                })
                .collect();
            let rows = par::map_indices(pts.len(), |m| {
                case2::conditional_bin_masses(cfg, [pts[m].0, pts[m].1], &axis, cfg.carrier_nodes)
            });
            let mut values = vec![0.0; axis.len()];
            for (row, (_, _, w)) in rows.into_iter().zip(&pts) {
                for (v, r) in values.iter_mut().zip(row?) {
                    *v += w * r;
                }
            }
            GridDensity1D::new([axis], values)?.normalize()
        }
        LocationSource::Probe(p) => match &p.spec {
            ProbeSpec::Location { a, b, .. } if *a == cell.a && *b == cell.b => {
                p.location_density()
            }
            ProbeSpec::Location { .. } => Err(Error::IncompatibleBins(
                "probe cell differs from the requested cell".into(),
            )),
            _ => Err(Error::Unsupported("not a location probe".into())),
        },
    }
}

/// Connectivity of the cells of a 2D map at or above a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub threshold: f64,
    /// 4-connected regions of cells at or above the threshold.
    pub components: usize,
    /// 4-connected regions below the threshold not touching the map border.
    pub holes: usize,
    /// Whether the central cell lies in one of the holes.
    pub center_in_hole: bool,
}

impl BandStructure {
    /// One region enclosing a hole around the center.
    pub fn is_annular(&self) -> bool {
        self.components == 1 && self.holes >= 1 && self.center_in_hole
    }
}

fn label_regions(mask: &[bool], rows: usize, cols: usize) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let mut label = vec![NONE; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != NONE {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(c) = stack.pop() {
            let (r, k) = (c / cols, c % cols);
            let mut nb = [None; 4];
            if r > 0 {
                nb[0] = Some(c - cols);
            }
            if r + 1 < rows {
                nb[1] = Some(c + cols);
            }
            if k > 0 {
                nb[2] = Some(c - 1);
            }
            if k + 1 < cols {
                nb[3] = Some(c + 1);
            }
            for n in nb.into_iter().flatten() {
                if mask[n] && label[n] == NONE {
                    label[n] = count;
                    stack.push(n);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Threshold a map at `min + level·(max − min)` and count regions and holes.
pub fn band_structure(map: &GridDensity2D, level: f64) -> BandStructure {
    let (rows, cols) = (map.axis(0).len(), map.axis(1).len());
    let v = map.values();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = lo + level * (hi - lo);
    let above: Vec<bool> = v.iter().map(|x| *x >= threshold).collect();
    let below: Vec<bool> = above.iter().map(|a| !a).collect();
    let (_, components) = label_regions(&above, rows, cols);
    let (labels, regions) = label_regions(&below, rows, cols);
    let mut touches = vec![false; regions];
    for r in 0..rows {
        for k in 0..cols {
            let c = r * cols + k;
            if below[c] && (r == 0 || k == 0 || r + 1 == rows || k + 1 == cols) {
                touches[labels[c]] = true;
            }
        }
    }
    let holes = touches.iter().filter(|t| !**t).count();
    let center = (rows / 2) * cols + cols / 2;
    let center_in_hole = below[center] && !touches[labels[center]];
    BandStructure {
        threshold,
        components,
        holes,
        center_in_hole,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_limits() {
        assert!((kolmogorov_tail(0.1) - 1.0).abs() < 1e-12);
        // tabulated: P(K > 1.36) ~ 0.049
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 1e-3);
        assert!(kolmogorov_tail(3.0) < 1e-6);
    }

    #[test]
    fn bin_masses_of_constant() {
        let ax = Axis::nodes(0.0, 2.0, 9).unwrap();
        let g = GridDensity1D::from_fn([ax], |_| 0.5).unwrap();
        let m = bin_masses(&g, &[Axis::cells(0.0, 2.0, 4).unwrap()]).unwrap();
        for v in m {
            assert!((v - 0.25).abs() < 1e-12);
        }
        assert!(bin_masses(&g, &[Axis::cells(0.0, 3.0, 4).unwrap()]).is_err());
    }

    #[test]
    fn ring_is_annular() {
        let ax = Axis::cells(0.0, 1.0, 16).unwrap();
        let g = GridDensity2D::from_fn([ax, ax], |[x, y]| {
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            (-(r - 0.35).powi(2) / 0.005).exp()
        })
        .unwrap();
        assert!(band_structure(&g, 0.5).is_annular());
        let bump = GridDensity2D::from_fn([ax, ax], |[x, y]| {
            (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.05).exp()
        })
        .unwrap();
        assert!(!band_structure(&bump, 0.5).is_annular());
    }
}
