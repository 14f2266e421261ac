use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the values along an axis are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Values sit on `len` uniform nodes spanning `[lo, hi]`, linear in between.
    Nodes,
    /// Values are averages over `len` uniform cells spanning `[lo, hi]`.
    Cells,
}

/// One axis of a regular grid. Outside `[lo, hi]` every density is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAxis")]
pub struct Axis {
    lo: f64,
    hi: f64,
    len: usize,
    layout: Layout,
}

#[derive(Deserialize)]
struct RawAxis {
    lo: f64,
    hi: f64,
    len: usize,
    layout: Layout,
}

impl TryFrom<RawAxis> for Axis {
    type Error = Error;
    fn try_from(r: RawAxis) -> Result<Self> {
        match r.layout {
            Layout::Nodes => Axis::nodes(r.lo, r.hi, r.len),
            Layout::Cells => Axis::cells(r.lo, r.hi, r.len),
        }
    }
}

impl Axis {
    /// Same span and layout with a different point count.
    pub fn with_len(&self, len: usize) -> Result<Self> {
        match self.layout {
            Layout::Nodes => Axis::nodes(self.lo, self.hi, len),
            Layout::Cells => Axis::cells(self.lo, self.hi, len),
        }
    }

    /// Boundaries of cell `idx` (cell layout) or of the interval between nodes
    /// `idx` and `idx + 1` (node layout).
    pub fn cell_bounds(&self, idx: usize) -> (f64, f64) {
        let h = self.step();
        let a = self.lo + idx as f64 * h;
        let last = match self.layout {
            Layout::Nodes => self.len - 2,
            Layout::Cells => self.len - 1,
        };
        (a, if idx == last { self.hi } else { a + h })
    }

    pub fn nodes(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("axis bounds [{lo}, {hi}]")));
        }
        if len < 2 {
            return Err(Error::InvalidGrid(format!("{len} nodes; need at least 2")));
        }
        Ok(Self {
            lo,
            hi,
            len,
            layout: Layout::Nodes,
        })
    }

    pub fn cells(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!("axis bounds [{lo}, {hi}]")));
        }
        if len < 1 {
            return Err(Error::InvalidGrid("zero cells".into()));
        }
        Ok(Self {
            lo,
            hi,
            len,
            layout: Layout::Cells,
        })
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Node spacing or cell width.
    #[inline]
    pub fn step(&self) -> f64 {
        match self.layout {
            Layout::Nodes => (self.hi - self.lo) / (self.len - 1) as f64,
            Layout::Cells => (self.hi - self.lo) / self.len as f64,
        }
    }

    /// Node position or cell centre. The last node is exactly `hi`.
    #[inline]
    pub fn coord(&self, idx: usize) -> f64 {
        match self.layout {
            Layout::Nodes if idx + 1 == self.len => self.hi,
            Layout::Nodes => self.lo + idx as f64 * self.step(),
            Layout::Cells => self.lo + (idx as f64 + 0.5) * self.step(),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len).map(|m| self.coord(m)).collect()
    }

    /// Quadrature weights integrating the carrier over the whole axis exactly.
    pub fn weights(&self) -> Vec<f64> {
        self.range_weights(self.lo, self.hi)
    }

    /// Weights `w` with `sum w[m] f[m] = integral of f over [a, b]`, exact for the carrier.
    pub fn range_weights(&self, a: f64, b: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.len];
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if !(a < b) {
            return w;
        }
        let h = self.step();
        match self.layout {
            Layout::Cells => {
                for (m, wm) in w.iter_mut().enumerate() {
                    let c0 = self.lo + m as f64 * h;
                    let overlap = (b.min(c0 + h) - a.max(c0)).max(0.0);
                    *wm = overlap;
                }
            }
            Layout::Nodes => {
                let first = (((a - self.lo) / h).floor() as usize).min(self.len - 2);
                for m in first..self.len - 1 {
                    let x0 = self.coord(m);
                    let x1 = self.coord(m + 1);
                    if x0 >= b {
                        break;
                    }
                    let s = a.max(x0);
                    let t = b.min(x1);
                    if t <= s {
                        continue;
                    }
                    let hm = x1 - x0;
                    let us = (s - x0) / hm;
                    let ut = (t - x0) / hm;
                    // integral of (1-u) and u over [us, ut], times hm
                    w[m] += hm * ((ut - us) - 0.5 * (ut * ut - us * us));
                    w[m + 1] += hm * 0.5 * (ut * ut - us * us);
                }
            }
        }
        w
    }

    /// Interpolation stencil at `x`: up to two `(index, weight)` pairs. Empty outside the axis.
    #[inline]
    pub fn stencil(&self, x: f64) -> Option<[(usize, f64); 2]> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let h = self.step();
        match self.layout {
            Layout::Cells => {
                let m = (((x - self.lo) / h) as usize).min(self.len - 1);
                Some([(m, 1.0), (m, 0.0)])
            }
            Layout::Nodes => {
                let u = (x - self.lo) / h;
                let m = (u as usize).min(self.len - 2);
                let t = (u - m as f64).clamp(0.0, 1.0);
                Some([(m, 1.0 - t), (m + 1, t)])
            }
        }
    }

    /// True when `other`'s boundaries coincide with a subset of this axis' node
    /// positions, so every bin of `other` is a union of whole cells here.
    pub fn aligns_with_bins(&self, other: &Axis, tol: f64) -> bool {
        if self.layout != Layout::Nodes || other.layout != Layout::Cells {
            return false;
        }
        if (self.lo - other.lo).abs() > tol || (self.hi - other.hi).abs() > tol {
            return false;
        }
        let cells = self.len - 1;
        cells.is_multiple_of(other.len)
    }
}

/// A nonnegative density sampled on a regular `D`-dimensional grid, row-major
/// with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity<const D: usize> {
    #[serde(with = "axes_serde")]
    axes: [Axis; D],
    values: Vec<f64>,
}

pub type GridDensity1D = GridDensity<1>;
pub type GridDensity2D = GridDensity<2>;
pub type GridDensity3D = GridDensity<3>;

mod axes_serde {
    use super::Axis;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(
        axes: &[Axis; D],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        axes.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(
        d: De,
    ) -> Result<[Axis; D], De::Error> {
        let v = Vec::<Axis>::deserialize(d)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("wrong number of axes"))
    }
}

impl<const D: usize> GridDensity<D> {
    pub fn new(axes: [Axis; D], values: Vec<f64>) -> Result<Self> {
        let expected: usize = axes.iter().map(|a| a.len()).product();
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "{} values for {expected} grid points",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "density value {bad} is not finite and nonnegative"
            )));
        }
        Ok(Self { axes, values })
    }

    /// Sample `f` at every grid point. Negative or non-finite samples are an error.
    pub fn from_fn(axes: [Axis; D], f: impl Fn([f64; D]) -> f64) -> Result<Self> {
        let total: usize = axes.iter().map(|a| a.len()).product();
        let coords: Vec<Vec<f64>> = axes.iter().map(|a| a.coords()).collect();
        let values = (0..total)
            .map(|flat| {
                let idx = unflatten(&axes, flat);
                f(std::array::from_fn(|d| coords[d][idx[d]]))
            })
            .collect();
        Self::new(axes, values)
    }

    pub fn zeros(axes: [Axis; D]) -> Self {
        let total: usize = axes.iter().map(|a| a.len()).product();
        Self {
            axes,
            values: vec![0.0; total],
        }
    }

    #[inline]
    pub fn axes(&self) -> &[Axis; D] {
        &self.axes
    }

    #[inline]
    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; D]) -> usize {
        let mut flat = 0;
        for d in 0..D {
            flat = flat * self.axes[d].len() + idx[d];
        }
        flat
    }

    #[inline]
    pub fn get(&self, idx: [usize; D]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    pub fn index_of(&self, flat: usize) -> [usize; D] {
        unflatten(&self.axes, flat)
    }

    pub fn coord_of(&self, flat: usize) -> [f64; D] {
        let idx = self.index_of(flat);
        std::array::from_fn(|d| self.axes[d].coord(idx[d]))
    }

    /// Mass under the carrier interpretation (trapezoid on node axes, sums on cell axes).
    pub fn integrate(&self) -> f64 {
        let w: Vec<Vec<f64>> = self.axes.iter().map(|a| a.weights()).collect();
        self.weighted_sum(&w)
    }

    fn weighted_sum(&self, w: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let idx = self.index_of(flat);
            let mut weight = 1.0;
            for d in 0..D {
                weight *= w[d][idx[d]];
            }
            total += weight * v;
        }
        total
    }

    /// Mass inside the axis-aligned box `ranges`.
    pub fn integrate_region(&self, ranges: [(f64, f64); D]) -> f64 {
        let w: Vec<Vec<f64>> = (0..D)
            .map(|d| self.axes[d].range_weights(ranges[d].0, ranges[d].1))
            .collect();
        self.weighted_sum(&w)
    }

    pub fn normalize(&self) -> Result<Self> {
        let mass = self.integrate();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::ZeroMass);
        }
        Ok(self.scaled(1.0 / mass))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            axes: self.axes,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Value at an arbitrary point: multilinear on node axes, piecewise constant on
    /// cell axes, zero outside the domain.
    pub fn eval(&self, x: [f64; D]) -> f64 {
        let mut stencils = [[(0usize, 0.0f64); 2]; D];
        for d in 0..D {
            match self.axes[d].stencil(x[d]) {
                Some(s) => stencils[d] = s,
                None => return 0.0,
            }
        }
        let mut total = 0.0;
        for corner in 0..(1usize << D) {
            let mut weight = 1.0;
            let mut flat = 0;
            for d in 0..D {
                let (m, w) = stencils[d][(corner >> (D - 1 - d)) & 1];
                weight *= w;
                flat = flat * self.axes[d].len() + m;
            }
            if weight != 0.0 {
                total += weight * self.values[flat];
            }
        }
        total
    }

    /// Add `other` (same grid) scaled by `factor`.
    pub fn add_scaled(&mut self, other: &Self, factor: f64) -> Result<()> {
        if self.axes != other.axes {
            return Err(Error::InvalidGrid("grids differ".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }
}

fn unflatten<const D: usize>(axes: &[Axis; D], mut flat: usize) -> [usize; D] {
    let mut idx = [0; D];
    for d in (0..D).rev() {
        let n = axes[d].len();
        idx[d] = flat % n;
        flat /= n;
    }
    idx
}

impl GridDensity1D {
    pub fn axis0(&self) -> &Axis {
        &self.axes[0]
    }

    pub fn lo(&self) -> f64 {
        self.axes[0].lo()
    }

    pub fn hi(&self) -> f64 {
        self.axes[0].hi()
    }

    pub fn at(&self, x: f64) -> f64 {
        self.eval([x])
    }

    /// Mass on `(-inf, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.integrate_region([(f64::NEG_INFINITY, x)])
    }

    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.integrate_region([(a, b)])
    }

    /// First moment, exact for the carrier.
    pub fn first_moment(&self) -> f64 {
        let ax = self.axes[0];
        match ax.layout() {
            Layout::Cells => self
                .values
                .iter()
                .enumerate()
                .map(|(m, v)| ax.coord(m) * v * ax.step())
                .sum(),
            Layout::Nodes => {
                let mut total = 0.0;
                for m in 0..ax.len() - 1 {
                    let x0 = ax.coord(m);
                    let h = ax.coord(m + 1) - x0;
                    let (f0, f1) = (self.values[m], self.values[m + 1]);
                    total += x0 * h * (f0 + f1) / 2.0 + h * h * (f0 + 2.0 * f1) / 6.0;
                }
                total
            }
        }
    }

    /// Mean of the normalized density.
    pub fn mean(&self) -> Result<f64> {
        let mass = self.integrate();
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(self.first_moment() / mass)
    }

    /// Resample onto another node axis by interpolation.
    pub fn resample(&self, axis: Axis) -> Result<Self> {
        Self::from_fn([axis], |[x]| self.at(x))
    }

    /// Masses in `bins` (cell axis).
    pub fn bin_masses(&self, bins: &Axis) -> Vec<f64> {
        let h = bins.step();
        (0..bins.len())
            .map(|m| {
                let a = bins.lo() + m as f64 * h;
                self.mass_between(
                    a,
                    if m + 1 == bins.len() {
                        bins.hi()
                    } else {
                        a + h
                    },
                )
            })
            .collect()
    }
}

impl GridDensity2D {
    /// Integrate out `axis` (0 or 1).
    pub fn marginalize(&self, axis: usize) -> Result<GridDensity1D> {
        let keep = 1 - axis;
        let w = self.axes[axis].weights();
        let mut out = vec![0.0; self.axes[keep].len()];
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.index_of(flat);
            out[idx[keep]] += w[idx[axis]] * v;
        }
        GridDensity1D::new([self.axes[keep]], out)
    }
}

impl GridDensity3D {
    /// Integrate out `axis` (0, 1 or 2); the remaining axes keep their order.
    pub fn marginalize(&self, axis: usize) -> Result<GridDensity2D> {
        let w = self.axes[axis].weights();
        self.collapse(axis, &w)
    }

    /// Integrate the first (length) axis over `[lo, hi]`.
    pub fn restrict_band(&self, lo: f64, hi: f64) -> Result<GridDensity2D> {
        let w = self.axes[0].range_weights(lo, hi);
        self.collapse(0, &w)
    }

    fn collapse(&self, axis: usize, w: &[f64]) -> Result<GridDensity2D> {
        let keep: Vec<usize> = (0..3).filter(|d| *d != axis).collect();
        let out_axes = [self.axes[keep[0]], self.axes[keep[1]]];
        let n1 = out_axes[1].len();
        let mut out = vec![0.0; out_axes[0].len() * n1];
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.index_of(flat);
            out[idx[keep[0]] * n1 + idx[keep[1]]] += w[idx[axis]] * v;
        }
        GridDensity2D::new(out_axes, out)
    }

    /// Length density over the exit cell `[a0, a1] x [b0, b1]` (axes 1 and 2),
    /// before normalization.
    pub fn length_profile(&self, a: (f64, f64), b: (f64, f64)) -> Result<GridDensity1D> {
        let wa = self.axes[1].range_weights(a.0, a.1);
        let wb = self.axes[2].range_weights(b.0, b.1);
        let mut out = vec![0.0; self.axes[0].len()];
        for (flat, v) in self.values.iter().enumerate() {
            let [n, ia, ib] = self.index_of(flat);
            out[n] += wa[ia] * wb[ib] * v;
        }
        GridDensity1D::new([self.axes[0]], out)
    }
}

/// L1 distance between two 1D densities, integrated on a fine midpoint grid over
/// the union of their domains.
pub fn l1_distance(f: &GridDensity1D, g: &GridDensity1D) -> f64 {
    let lo = f.lo().min(g.lo());
    let hi = f.hi().max(g.hi());
    let n = 8 * (f.axis0().len() + g.axis0().len()).max(256);
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|m| {
            let x = lo + (m as f64 + 0.5) * h;
            (f.at(x) - g.at(x)).abs()
        })
        .sum::<f64>()
        * h
}

/// L1 distance between two 2D densities on a midpoint grid with `m` points per
/// axis over the union of their domains.
pub fn l1_distance_2d(f: &GridDensity2D, g: &GridDensity2D, m: usize) -> f64 {
    let lo = [
        f.axis(0).lo().min(g.axis(0).lo()),
        f.axis(1).lo().min(g.axis(1).lo()),
    ];
    let hi = [
        f.axis(0).hi().max(g.axis(0).hi()),
        f.axis(1).hi().max(g.axis(1).hi()),
    ];
    let h = [(hi[0] - lo[0]) / m as f64, (hi[1] - lo[1]) / m as f64];
    let mut total = 0.0;
    for i in 0..m {
        let x = lo[0] + (i as f64 + 0.5) * h[0];
        for j in 0..m {
            let y = lo[1] + (j as f64 + 0.5) * h[1];
            total += (f.eval([x, y]) - g.eval([x, y])).abs();
        }
    }
    total * h[0] * h[1]
}

/// L1 distance between two discrete distributions given as bin masses.
pub fn l1_masses(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}
