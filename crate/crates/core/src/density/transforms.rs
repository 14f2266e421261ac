//! Densities of sums, differences, ratios, products, squares and square roots of
//! independent random variables carried on piecewise-linear grids.
//!
//! Convolutions and ratios are integrated exactly for the carriers (the integrand
//! is polynomial between breakpoints); products use Gauss–Legendre pieces.
//! Output nodes sitting on an integrable singularity (`s = 0` for squares and
//! products) get the value that makes the adjacent cells carry their exact mass.

use crate::density::grid::{Axis, GridDensity1D, Layout};
use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    /// Require inputs to integrate to one (within `normalization_tol`).
    pub check_normalized: bool,
    pub normalization_tol: f64,
    /// Ratio/product integrals skip `|w| < w_min_rel * span(y)`.
    pub w_min_rel: f64,
    /// Fail when the requested output domain holds less than `1 - limit` of the mass.
    pub max_missed_mass: Option<f64>,
    /// Node count for convolution outputs (default: the larger input).
    pub output_nodes: Option<usize>,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            check_normalized: true,
            normalization_tol: 1e-6,
            w_min_rel: 1e-6,
            max_missed_mass: Some(0.05),
            output_nodes: None,
        }
    }
}

impl TransformOptions {
    /// No normalization or domain checks; for intermediate steps of a chain.
    pub fn unchecked() -> Self {
        Self {
            check_normalized: false,
            max_missed_mass: None,
            ..Self::default()
        }
    }
}

/// Default node count for 1D carriers.
pub const DEFAULT_NODES_1D: usize = 513;

/// Uniform density on `[lo, hi]` with nodes on both endpoints.
pub fn uniform_density(lo: f64, hi: f64, n_nodes: usize) -> Result<GridDensity1D> {
    let axis = Axis::nodes(lo, hi, n_nodes)?;
    let v = 1.0 / (hi - lo);
    GridDensity1D::new([axis], vec![v; n_nodes])
}

/// A narrow uniform of width `width` centred on `c`: a grid stand-in for a point mass.
pub fn narrow_density(c: f64, width: f64, n_nodes: usize) -> Result<GridDensity1D> {
    uniform_density(c - 0.5 * width, c + 0.5 * width, n_nodes)
}

/// Exact value at `x` of the trapezoidal density of `U(a0, a1) + U(b0, b1)`.
pub fn uniform_sum_pdf(a: (f64, f64), b: (f64, f64), x: f64) -> f64 {
    // overlap length of [a0, a1] with [x - b1, x - b0]
    let lo = a.0.max(x - b.1);
    let hi = a.1.min(x - b.0);
    if hi <= lo {
        0.0
    } else {
        (hi - lo) / ((a.1 - a.0) * (b.1 - b.0))
    }
}

fn require_nodes(f: &GridDensity1D) -> Result<()> {
    if f.axis0().layout() != Layout::Nodes {
        return Err(Error::InvalidGrid(
            "transforms need node-layout densities".into(),
        ));
    }
    Ok(())
}

fn require_mass(f: &GridDensity1D, opts: &TransformOptions) -> Result<()> {
    if opts.check_normalized {
        let mass = f.integrate();
        if (mass - 1.0).abs() > opts.normalization_tol {
            return Err(Error::Unnormalized { mass });
        }
    }
    Ok(())
}

/// Indices of `f`'s nodes strictly inside `(lo, hi)`.
fn inner_nodes(ax: &Axis, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let h = ax.step();
    let first = (((lo - ax.lo()) / h).floor() + 1.0).max(0.0) as usize;
    let last = (((hi - ax.lo()) / h).ceil()).max(0.0) as usize;
    first.min(ax.len())..last.min(ax.len())
}

/// Reflected density: the density of `-x`.
pub fn reflect(f: &GridDensity1D) -> Result<GridDensity1D> {
    require_nodes(f)?;
    let ax = f.axis0();
    let out = Axis::nodes(-ax.hi(), -ax.lo(), ax.len())?;
    let mut v = f.values().to_vec();
    v.reverse();
    GridDensity1D::new([out], v)
}

fn conv_at(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    s: f64,
    breaks: &mut Vec<f64>,
    gl2: &GaussLegendre,
) -> f64 {
    let (ax, ay) = (fx.axis0(), fy.axis0());
    let lo = ax.lo().max(s - ay.hi());
    let hi = ax.hi().min(s - ay.lo());
    if !(hi > lo) {
        return 0.0;
    }
    breaks.clear();
    breaks.push(lo);
    for m in inner_nodes(ax, lo, hi) {
        breaks.push(ax.coord(m));
    }
    for m in inner_nodes(ay, s - hi, s - lo) {
        breaks.push(s - ay.coord(m));
    }
    breaks.push(hi);
    breaks.sort_by(|a, b| a.total_cmp(b));
    // Integrand is quadratic between breakpoints: two-point Gauss is exact.
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            total += gl2.integrate(w[0], w[1], |x| fx.at(x) * fy.at(s - x));
        }
    }
    total
}

/// Density of `x + y`.
pub fn convolve_sum(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    opts: &TransformOptions,
) -> Result<GridDensity1D> {
    require_nodes(fx)?;
    require_nodes(fy)?;
    require_mass(fx, opts)?;
    require_mass(fy, opts)?;
    let n_out = opts
        .output_nodes
        .unwrap_or(fx.axis0().len().max(fy.axis0().len()));
    let out = Axis::nodes(fx.lo() + fy.lo(), fx.hi() + fy.hi(), n_out)?;
    convolve_on(fx, fy, out)
}

/// Density of `x + y` evaluated on a caller-chosen node axis.
pub fn convolve_on(fx: &GridDensity1D, fy: &GridDensity1D, out: Axis) -> Result<GridDensity1D> {
    require_nodes(fx)?;
    require_nodes(fy)?;
    let gl2 = GaussLegendre::new(2);
    let values = par::map_indices(out.len(), |m| {
        let mut breaks = Vec::with_capacity(fx.axis0().len() + fy.axis0().len() + 2);
        conv_at(fx, fy, out.coord(m), &mut breaks, &gl2).max(0.0)
    });
    GridDensity1D::new([out], values)
}

/// Density of `x - y`.
pub fn convolve_diff(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    opts: &TransformOptions,
) -> Result<GridDensity1D> {
    convolve_sum(fx, &reflect(fy)?, opts)
}

fn ratio_at(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    s: f64,
    w_min: f64,
    gl2: &GaussLegendre,
) -> f64 {
    let (ax, ay) = (fx.axis0(), fy.axis0());
    let (mut lo, mut hi) = (ay.lo(), ay.hi());
    if s > 0.0 {
        lo = lo.max(ax.lo() / s);
        hi = hi.min(ax.hi() / s);
    } else if s < 0.0 {
        lo = lo.max(ax.hi() / s);
        hi = hi.min(ax.lo() / s);
    } else if !(ax.lo() <= 0.0 && 0.0 <= ax.hi()) {
        return 0.0;
    }
    if !(hi > lo) {
        return 0.0;
    }
    let mut breaks = Vec::with_capacity(ax.len() + ay.len() + 4);
    breaks.push(lo);
    breaks.push(hi);
    breaks.extend(inner_nodes(ay, lo, hi).map(|m| ay.coord(m)));
    if s != 0.0 {
        breaks.extend(
            (0..ax.len())
                .map(|m| ax.coord(m) / s)
                .filter(|w| *w > lo && *w < hi),
        );
    }
    for b in [0.0, -w_min, w_min] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] && !(w[0] >= -w_min && w[1] <= w_min) {
            // cubic in w between breakpoints
            total += gl2.integrate(w[0], w[1], |y| fx.at(s * y) * fy.at(y) * y.abs());
        }
    }
    total
}

fn product_at(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    s: f64,
    w_min: f64,
    gl: &GaussLegendre,
) -> f64 {
    let (ax, ay) = (fx.axis0(), fy.axis0());
    let (lo, hi) = (ay.lo(), ay.hi());
    let mut breaks = Vec::with_capacity(ax.len() + ay.len() + 4);
    breaks.push(lo);
    breaks.push(hi);
    breaks.extend(inner_nodes(ay, lo, hi).map(|m| ay.coord(m)));
    if s != 0.0 {
        for m in 0..ax.len() {
            let x = ax.coord(m);
            if x != 0.0 {
                let w = s / x;
                if w > lo && w < hi {
                    breaks.push(w);
                }
            }
        }
    }
    for b in [0.0, -w_min, w_min] {
        if b > lo && b < hi {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] && !(w[0] >= -w_min && w[1] <= w_min) {
            total += gl.integrate(w[0], w[1], |y| fx.at(s / y) * fy.at(y) / y.abs());
        }
    }
    total
}

/// Replace node `m` by the value that gives its neighbouring cells their exact
/// mass, computed from `f` with quadrature graded toward the node.
pub(crate) fn mass_match_node(
    values: &mut [f64],
    axis: &Axis,
    m: usize,
    f: &(dyn Fn(f64) -> f64 + Sync),
) {
    let gl = GaussLegendre::new(8);
    let h = axis.step();
    let x = axis.coord(m);
    let mut mass = 0.0;
    let mut neighbours = 0.0;
    let mut count = 0.0;
    if m + 1 < axis.len() {
        mass += gl.integrate_graded(x, h, 48, f);
        neighbours += values[m + 1];
        count += 1.0;
    }
    if m > 0 {
        mass += gl.integrate_graded(x, -h, 48, f);
        neighbours += values[m - 1];
        count += 1.0;
    }
    if count > 0.0 {
        // trapezoid mass of the adjacent cells: h * (count * v_m + neighbours) / 2
        values[m] = ((2.0 * mass / h - neighbours) / count).max(0.0);
    }
}

pub(crate) fn node_at(axis: &Axis, x: f64) -> Option<usize> {
    let u = (x - axis.lo()) / axis.step();
    let m = u.round();
    if m >= 0.0 && (m as usize) < axis.len() && (u - m).abs() < 1e-9 {
        Some(m as usize)
    } else {
        None
    }
}

fn check_captured(
    out: &GridDensity1D,
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    opts: &TransformOptions,
) -> Result<()> {
    if let Some(limit) = opts.max_missed_mass {
        let expected = fx.integrate() * fy.integrate();
        let missed = 1.0 - out.integrate() / expected;
        if missed > limit {
            return Err(Error::DomainMissesMass { missed, limit });
        }
    }
    Ok(())
}

/// Density of `x / y` on `s_axis`: `f(s) = ∫ f_x(s w) f_y(w) |w| dw`.
pub fn ratio_density(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    s_axis: Axis,
    opts: &TransformOptions,
) -> Result<GridDensity1D> {
    require_nodes(fx)?;
    require_nodes(fy)?;
    require_mass(fx, opts)?;
    require_mass(fy, opts)?;
    let w_min = opts.w_min_rel * fy.axis0().span();
    let gl2 = GaussLegendre::new(2);
    let values = par::map_indices(s_axis.len(), |m| {
        ratio_at(fx, fy, s_axis.coord(m), w_min, &gl2)
    });
    let out = GridDensity1D::new([s_axis], values)?;
    check_captured(&out, fx, fy, opts)?;
    Ok(out)
}

/// Density of `x * y` on `s_axis`: `f(s) = ∫ f_x(s / w) f_y(w) / |w| dw`.
pub fn product_density(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    s_axis: Axis,
    opts: &TransformOptions,
) -> Result<GridDensity1D> {
    require_nodes(fx)?;
    require_nodes(fy)?;
    require_mass(fx, opts)?;
    require_mass(fy, opts)?;
    let w_min = opts.w_min_rel * fy.axis0().span();
    let gl = GaussLegendre::new(6);
    let mut values = par::map_indices(s_axis.len(), |m| {
        product_at(fx, fy, s_axis.coord(m), w_min, &gl)
    });
    if let Some(m) = node_at(&s_axis, 0.0) {
        let pointwise = |s: f64| product_at(fx, fy, s, w_min, &gl);
        mass_match_node(&mut values, &s_axis, m, &pointwise);
    }
    let out = GridDensity1D::new([s_axis], values)?;
    check_captured(&out, fx, fy, opts)?;
    Ok(out)
}

/// Density of `1 / y` on `s_axis`.
pub fn reciprocal_density(fy: &GridDensity1D, s_axis: Axis) -> Result<GridDensity1D> {
    require_nodes(fy)?;
    GridDensity1D::from_fn([s_axis], |[s]| {
        if s == 0.0 {
            0.0
        } else {
            fy.at(1.0 / s) / (s * s)
        }
    })
}

/// `[f(√s) + f(−√s)] / (2√s)`, the density of `x²` at `s > 0`.
#[inline]
fn square_at(fx: &GridDensity1D, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let r = s.sqrt();
    (fx.at(r) + fx.at(-r)) / (2.0 * r)
}

/// Density of `x²` on `s_axis` (which must not extend below zero).
pub fn square_density(fx: &GridDensity1D, s_axis: Axis) -> Result<GridDensity1D> {
    require_nodes(fx)?;
    if s_axis.lo() < 0.0 {
        return Err(Error::NegativeSupport(format!(
            "square output axis starts at {}",
            s_axis.lo()
        )));
    }
    let mut values: Vec<f64> = (0..s_axis.len())
        .map(|m| square_at(fx, s_axis.coord(m)))
        .collect();
    if let Some(m) = node_at(&s_axis, 0.0) {
        mass_match_node(&mut values, &s_axis, m, &|s| square_at(fx, s));
    }
    GridDensity1D::new([s_axis], values)
}

/// Natural output axis for `x²`: `[min x², max x²]` with `n` nodes.
pub fn square_axis(fx: &GridDensity1D, n: usize) -> Result<Axis> {
    let (lo, hi) = (fx.lo(), fx.hi());
    let top = lo.abs().max(hi.abs());
    let bottom = if lo <= 0.0 && hi >= 0.0 {
        0.0
    } else {
        lo.abs().min(hi.abs())
    };
    Axis::nodes(bottom * bottom, top * top, n)
}

/// Density of `n = √(S + shift)` on `n_axis`: `f(n) = f_S(n² − shift) · 2n`.
pub fn sqrt_density(fs: &GridDensity1D, n_axis: Axis, shift: f64) -> Result<GridDensity1D> {
    require_nodes(fs)?;
    if fs.lo() < 0.0 {
        return Err(Error::NegativeSupport(format!(
            "density of S starts at {}",
            fs.lo()
        )));
    }
    if n_axis.lo() < 0.0 {
        return Err(Error::NegativeSupport(format!(
            "length axis starts at {}",
            n_axis.lo()
        )));
    }
    GridDensity1D::from_fn([n_axis], |[n]| fs.at(n * n - shift) * 2.0 * n)
}

/// `sqrt_density` on the natural axis `[√(lo + shift), √(hi + shift)]`.
pub fn sqrt_density_auto(fs: &GridDensity1D, n_nodes: usize, shift: f64) -> Result<GridDensity1D> {
    let lo = (fs.lo() + shift).max(0.0).sqrt();
    let hi = (fs.hi() + shift).max(0.0).sqrt();
    sqrt_density(fs, Axis::nodes(lo, hi, n_nodes)?, shift)
}

/// Cumulative distribution of a node carrier, evaluated in constant time.
#[derive(Debug, Clone)]
pub struct CarrierCdf {
    axis: Axis,
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl CarrierCdf {
    pub fn new(f: &GridDensity1D) -> Result<Self> {
        require_nodes(f)?;
        let axis = f.axes()[0];
        let values = f.values().to_vec();
        let h = axis.step();
        let mut prefix = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            prefix.push(acc);
        }
        Ok(Self {
            axis,
            values,
            prefix,
        })
    }

    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap_or(&0.0)
    }

    pub fn at(&self, t: f64) -> f64 {
        if t <= self.axis.lo() {
            return 0.0;
        }
        if t >= self.axis.hi() {
            return self.total();
        }
        let h = self.axis.step();
        let u = (t - self.axis.lo()) / h;
        let m = (u as usize).min(self.values.len() - 2);
        let d = t - self.axis.coord(m);
        let (f0, f1) = (self.values[m], self.values[m + 1]);
        self.prefix[m] + d * f0 + 0.5 * d * d * (f1 - f0) / h
    }
}

/// `P(X + Y ≤ t)` for node carriers. Between breakpoints the integrand is a
/// linear density times a quadratic cumulative, so two Gauss points are exact.
fn sum_cdf_at(fx: &GridDensity1D, fy: &CarrierCdf, gl: &GaussLegendre, t: f64) -> f64 {
    let ax = fx.axes()[0];
    let (lo, hi) = (ax.lo(), ax.hi().min(t - fy.axis.lo()));
    if !(hi > lo) {
        return 0.0;
    }
    let mut breaks: Vec<f64> = Vec::with_capacity(ax.len() + fy.axis.len() + 2);
    breaks.push(lo);
    breaks.extend(ax.coords().into_iter().filter(|x| *x > lo && *x < hi));
    breaks.extend(
        fy.axis
            .coords()
            .into_iter()
            .map(|y| t - y)
            .filter(|x| *x > lo && *x < hi),
    );
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    gl.integrate_pieces(&breaks, |x| fx.at(x) * fy.at(t - x))
}

/// `P(edges[m] ≤ X + Y < edges[m + 1])` for consecutive sorted `edges`.
pub fn sum_interval_masses(
    fx: &GridDensity1D,
    fy: &GridDensity1D,
    edges: &[f64],
) -> Result<Vec<f64>> {
    require_nodes(fx)?;
    let cdf = CarrierCdf::new(fy)?;
    let gl = GaussLegendre::new(2);
    let at: Vec<f64> = edges
        .iter()
        .map(|t| sum_cdf_at(fx, &cdf, &gl, *t))
        .collect();
    Ok(at.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::grid::l1_distance;

    fn u(lo: f64, hi: f64) -> GridDensity1D {
        uniform_density(lo, hi, DEFAULT_NODES_1D).unwrap()
    }

    #[test]
    fn uniform_values() {
        let f = uniform_density(0.0, 1.0, 101).unwrap();
        assert!(f.values().iter().all(|v| *v == 1.0));
        assert!((f.integrate() - 1.0).abs() < 1e-14);
        assert!(uniform_density(-1.0, 1.0, 101)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.5));
        let f = uniform_density(0.0, 0.1, 11).unwrap();
        assert!(f.values().iter().all(|v| (*v - 10.0).abs() < 1e-12));
        assert!(uniform_density(1.0, 0.0, 11).is_err());
        assert!(uniform_density(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn triangle_from_two_uniforms() {
        let f = convolve_sum(&u(0.0, 1.0), &u(0.0, 1.0), &TransformOptions::default()).unwrap();
        assert!((f.lo() - 0.0).abs() < 1e-15 && (f.hi() - 2.0).abs() < 1e-15);
        assert!((f.at(1.0) - 1.0).abs() < 1e-9);
        assert!((f.at(0.5) - 0.5).abs() < 1e-9);
        assert!((f.integrate() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn narrow_shift() {
        let f = convolve_sum(
            &u(0.0, 1.0),
            &narrow_density(0.5, 1e-3, 65).unwrap(),
            &TransformOptions::default(),
        )
        .unwrap();
        assert!((f.at(1.0) - 1.0).abs() < 1e-6);
        assert!(f.at(0.45) < 1e-12);
        assert!(l1_distance(&f, &u(0.5, 1.5)) < 5e-3);
    }

    #[test]
    fn trapezoid_plateau() {
        let f = convolve_sum(&u(0.0, 1.0), &u(0.0, 2.0), &TransformOptions::default()).unwrap();
        for s in [1.1, 1.5, 1.9] {
            assert!((f.at(s) - 0.5).abs() < 1e-9);
        }
        for s in [0.3, 2.5] {
            assert!((f.at(s) - uniform_sum_pdf((0.0, 1.0), (0.0, 2.0), s)).abs() < 1e-9);
        }
    }

    #[test]
    fn difference_of_uniforms() {
        let f = convolve_diff(&u(0.0, 1.0), &u(0.0, 1.0), &TransformOptions::default()).unwrap();
        assert!((f.lo() + 1.0).abs() < 1e-15 && (f.hi() - 1.0).abs() < 1e-15);
        assert!((f.at(0.0) - 1.0).abs() < 1e-9);
        let g = convolve_diff(
            &u(0.0, 1.0),
            &narrow_density(0.0, 1e-3, 65).unwrap(),
            &TransformOptions::default(),
        )
        .unwrap();
        assert!(l1_distance(&g, &u(0.0, 1.0)) < 5e-3);
    }

    #[test]
    fn unnormalized_input_is_reported() {
        let f = u(0.0, 1.0).scaled(2.0);
        assert!(matches!(
            convolve_sum(&f, &u(0.0, 1.0), &TransformOptions::default()),
            Err(Error::Unnormalized { .. })
        ));
        assert!(convolve_sum(&f, &u(0.0, 1.0), &TransformOptions::unchecked()).is_ok());
    }

    #[test]
    fn ratio_of_constant_and_uniform() {
        // c / y with y ~ U(1, 2): density c / s² on [c/2, c]
        let c = 0.8;
        let s_axis = Axis::nodes(0.0, 1.0, 513).unwrap();
        let f = ratio_density(
            &narrow_density(c, 1e-4, 33).unwrap(),
            &u(1.0, 2.0),
            s_axis,
            &TransformOptions::default(),
        )
        .unwrap();
        assert!((f.at(0.6) - c / 0.36).abs() < 0.02 * c / 0.36);
        assert!(f.at(0.3) < 1e-9 && f.at(0.9) < 1e-9);
    }

    #[test]
    fn ratio_by_unit_is_identity() {
        let s_axis = Axis::nodes(-0.5, 1.5, 513).unwrap();
        let f = ratio_density(
            &u(0.0, 1.0),
            &narrow_density(1.0, 1e-4, 33).unwrap(),
            s_axis,
            &TransformOptions::default(),
        )
        .unwrap();
        assert!(l1_distance(&f, &u(0.0, 1.0)) < 1e-2);
    }

    #[test]
    fn ratio_domain_check() {
        let s_axis = Axis::nodes(0.0, 0.2, 65).unwrap();
        let err = ratio_density(
            &u(0.0, 1.0),
            &u(1.0, 2.0),
            s_axis,
            &TransformOptions::default(),
        );
        assert!(matches!(err, Err(Error::DomainMissesMass { .. })));
    }

    #[test]
    fn product_of_unit_uniforms_is_minus_log() {
        let s_axis = Axis::nodes(0.0, 1.0, 513).unwrap();
        let f = product_density(
            &u(0.0, 1.0),
            &u(0.0, 1.0),
            s_axis,
            &TransformOptions::default(),
        )
        .unwrap();
        for s in [0.05, 0.2, 0.5, 0.9] {
            assert!((f.at(s) + f64::ln(s)).abs() < 5e-3, "s={s} {}", f.at(s));
        }
        assert!((f.integrate() - 1.0).abs() < 2e-3);
    }

    #[test]
    fn product_with_unit_and_scale() {
        let s_axis = Axis::nodes(0.0, 2.0, 513).unwrap();
        let f = product_density(
            &narrow_density(1.0, 1e-4, 33).unwrap(),
            &u(0.0, 1.0),
            s_axis,
            &TransformOptions::default(),
        )
        .unwrap();
        assert!(l1_distance(&f, &u(0.0, 1.0)) < 1e-2);
        let g = product_density(
            &u(0.0, 1.0),
            &narrow_density(2.0, 1e-4, 33).unwrap(),
            s_axis,
            &TransformOptions::default(),
        )
        .unwrap();
        assert!((g.at(1.0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn interval_masses_of_a_sum() {
        let f = uniform_density(0.0, 1.0, 5).unwrap();
        let g = uniform_density(0.0, 0.01, 5).unwrap();
        let m = sum_interval_masses(&f, &g, &[0.0, 0.005, 0.01, 0.5, 1.01]).unwrap();
        assert!((m[0] - 0.005 * 0.005 / 0.02).abs() < 1e-14);
        assert!((m[0] + m[1] - 0.005).abs() < 1e-14);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let cdf = CarrierCdf::new(&uniform_density(0.0, 2.0, 9).unwrap()).unwrap();
        assert!((cdf.at(1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn square_of_uniforms() {
        let s_axis = Axis::nodes(0.0, 1.0, 513).unwrap();
        let f = square_density(&u(0.0, 1.0), s_axis).unwrap();
        for s in [0.0625, 0.25, 0.8125] {
            assert!((f.at(s) - 0.5 / f64::sqrt(s)).abs() < 1e-9);
        }
        assert!((f.integrate() - 1.0).abs() < 2e-3);
        let g = square_density(&u(-1.0, 1.0), s_axis).unwrap();
        assert!((g.at(0.25) - 1.0).abs() < 1e-9);
        assert!(square_density(&u(0.0, 1.0), Axis::nodes(-1.0, 1.0, 9).unwrap()).is_err());
    }

    #[test]
    fn narrow_square_and_root() {
        let x = narrow_density(2.0, 1e-3, 65).unwrap();
        let s = square_density(&x, square_axis(&x, 257).unwrap()).unwrap();
        assert!((s.mean().unwrap() - 4.0).abs() < 1e-3);
        let n = sqrt_density_auto(&narrow_density(4.0, 1e-3, 65).unwrap(), 257, 0.0).unwrap();
        assert!((n.mean().unwrap() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn root_of_uniform_is_linear() {
        let n = sqrt_density(&u(0.0, 1.0), Axis::nodes(0.0, 1.0, 513).unwrap(), 0.0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert!((n.at(x) - 2.0 * x).abs() < 1e-9);
        }
        assert!((n.integrate() - 1.0).abs() < 1e-5);
        let neg = u(-1.0, 1.0);
        assert!(matches!(
            sqrt_density_auto(&neg, 65, 0.0),
            Err(Error::NegativeSupport(_))
        ));
    }

    #[test]
    fn square_root_round_trip() {
        let f = u(0.1, 1.0);
        let s = square_density(&f, square_axis(&f, 513).unwrap()).unwrap();
        let back = sqrt_density(&s, Axis::nodes(0.1, 1.0, 513).unwrap(), 0.0).unwrap();
        assert!(l1_distance(&back, &f) < 3e-2);
    }

    #[test]
    fn reciprocal_of_uniform() {
        let g = reciprocal_density(&u(1.0, 2.0), Axis::nodes(0.5, 1.0, 257).unwrap()).unwrap();
        assert!((g.at(0.75) - 1.0 / 0.5625).abs() < 1e-9);
        assert!((g.integrate() - 1.0).abs() < 1e-4);
    }
}
