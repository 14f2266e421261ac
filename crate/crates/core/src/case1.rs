//! Case I: a uniform entry point on a face paired with an independent random
//! direction. Densities are evaluated in the canonical frame of a
//! [`CanonicalClass`]: entry on `x_j = 0`, exit on `x_j = X_j` (opposing, exit
//! coordinates `(x'_i, x'_k)`) or on `x_k = 0` (adjacent, exit coordinates
//! `(x'_i, x'_j)`).
//!
//! Inside the joint density the radial direction variable is integrated in
//! closed form: for a unit direction `u`, `I(u) = ∫ ρ(r u) r² dr` is the angular
//! density of the direction. What remains is a one-dimensional integral over
//! the entry points that reach the exit point with the requested length.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::density::grid::{Axis, GridDensity1D, GridDensity2D, GridDensity3D, Layout};
use crate::density::transforms::{self, TransformOptions};
use crate::error::{Error, Result};
use crate::geometry::{
    classify_pair, BoxDims, CanonicalClass, FaceId, PairKind, PermutationIndices, Side,
};
use crate::par;
use crate::quadrature::{clip_breaks, GaussLegendre};

/// Law of the raw direction components `(x̃_1, x̃_2, x̃_3)`. The component along
/// the entry normal is always restricted to the inward half and renormalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionModel {
    /// Independent uniforms on `[-1, 1]`; the inward component is `U(0, 1)`.
    #[default]
    CubeComponents,
    /// Uniform in the unit ball (rejection from the cube): isotropic directions.
    BallRejection,
}

impl DirectionModel {
    /// Angular density `∫ ρ(r d/n) r² dr` of the unit direction `d / n`, where
    /// `d` is the displacement from entry to exit and `n = |d|`. The inward
    /// component of `d` must be positive.
    #[inline]
    pub fn radial_moment(self, d: [f64; 3], n: f64) -> f64 {
        match self {
            DirectionModel::CubeComponents => {
                let m = d[0].abs().max(d[1].abs()).max(d[2].abs());
                let s = n / m;
                s * s * s / 12.0
            }
            DirectionModel::BallRejection => 0.5 / PI,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DirectionModel::CubeComponents => "cube_components",
            DirectionModel::BallRejection => "ball_rejection",
        }
    }
}

/// Quadrature settings shared by the Case I evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Case1Quadrature {
    /// Gauss–Legendre points per smooth piece of the inner entry-curve integral.
    pub inner_order: usize,
    /// Points per dimension when averaging over a grid cell.
    pub cell_order: usize,
    /// Panels and points per panel for integrals over the exit face.
    pub face_panels: usize,
    pub face_order: usize,
    /// Node count of the ratio carriers in the exit-location chain.
    pub ratio_nodes: usize,
    /// Points per piece of the direction-scale integral in the exit-location chain.
    pub scale_order: usize,
}

impl Default for Case1Quadrature {
    fn default() -> Self {
        Self {
            inner_order: 8,
            cell_order: 6,
            face_panels: 8,
            face_order: 4,
            ratio_nodes: 1025,
            scale_order: 16,
        }
    }
}

/// Minimum point count along any configured axis.
pub const MIN_GRID_POINTS: usize = 16;
/// Default node counts for exit-face (2D) and joint (3D) grids.
pub const DEFAULT_NODES_2D: usize = 129;
pub const DEFAULT_NODES_3D: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case1Config {
    pub dims: BoxDims,
    pub class: CanonicalClass,
    #[serde(default)]
    pub direction: DirectionModel,
    /// Joint grid over `(n, a, b)`; `None` uses the class length range and the exit face.
    #[serde(default)]
    pub joint_axes: Option<[Axis; 3]>,
    /// Exit-location grid over `(a, b)`.
    #[serde(default)]
    pub exit_axes: Option<[Axis; 2]>,
    #[serde(default)]
    pub quadrature: Case1Quadrature,
}

impl Case1Config {
    pub fn new(dims: BoxDims, class: CanonicalClass) -> Result<Self> {
        if class.kind() == PairKind::Same {
            return Err(Error::Unsupported(
                "same-face pairs have no Case I chord".into(),
            ));
        }
        Ok(Self {
            dims,
            class,
            direction: DirectionModel::default(),
            joint_axes: None,
            exit_axes: None,
            quadrature: Case1Quadrature::default(),
        })
    }

    /// Configuration from an index permutation: `Opposing` uses `perm.j` (which
    /// must be the middle of an even permutation), `Adjacent` uses `(perm.j, perm.k)`.
    pub fn from_perm(dims: BoxDims, perm: PermutationIndices, kind: PairKind) -> Result<Self> {
        let class = match kind {
            PairKind::Opposing if perm.is_even() => CanonicalClass::Opposing { j: perm.j },
            PairKind::Opposing => {
                return Err(Error::Unsupported(
                    "opposing densities use even permutations".into(),
                ))
            }
            PairKind::Adjacent => CanonicalClass::Adjacent {
                j: perm.j,
                k: perm.k,
            },
            PairKind::Same => {
                return Err(Error::Unsupported(
                    "same-face pairs have no Case I chord".into(),
                ))
            }
        };
        Self::new(dims, class)
    }

    pub fn opposing(dims: BoxDims, j: usize) -> Result<Self> {
        Self::new(dims, CanonicalClass::Opposing { j })
    }

    pub fn adjacent(dims: BoxDims, j: usize, k: usize) -> Result<Self> {
        if j == k || j > 2 || k > 2 {
            return Err(Error::Unsupported(format!(
                "axes j={j}, k={k} do not form an adjacent pair"
            )));
        }
        Self::new(dims, CanonicalClass::Adjacent { j, k })
    }

    pub fn with_direction(mut self, direction: DirectionModel) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_joint_axes(mut self, axes: [Axis; 3]) -> Self {
        self.joint_axes = Some(axes);
        self
    }

    pub fn with_exit_axes(mut self, axes: [Axis; 2]) -> Self {
        self.exit_axes = Some(axes);
        self
    }

    pub fn default_joint_axes(&self) -> Result<[Axis; 3]> {
        let (lo, hi) = self.class.length_range(&self.dims);
        let [a, b] = self.class.exit_dims(&self.dims);
        Ok([
            Axis::nodes(lo, hi, DEFAULT_NODES_3D)?,
            Axis::nodes(0.0, a, DEFAULT_NODES_3D)?,
            Axis::nodes(0.0, b, DEFAULT_NODES_3D)?,
        ])
    }

    pub fn default_exit_axes(&self) -> Result<[Axis; 2]> {
        let [a, b] = self.class.exit_dims(&self.dims);
        Ok([
            Axis::nodes(0.0, a, DEFAULT_NODES_2D)?,
            Axis::nodes(0.0, b, DEFAULT_NODES_2D)?,
        ])
    }

    pub fn joint_axes(&self) -> Result<[Axis; 3]> {
        let axes = match self.joint_axes {
            Some(a) => a,
            None => self.default_joint_axes()?,
        };
        validate_axes(&axes)?;
        if axes[0].hi() < self.dims.diagonal() * (1.0 - 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "length axis ends at {} below the box diagonal {}",
                axes[0].hi(),
                self.dims.diagonal()
            )));
        }
        Ok(axes)
    }

    pub fn exit_axes(&self) -> Result<[Axis; 2]> {
        let axes = match self.exit_axes {
            Some(a) => a,
            None => self.default_exit_axes()?,
        };
        validate_axes(&axes)?;
        Ok(axes)
    }

    /// The point evaluator for this configuration.
    pub fn model(&self) -> Case1Model {
        Case1Model::new(self.dims, self.class, self.direction, self.quadrature)
    }
}

fn validate_axes(axes: &[Axis]) -> Result<()> {
    for ax in axes {
        if ax.len() < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "{} points on an axis; need at least {MIN_GRID_POINTS}",
                ax.len()
            )));
        }
    }
    Ok(())
}

/// Pointwise evaluator of one canonical Case I joint density.
#[derive(Debug, Clone)]
pub struct Case1Model {
    dims: BoxDims,
    class: CanonicalClass,
    direction: DirectionModel,
    /// `(X_i, X_j, X_k)`.
    x: [f64; 3],
    diag: f64,
    quad: Case1Quadrature,
    inner: GaussLegendre,
}

impl Case1Model {
    pub fn new(
        dims: BoxDims,
        class: CanonicalClass,
        direction: DirectionModel,
        quad: Case1Quadrature,
    ) -> Self {
        let x = class.perm().dims(&dims);
        Self {
            dims,
            class,
            direction,
            x,
            diag: dims.diagonal(),
            quad,
            inner: GaussLegendre::new(quad.inner_order),
        }
    }

    pub fn class(&self) -> CanonicalClass {
        self.class
    }

    pub fn dims(&self) -> BoxDims {
        self.dims
    }

    pub fn direction(&self) -> DirectionModel {
        self.direction
    }

    /// Joint density at length `n` and canonical exit coordinates `(a, b)`.
    pub fn joint(&self, n: f64, a: f64, b: f64) -> f64 {
        match self.class {
            CanonicalClass::Opposing { .. } => self.opposing(n, a, b),
            CanonicalClass::Adjacent { .. } => self.adjacent(n, a, b),
            CanonicalClass::Same { .. } => 0.0,
        }
    }

    /// Smallest length with nonzero density at exit coordinates `(a, b)`.
    pub fn length_floor(&self, _a: f64, b: f64) -> f64 {
        match self.class {
            CanonicalClass::Opposing { .. } => self.x[1],
            _ => b.max(0.0),
        }
    }

    /// Entry points `(w_i, x_k)` reaching `(x'_i, X_j, x'_k)` with length `n` lie
    /// on a circle of radius `ρ = √(n² − X_j²)` around the exit point's foot.
    /// Writing `x'_i − w_i = ρ sin θ` and `x_k = x'_k ∓ ρ cos θ` (the sign of
    /// `x̃_k`), the factor `X_j r² / (n² q)` from `1/|J|` times `dw_i = q dθ`
    /// leaves `X_j / n²` and the radial moment.
    fn opposing(&self, n: f64, u: f64, v: f64) -> f64 {
        let [xi, xj, xk] = self.x;
        if !(n >= xj && n <= self.diag * (1.0 + 1e-12))
            || !(0.0..=xi).contains(&u)
            || !(0.0..=xk).contains(&v)
        {
            return 0.0;
        }
        let rho = (n * n - xj * xj).max(0.0).sqrt();
        let (t0, t1) = if rho == 0.0 {
            (
                if u < xi { -FRAC_PI_2 } else { 0.0 },
                if u > 0.0 { FRAC_PI_2 } else { 0.0 },
            )
        } else {
            (
                ((u - xi) / rho).clamp(-1.0, 1.0).asin(),
                (u / rho).clamp(-1.0, 1.0).asin(),
            )
        };
        if !(t1 > t0) {
            return 0.0;
        }
        let mut breaks = Vec::with_capacity(16);
        breaks.extend([0.0, FRAC_PI_4, -FRAC_PI_4]);
        if rho > 0.0 {
            for c in [xj, v, xk - v] {
                if c < rho {
                    let t = (c / rho).acos();
                    breaks.extend([t, -t]);
                }
            }
            if xj < rho {
                let t = (xj / rho).asin();
                breaks.extend([t, -t]);
            }
        }
        clip_breaks(&mut breaks, t0, t1);
        let dir = self.direction;
        let total = self.inner.integrate_pieces(&breaks, |t| {
            let (s, c) = t.sin_cos();
            let (a, q) = (rho * s, rho * c);
            let mut sum = 0.0;
            if q <= v {
                sum += dir.radial_moment([a, xj, q], n);
            }
            if q <= xk - v {
                sum += dir.radial_moment([a, xj, -q], n);
            }
            sum
        });
        xj / (xi * xk * n * n) * total
    }

    /// Entry points `(w_i, x_k)` reaching `(x'_i, x'_j, 0)` with length `n`
    /// satisfy `a² + x_k² = n² − x'_j²` with `a = x'_i − w_i`. In the variables
    /// `(ζ_k, w_i)`, `1/|J| = n / ζ_k⁴`; the `ζ_k` integral of the direction density
    /// is `I(u) / n²`.
    fn adjacent(&self, n: f64, u: f64, p: f64) -> f64 {
        let [xi, _, xk] = self.x;
        let xj = self.x[1];
        if !(n > 0.0 && n >= p && n <= self.diag * (1.0 + 1e-12))
            || !(0.0..=xi).contains(&u)
            || !(0.0..=xj).contains(&p)
        {
            return 0.0;
        }
        let r2 = n * n - p * p;
        if r2 <= 0.0 {
            return 0.0;
        }
        let big_r = r2.sqrt();
        let lo = (u - xi).max(-big_r);
        let hi = u.min(big_r);
        if !(hi > lo) {
            return 0.0;
        }
        // |a| below this leaves x_k = q beyond the far edge of the entry face
        let gap = if big_r > xk {
            (r2 - xk * xk).sqrt()
        } else {
            0.0
        };
        let mut breaks = Vec::with_capacity(16);
        for c in [
            0.0,
            p,
            big_r * std::f64::consts::FRAC_1_SQRT_2,
            (r2 - p * p).max(0.0).sqrt(),
            gap,
        ] {
            breaks.push(c);
            breaks.push(-c);
        }
        clip_breaks(&mut breaks, lo, hi);
        let dir = self.direction;
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if w[1] <= w[0] || mid.abs() < gap {
                continue;
            }
            total += self.inner.integrate(w[0], w[1], |a| {
                let q = (r2 - a * a).max(0.0).sqrt();
                dir.radial_moment([a, p, -q], n)
            });
        }
        total / (xi * xk * n * n)
    }

    /// Average of the joint density over the box `n × a × b`, by a tensor
    /// Gauss rule whose length factor starts at the support floor and is graded
    /// geometrically when the floor is close to zero.
    pub fn cell_average(&self, n: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
        let gl = GaussLegendre::new(self.quad.cell_order);
        let vol = (n.1 - n.0) * (a.1 - a.0) * (b.1 - b.0);
        if !(vol > 0.0) {
            return 0.0;
        }
        // cells wider than a face panel are split into panels
        let [ea, eb] = self.class.exit_dims(&self.dims);
        let split = |r: (f64, f64), e: f64| {
            let m = ((r.1 - r.0) * self.quad.face_panels.max(1) as f64 / e)
                .floor()
                .max(1.0) as usize;
            (0..=m)
                .map(|t| r.0 + (r.1 - r.0) * t as f64 / m as f64)
                .collect::<Vec<_>>()
        };
        let (pa, pb) = (split(a, ea), split(b, eb));
        let total = gl.integrate_pieces(&pb, |bb| {
            gl.integrate_pieces(&pa, |aa| {
                let floor = self.length_floor(aa, bb).max(n.0);
                graded_integral(&gl, floor, n.1, |nn| self.joint(nn, aa, bb))
            })
        });
        total / vol
    }

    /// Unnormalized length density: the joint integrated over the exit face.
    pub fn length_density(&self, n: f64) -> f64 {
        // the adjacent density has a finite limit at n -> 0
        let n = if n == 0.0 { 1e-9 * self.diag } else { n };
        let [ea, eb] = self.class.exit_dims(&self.dims);
        let gl = GaussLegendre::new(self.quad.face_order);
        let (ba, bb) = self.face_breaks(n, ea, eb);
        let mut total = 0.0;
        for wb in bb.windows(2) {
            let inner = |y: f64| {
                ba.windows(2)
                    .map(|wa| gl.integrate(wa[0], wa[1], |x| self.joint(n, x, y)))
                    .sum::<f64>()
            };
            total += gl.integrate(wb[0], wb[1], inner);
        }
        total
    }

    /// Panel breakpoints for face integrals at fixed `n`: uniform panels plus
    /// the coordinates where the integrand's support or smoothness changes.
    fn face_breaks(&self, n: f64, ea: f64, eb: f64) -> (Vec<f64>, Vec<f64>) {
        let panels = self.quad.face_panels.max(1);
        let mut ba: Vec<f64> = (1..panels).map(|m| ea * m as f64 / panels as f64).collect();
        let mut bb: Vec<f64> = (1..panels).map(|m| eb * m as f64 / panels as f64).collect();
        let [xi, xj, xk] = self.x;
        match self.class {
            CanonicalClass::Opposing { .. } => {
                let rho = (n * n - xj * xj).max(0.0).sqrt();
                let rho2 = rho * std::f64::consts::FRAC_1_SQRT_2;
                ba.extend([rho, xi - rho, rho2, xi - rho2]);
                bb.extend([rho, xk - rho, rho2, xk - rho2]);
            }
            _ => {
                for p in [
                    n,
                    (n * n - xk * xk).max(0.0).sqrt(),
                    n * std::f64::consts::FRAC_1_SQRT_2,
                ] {
                    bb.push(p);
                }
                let r = n;
                let gap = (n * n - xk * xk).max(0.0).sqrt();
                ba.extend([r, xi - r, gap, xi - gap]);
            }
        }
        clip_breaks(&mut ba, 0.0, ea);
        clip_breaks(&mut bb, 0.0, eb);
        (ba, bb)
    }
}

impl Case1Model {
    /// Exit-location density at canonical `(a, b)`: the joint integrated over
    /// length, with pieces clustered toward the support floor.
    pub fn exit_density(&self, a: f64, b: f64) -> f64 {
        let gl = GaussLegendre::new(self.quad.inner_order);
        let lo = self.length_floor(a, b);
        let hi = self.diag;
        let pieces = 20;
        let mut breaks: Vec<f64> = (0..=pieces)
            .map(|s| lo + (hi - lo) * (s as f64 / pieces as f64).powi(2))
            .collect();
        clip_breaks(&mut breaks, lo, hi);
        gl.integrate_pieces(&breaks, |n| self.joint(n, a, b))
    }
}

/// Exit-location density from integrating the joint over length at every node
/// of `axes` (unnormalized).
pub fn exit_from_joint(model: &Case1Model, axes: [Axis; 2]) -> Result<GridDensity2D> {
    let (au, av) = (axes[0], axes[1]);
    let mut values = par::map_indices(au.len() * av.len(), |flat| {
        model.exit_density(au.coord(flat / av.len()), av.coord(flat % av.len()))
    });
    if model.class().kind() == PairKind::Adjacent {
        if let Some(m0) = transforms::node_at(&av, 0.0) {
            for iu in 0..au.len() {
                let u = au.coord(iu);
                let mut column: Vec<f64> = values[iu * av.len()..(iu + 1) * av.len()].to_vec();
                transforms::mass_match_node(&mut column, &av, m0, &|p| model.exit_density(u, p));
                values[iu * av.len() + m0] = column[m0];
            }
        }
    }
    GridDensity2D::new(axes, values)
}

/// `∫_lo^hi f`, split into pieces `[lo, 2 lo], [2 lo, 4 lo], ...` when `lo` is
/// small relative to `hi` (integrands here grow like `1/n` toward the floor).
pub(crate) fn graded_integral(
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    if lo <= 0.0 || lo * 4.0 >= hi {
        return gl.integrate(lo, hi, f);
    }
    let mut total = 0.0;
    let mut a = lo;
    while a < hi {
        let b = (2.0 * a).min(hi);
        total += gl.integrate(a, b, &mut f);
        a = b;
    }
    total
}

/// Evaluate the joint density on `axes` (point values on node axes, cell
/// averages on cell axes). Node and cell layouts cannot be mixed.
pub fn joint_on_axes(model: &Case1Model, axes: [Axis; 3]) -> Result<GridDensity3D> {
    let layout = axes[0].layout();
    if axes.iter().any(|a| a.layout() != layout) {
        return Err(Error::InvalidGrid(
            "joint axes must share one layout".into(),
        ));
    }
    let total = axes[0].len() * axes[1].len() * axes[2].len();
    let grid = GridDensity3D::zeros(axes);
    let values = par::map_indices(total, |flat| {
        let [i, j, k] = grid.index_of(flat);
        match layout {
            Layout::Nodes => model.joint(axes[0].coord(i), axes[1].coord(j), axes[2].coord(k)),
            Layout::Cells => model.cell_average(
                axes[0].cell_bounds(i),
                axes[1].cell_bounds(j),
                axes[2].cell_bounds(k),
            ),
        }
    });
    GridDensity3D::new(axes, values)
}

/// Joint density over `(n, x'_i, x'_k)` for exits through the opposing face.
/// Unnormalized: its mass is the probability of exiting there.
pub fn joint_pdf_opposing(cfg: &Case1Config) -> Result<GridDensity3D> {
    if cfg.class.kind() != PairKind::Opposing {
        return Err(Error::Unsupported(format!(
            "{} is not an opposing pair",
            cfg.class
        )));
    }
    joint_on_axes(&cfg.model(), cfg.joint_axes()?)
}

/// Joint density over `(n, x'_i, x'_j)` for exits through an adjacent face.
pub fn joint_pdf_adjacent(cfg: &Case1Config) -> Result<GridDensity3D> {
    if cfg.class.kind() != PairKind::Adjacent {
        return Err(Error::Unsupported(format!(
            "{} is not an adjacent pair",
            cfg.class
        )));
    }
    joint_on_axes(&cfg.model(), cfg.joint_axes()?)
}

pub fn joint_pdf(cfg: &Case1Config) -> Result<GridDensity3D> {
    joint_on_axes(&cfg.model(), cfg.joint_axes()?)
}

/// Unnormalized length density of the class: point values on a node axis,
/// cell averages on a cell axis.
pub fn length_marginal(model: &Case1Model, n_axis: Axis) -> Result<GridDensity1D> {
    let values = match n_axis.layout() {
        Layout::Nodes => par::map_indices(n_axis.len(), |m| model.length_density(n_axis.coord(m))),
        Layout::Cells => {
            let gl = GaussLegendre::new(4);
            let kinks = length_kinks(&model.dims());
            par::map_indices(n_axis.len(), |m| {
                let (lo, hi) = n_axis.cell_bounds(m);
                let mut breaks: Vec<f64> = kinks
                    .iter()
                    .copied()
                    .filter(|k| *k > lo && *k < hi)
                    .collect();
                breaks.push(lo);
                breaks.push(hi);
                breaks.sort_by(f64::total_cmp);
                gl.integrate_pieces(&breaks, |n| model.length_density(n)) / (hi - lo)
            })
        }
    };
    GridDensity1D::new([n_axis], values)
}

/// Lengths where a class length density can start or change shape: the sides
/// and the diagonals of the faces.
fn length_kinks(dims: &BoxDims) -> Vec<f64> {
    let x = dims.as_array();
    let mut out = x.to_vec();
    for a in 0..3 {
        for b in (a + 1)..3 {
            out.push(x[a].hypot(x[b]));
        }
    }
    out.push(dims.diagonal());
    out
}

/// Exit-location density over the exit face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitPdf {
    /// Normalized over the exit face.
    pub density: GridDensity2D,
    /// Probability of leaving through this face given entry through the entry face.
    pub mass: f64,
}

/// Density at `x` of `x_0 + α x̃` with `x_0 ~ U(0, extent)` and `x̃ ~ U(-1, 1)`.
#[inline]
pub fn spread_uniform(x: f64, extent: f64, alpha: f64) -> f64 {
    let overlap = (x + alpha).min(extent) - (x - alpha).max(0.0);
    if overlap <= 0.0 {
        0.0
    } else {
        overlap / (2.0 * alpha * extent)
    }
}

fn require_cube(cfg: &Case1Config) -> Result<()> {
    if cfg.direction != DirectionModel::CubeComponents {
        return Err(Error::Unsupported(
            "the exit-location chain is built for independent direction components".into(),
        ));
    }
    Ok(())
}

/// Exit-location density on the opposing face from the transform chain:
/// `x'_i = x_i + X_j x̃_i / x̃_j` gives the marginal of `x'_i` (a ratio, then a
/// sum); conditioning on `x'_i` reweights the direction scale `α = X_j / x̃_j`,
/// and `x'_k = x_k + α x̃_k` gives the conditional of `x'_k`.
pub fn exit_pdf_opposing(cfg: &Case1Config) -> Result<ExitPdf> {
    if cfg.class.kind() != PairKind::Opposing {
        return Err(Error::Unsupported(format!(
            "{} is not an opposing pair",
            cfg.class
        )));
    }
    require_cube(cfg)?;
    let [xi, xj, xk] = cfg.class.perm().dims(&cfg.dims);
    let axes = cfg.exit_axes()?;
    let q = cfg.quadrature;
    let opts = TransformOptions::unchecked();

    // density of X_j x̃_i / x̃_j on the offsets that can land on the face
    let num = transforms::uniform_density(-xj, xj, q.ratio_nodes)?;
    let den = transforms::uniform_density(0.0, 1.0, q.ratio_nodes)?;
    let offsets = Axis::nodes(-xi, xi, 2 * (q.ratio_nodes / 2) + 1)?;
    let ratio = transforms::ratio_density(&num, &den, offsets, &opts)?;
    let entry = transforms::uniform_density(0.0, xi, q.ratio_nodes)?;
    let fu = transforms::convolve_on(&entry, &ratio, axes[0].with_len(axes[0].len())?)?;

    let gl = GaussLegendre::new(q.scale_order);
    let (au, av) = (axes[0], axes[1]);
    let total = au.len() * av.len();
    let values = par::map_indices(total, |flat| {
        let (iu, iv) = (flat / av.len(), flat % av.len());
        let (u, v) = (au.coord(iu), av.coord(iv));
        // integrate over t = x̃_j in (0, 1]; α = X_j / t
        let mut breaks: Vec<f64> = [u, xi - u, v, xk - v]
            .iter()
            .filter(|c| **c > 0.0)
            .map(|c| xj / c)
            .collect();
        clip_breaks(&mut breaks, 0.0, 1.0);
        let mut joint = 0.0;
        let mut marginal = 0.0;
        for w in breaks.windows(2) {
            joint += gl.integrate(w[0], w[1], |t| {
                let alpha = xj / t;
                spread_uniform(u, xi, alpha) * spread_uniform(v, xk, alpha)
            });
            marginal += gl.integrate(w[0], w[1], |t| spread_uniform(u, xi, xj / t));
        }
        let conditional = if marginal > 0.0 {
            joint / marginal
        } else {
            0.0
        };
        fu.at(u) * conditional
    });
    finish_exit(axes, values)
}

fn finish_exit(axes: [Axis; 2], values: Vec<f64>) -> Result<ExitPdf> {
    let raw = GridDensity2D::new(axes, values)?;
    let mass = raw.integrate();
    if !(mass > 1e-12) {
        return Err(Error::Quadrature(format!(
            "exit density mass {mass} is below the floor"
        )));
    }
    Ok(ExitPdf {
        density: raw.scaled(1.0 / mass),
        mass,
    })
}

/// Exit-location density on an adjacent face. With `τ = x_k / |x̃_k|` the time
/// to reach `x_k = 0` (half the directions head that way), `x'_i = x_i + τ x̃_i`
/// and `x'_j = τ x̃_j`; `τ` is a ratio of independent uniforms.
pub fn exit_pdf_adjacent(cfg: &Case1Config) -> Result<ExitPdf> {
    if cfg.class.kind() != PairKind::Adjacent {
        return Err(Error::Unsupported(format!(
            "{} is not an adjacent pair",
            cfg.class
        )));
    }
    require_cube(cfg)?;
    let [xi, xj, xk] = cfg.class.perm().dims(&cfg.dims);
    let _ = xj;
    let axes = cfg.exit_axes()?;
    let q = cfg.quadrature;
    let opts = TransformOptions::unchecked();

    // ratio carrier on [0, 2 X_k]; beyond X_k the law of τ is exactly X_k / (2 τ²)
    let tau_max = 2.0 * xk;
    let num = transforms::uniform_density(0.0, xk, q.ratio_nodes)?;
    let den = transforms::uniform_density(0.0, 1.0, q.ratio_nodes)?;
    let f_tau =
        transforms::ratio_density(&num, &den, Axis::nodes(0.0, tau_max, q.ratio_nodes)?, &opts)?;
    let density_tau = |t: f64| {
        if t < tau_max {
            f_tau.at(t)
        } else {
            xk / (2.0 * t * t)
        }
    };

    let gl = GaussLegendre::new(q.scale_order);
    let point = |u: f64, p: f64| -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let integrand = |t: f64| density_tau(t) * spread_uniform(u, xi, t) / t;
        let mut breaks = vec![p];
        let mut g = p;
        while g < 4.0 * tau_max {
            g *= 2.0;
            breaks.push(g);
        }
        breaks.extend([u, xi - u, xk, tau_max]);
        let top = breaks.iter().cloned().fold(p, f64::max);
        clip_breaks(&mut breaks, p, top);
        let body = gl.integrate_pieces(&breaks, integrand);
        // tail over [top, ∞) in s = 1 / τ
        let tail = gl.integrate(0.0, 1.0 / top, |s| {
            let t = 1.0 / s;
            integrand(t) * t * t
        });
        0.5 * (body + tail)
    };

    let (au, ap) = (axes[0], axes[1]);
    let total = au.len() * ap.len();
    let mut values = par::map_indices(total, |flat| {
        point(au.coord(flat / ap.len()), ap.coord(flat % ap.len()))
    });
    // the density diverges like -log(x'_j) at the shared edge
    if let Some(m0) = transforms::node_at(&ap, 0.0) {
        for iu in 0..au.len() {
            let u = au.coord(iu);
            let mut column: Vec<f64> = (0..ap.len()).map(|ip| values[iu * ap.len() + ip]).collect();
            transforms::mass_match_node(&mut column, &ap, m0, &|p| point(u, p));
            values[iu * ap.len() + m0] = column[m0];
        }
    }
    finish_exit(axes, values)
}

/// Forward map `(x_i, x_k, x̃_i, x̃_j, x̃_k) -> (w_i, x'_k, x'_i, n, r)` for an
/// opposing exit (axis order of the determinant table).
pub fn forward_opposing(point: [f64; 5], dims: &BoxDims, perm: PermutationIndices) -> [f64; 5] {
    let xj = dims.side(perm.j);
    let [x_i, x_k, di, dj, dk] = point;
    let r = (di * di + dj * dj + dk * dk).sqrt();
    [x_i, x_k + xj * dk / dj, x_i + xj * di / dj, xj * r / dj, r]
}

/// Forward map `(x_i, x_k, x̃_i, x̃_j, x̃_k) -> (w_i, ζ_k, x'_j, x'_i, n)` for an
/// exit through `x_k = 0`, with `ζ_k = x_k / x̃_k` and travel time `-ζ_k`.
pub fn forward_adjacent(point: [f64; 5], _dims: &BoxDims, _perm: PermutationIndices) -> [f64; 5] {
    let [x_i, x_k, di, dj, dk] = point;
    let r = (di * di + dj * dj + dk * dk).sqrt();
    let zeta = x_k / dk;
    let t = -zeta;
    [x_i, zeta, t * dj, x_i + t * di, t * r]
}

/// `|J| = n² √(n² − (x'_i − w_i)² − X_j²) / (X_j r²)` for the opposing map.
pub fn jacobian_opposing(point: [f64; 5], dims: &BoxDims, perm: PermutationIndices) -> Result<f64> {
    if point[3] == 0.0 {
        return Err(Error::Singular(
            "x̃_j = 0: the direction is parallel to the entry face".into(),
        ));
    }
    let xj = dims.side(perm.j);
    let [w, _, xpi, n, r] = forward_opposing(point, dims, perm);
    let a = xpi - w;
    let q = (n * n - a * a - xj * xj).max(0.0).sqrt();
    Ok(n * n * q / (xj * r * r))
}

/// `|J| = ζ_k⁴ / n` for the adjacent map.
pub fn jacobian_adjacent(point: [f64; 5], dims: &BoxDims, perm: PermutationIndices) -> Result<f64> {
    if point[4] == 0.0 {
        return Err(Error::Singular(
            "x̃_k = 0: the direction never reaches the exit plane".into(),
        ));
    }
    let [_, zeta, _, _, n] = forward_adjacent(point, dims, perm);
    Ok(zeta.powi(4) / n)
}

/// Absolute determinant of the Jacobian of `map` at `point`, by central
/// differences with relative step `h`.
pub fn finite_difference_jacobian(
    map: impl Fn([f64; 5]) -> [f64; 5],
    point: [f64; 5],
    h: f64,
) -> f64 {
    let mut m = [[0.0; 5]; 5];
    for c in 0..5 {
        let step = h * point[c].abs().max(1e-3);
        let mut plus = point;
        let mut minus = point;
        plus[c] += step;
        minus[c] -= step;
        let (fp, fm) = (map(plus), map(minus));
        for r in 0..5 {
            m[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    determinant5(m).abs()
}

fn determinant5(mut m: [[f64; 5]; 5]) -> f64 {
    let mut det = 1.0;
    for c in 0..5 {
        let pivot = (c..5)
            .max_by(|a, b| m[*a][c].abs().total_cmp(&m[*b][c].abs()))
            .unwrap();
        if m[pivot][c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            m.swap(pivot, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..5 {
            let f = m[r][c] / m[c][c];
            for cc in c..5 {
                m[r][cc] -= f * m[c][cc];
            }
        }
    }
    det
}

/// Joint density at length `n` and exit point `exit_local` of the world face
/// pair `(entry, exit)`, computed directly in world coordinates without the
/// canonical frame: the entry points at distance `n` from the exit point form a
/// circle in the entry plane, and the direction density is converted from solid
/// angle to exit area by `|ω · ν_exit| / n²`.
pub fn world_joint_point(
    dims: &BoxDims,
    direction: DirectionModel,
    entry: FaceId,
    exit: FaceId,
    n: f64,
    exit_local: [f64; 2],
    order: usize,
) -> f64 {
    if entry == exit || !(n > 0.0) {
        return 0.0;
    }
    let y = exit.to_world(dims, exit_local);
    let ja = entry.axis();
    let plane = entry.plane(dims);
    let inward = if entry.side() == Side::Low { 1.0 } else { -1.0 };
    let d = (y[ja] - plane).abs();
    if n < d {
        return 0.0;
    }
    let rho = (n * n - d * d).sqrt();
    let [e1, e2] = entry.in_plane_axes();
    let (c1, c2) = (y[e1], y[e2]);
    let (l1, l2) = (dims.side(e1), dims.side(e2));
    let mut breaks: Vec<f64> = (0..=16).map(|m| m as f64 * PI / 8.0).collect();
    if rho > 0.0 {
        // rectangle edges and the kinks of the max-norm
        for (edge, phase) in [
            (0.0 - c1, 0.0),
            (l1 - c1, 0.0),
            (0.0 - c2, FRAC_PI_2),
            (l2 - c2, FRAC_PI_2),
            (d, 0.0),
            (-d, 0.0),
            (d, FRAC_PI_2),
            (-d, FRAC_PI_2),
        ] {
            let c = edge / rho;
            if c.abs() < 1.0 {
                let t = c.acos();
                for phi in [
                    phase + t,
                    phase - t,
                    phase + t + 2.0 * PI,
                    phase - t + 2.0 * PI,
                ] {
                    breaks.push(phi);
                }
            }
        }
    }
    clip_breaks(&mut breaks, 0.0, 2.0 * PI);
    let gl = GaussLegendre::new(order);
    let ax_exit = exit.axis();
    let total = gl.integrate_pieces(&breaks, |phi| {
        let (s, c) = phi.sin_cos();
        let (x1, x2) = (c1 + rho * c, c2 + rho * s);
        if !(0.0..=l1).contains(&x1) || !(0.0..=l2).contains(&x2) {
            return 0.0;
        }
        let mut disp = [0.0; 3];
        disp[ja] = y[ja] - plane;
        disp[e1] = y[e1] - x1;
        disp[e2] = y[e2] - x2;
        if disp[ja] * inward <= 0.0 {
            return 0.0;
        }
        // reorient so that the inward component is positive, as the moment expects
        let mut local = disp;
        local[ja] *= inward;
        direction.radial_moment(local, n) * disp[ax_exit].abs() / n
    });
    total / (dims.side(e1) * dims.side(e2) * n)
}

/// Canonical joint density evaluated for a world face pair at world exit coordinates.
pub fn joint_world_via_canonical(
    model: &Case1Model,
    entry: FaceId,
    exit: FaceId,
    n: f64,
    exit_local: [f64; 2],
) -> f64 {
    let pair = classify_pair(entry, exit);
    if pair.class != model.class() {
        return 0.0;
    }
    let [a, b] = pair.exit_to_canonical(&model.dims(), exit_local);
    model.joint(n, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> BoxDims {
        BoxDims::cube()
    }

    #[test]
    fn opposing_support() {
        let m = Case1Config::opposing(cube(), 1).unwrap().model();
        assert_eq!(m.joint(0.99, 0.5, 0.5), 0.0);
        assert!(m.joint(1.0, 0.5, 0.5) > 0.0);
        assert!(m.joint(1.2, 0.5, 0.5) > 0.0);
        assert_eq!(m.joint(1.8, 0.5, 0.5), 0.0);
        // from the centre the longest chord reaches a corner at √1.5
        assert!(m.joint(1.22, 0.5, 0.5) > 0.0);
        assert_eq!(m.joint(1.23, 0.5, 0.5), 0.0);
    }

    #[test]
    fn adjacent_support() {
        let m = Case1Config::adjacent(cube(), 1, 2).unwrap().model();
        assert_eq!(m.joint(0.3, 0.5, 0.4), 0.0);
        assert!(m.joint(0.5, 0.5, 0.4) > 0.0);
        assert_eq!(m.joint(0.0, 0.5, 0.0), 0.0);
    }

    #[test]
    fn opposing_limit_at_minimum_length() {
        // straight-across chords: f -> 2π X_j · n / (12 X_i X_k X_j³) at n = X_j
        let m = Case1Config::opposing(cube(), 1).unwrap().model();
        let expect = 2.0 * PI / 12.0;
        assert!((m.joint(1.0, 0.5, 0.5) - expect).abs() < 1e-9);
        assert!((m.joint(1.0 + 1e-9, 0.5, 0.5) - expect).abs() < 1e-6);
    }

    #[test]
    fn joint_matches_direct_jacobian_integral() {
        // ∫∫ ρ / |J| dr dw_i evaluated with the public Jacobian at a few points
        let dims = BoxDims::new(1.0, 0.7, 1.3).unwrap();
        let cfg = Case1Config::opposing(dims, 1).unwrap();
        let m = cfg.model();
        let perm = cfg.class.perm();
        let [xi, xj, xk] = perm.dims(&dims);
        let gl = GaussLegendre::new(12);
        for &(n, u, v) in &[(0.9, 0.4, 0.6), (1.1, 0.2, 1.0), (1.5, 0.9, 0.3)] {
            let rho = (n * n - xj * xj).sqrt();
            let lo = (u - xi).max(-rho);
            let hi = u.min(rho);
            // cluster toward both ends, where 1/q is singular
            let mut breaks: Vec<f64> = (0..=400)
                .map(|s| lo + (hi - lo) * 0.5 * (1.0 - (PI * s as f64 / 400.0).cos()))
                .collect();
            clip_breaks(&mut breaks, lo, hi);
            let direct = gl.integrate_pieces(&breaks, |a| {
                let w = u - a;
                let q = (rho * rho - a * a).max(0.0).sqrt();
                let mut s = 0.0;
                for xk_entry in [v - q, v + q] {
                    if !(0.0..=xk).contains(&xk_entry) || q == 0.0 {
                        continue;
                    }
                    // r-integral of the truncated cube density: up to the first component hitting 1
                    let disp = [a, xj, v - xk_entry];
                    let rmax = n / disp.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
                    s += gl.integrate(0.0, rmax, |r| {
                        let dt = [r * disp[0] / n, r * disp[1] / n, r * disp[2] / n];
                        let pt = [w, xk_entry, dt[0], dt[1], dt[2]];
                        let j = jacobian_opposing(pt, &dims, perm).unwrap();
                        (1.0 / xi) * (1.0 / xk) * 0.25 / j
                    });
                }
                s
            });
            let got = m.joint(n, u, v);
            assert!(
                (got - direct).abs() < 2e-3 * got,
                "{n} {u} {v}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let dims = BoxDims::new(1.0, 2.0, 0.5).unwrap();
        let perm = PermutationIndices::even_with_j(1);
        let pt = [0.3, 0.2, 0.4, 0.7, -0.35];
        let fd = finite_difference_jacobian(|p| forward_opposing(p, &dims, perm), pt, 1e-6);
        let an = jacobian_opposing(pt, &dims, perm).unwrap();
        assert!((fd - an).abs() < 1e-6 * an, "{fd} {an}");
        let fd = finite_difference_jacobian(|p| forward_adjacent(p, &dims, perm), pt, 1e-6);
        let an = jacobian_adjacent(pt, &dims, perm).unwrap();
        assert!((fd - an).abs() < 1e-6 * an, "{fd} {an}");
        assert!(jacobian_opposing([0.1, 0.1, 0.2, 0.0, 0.3], &dims, perm).is_err());
        assert!(jacobian_adjacent([0.1, 0.1, 0.2, 0.3, 0.0], &dims, perm).is_err());
    }

    #[test]
    fn world_frame_agrees_with_canonical() {
        let dims = BoxDims::new(1.0, 0.6, 1.4).unwrap();
        for class in CanonicalClass::traversing() {
            let m = Case1Config::new(dims, class).unwrap().model();
            let (lo, hi) = class.length_range(&dims);
            for (entry, exit) in crate::geometry::pairs_of_class(class) {
                let [la, lb] = exit.local_dims(&dims);
                for &(fn_, fa, fb) in &[(0.3, 0.3, 0.6), (0.5, 0.8, 0.2), (0.15, 0.5, 0.5)] {
                    let n = lo + fn_ * (hi - lo);
                    let local = [fa * la, fb * lb];
                    let w = world_joint_point(
                        &dims,
                        DirectionModel::CubeComponents,
                        entry,
                        exit,
                        n,
                        local,
                        12,
                    );
                    let c = joint_world_via_canonical(&m, entry, exit, n, local);
                    assert!(
                        (w - c).abs() <= 1e-6 * c.max(1e-3),
                        "{entry}->{exit} n={n}: {w} vs {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn spread_uniform_is_a_density() {
        let gl = GaussLegendre::new(8);
        let mut breaks = vec![-0.7, 0.3, 0.7, 1.7];
        clip_breaks(&mut breaks, -0.7, 1.7);
        let mass = gl.integrate_pieces(&breaks, |x| spread_uniform(x, 1.0, 0.7));
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_exit_chain_is_unsupported() {
        let cfg = Case1Config::opposing(cube(), 0)
            .unwrap()
            .with_direction(DirectionModel::BallRejection);
        assert!(matches!(
            exit_pdf_opposing(&cfg),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(Case1Config::new(cube(), CanonicalClass::Same { j: 0 }).is_err());
        let cfg = Case1Config::opposing(cube(), 0).unwrap();
        let small = cfg.clone().with_joint_axes([
            Axis::nodes(1.0, 1.8, 8).unwrap(),
            Axis::nodes(0.0, 1.0, 32).unwrap(),
            Axis::nodes(0.0, 1.0, 32).unwrap(),
        ]);
        assert!(small.joint_axes().is_err());
        let short = cfg.with_joint_axes([
            Axis::nodes(1.0, 1.5, 32).unwrap(),
            Axis::nodes(0.0, 1.0, 32).unwrap(),
            Axis::nodes(0.0, 1.0, 32).unwrap(),
        ]);
        assert!(short.joint_axes().is_err());
        assert!(Case1Config::from_perm(
            cube(),
            PermutationIndices { i: 0, j: 2, k: 1 },
            PairKind::Opposing
        )
        .is_err());
    }
}
