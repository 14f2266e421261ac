//! Case II: a uniform entry point on one face joined to an exit point on
//! another face. Given the exit point, the chord length follows from squared
//! coordinate offsets: `n² = (x'_i − x_i)² + X_j² + (x'_k − x_k)²` for the
//! opposing face and `n² = (x'_i − x_i)² + x'_j² + x_k²` for an adjacent one.

use serde::{Deserialize, Serialize};

use crate::density::grid::{Axis, GridDensity1D, GridDensity3D, Layout};
use crate::density::transforms::{self, TransformOptions};
use crate::error::{Error, Result};
use crate::geometry::{BoxDims, CanonicalClass, PairKind};
use crate::par;
use crate::quadrature::GaussLegendre;

/// How exit points are weighted when conditionals are assembled into joints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitWeighting {
    /// Uniform per unit area over the five faces other than the entry face.
    #[default]
    PerArea,
    /// Each of the five other faces equally likely, uniform within the face.
    PerFace,
}

/// Route for the face-averaged length marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalRoute {
    /// Exact polar cell masses; cell-layout axes only.
    #[default]
    Polar,
    /// Square, convolve and square-root transforms on node grids.
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case2Config {
    pub dims: BoxDims,
    pub class: CanonicalClass,
    #[serde(default)]
    pub weighting: ExitWeighting,
    /// Node count of the carriers behind a single conditional.
    #[serde(default = "default_carrier")]
    pub carrier_nodes: usize,
    /// Node count of the carriers used per exit point when building joints.
    #[serde(default = "default_joint_carrier")]
    pub joint_carrier_nodes: usize,
    /// Joint grid over `(n, a, b)`; `None` uses the class length range and the exit face.
    #[serde(default)]
    pub joint_axes: Option<[Axis; 3]>,
    /// Exit points per dimension when averaging over a grid cell.
    #[serde(default = "default_cell_order")]
    pub cell_order: usize,
}

fn default_carrier() -> usize {
    transforms::DEFAULT_NODES_1D
}

fn default_joint_carrier() -> usize {
    257
}

fn default_cell_order() -> usize {
    4
}

impl Case2Config {
    pub fn new(dims: BoxDims, class: CanonicalClass) -> Result<Self> {
        if class.kind() == PairKind::Same {
            return Err(Error::Unsupported(
                "same-face pairs are excluded from Case II".into(),
            ));
        }
        Ok(Self {
            dims,
            class,
            weighting: ExitWeighting::default(),
            carrier_nodes: default_carrier(),
            joint_carrier_nodes: default_joint_carrier(),
            joint_axes: None,
            cell_order: default_cell_order(),
        })
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

    pub fn with_joint_axes(mut self, axes: [Axis; 3]) -> Self {
        self.joint_axes = Some(axes);
        self
    }

    pub fn with_weighting(mut self, weighting: ExitWeighting) -> Self {
        self.weighting = weighting;
        self
    }

    pub fn joint_axes(&self) -> Result<[Axis; 3]> {
        match self.joint_axes {
            Some(a) => Ok(a),
            None => {
                let (lo, hi) = self.class.length_range(&self.dims);
                let [a, b] = self.class.exit_dims(&self.dims);
                Ok([
                    Axis::nodes(lo, hi, 65)?,
                    Axis::nodes(0.0, a, 65)?,
                    Axis::nodes(0.0, b, 65)?,
                ])
            }
        }
    }

    /// `(X_i, X_j, X_k)` of the class permutation.
    fn sides(&self) -> [f64; 3] {
        self.class.perm().dims(&self.dims)
    }

    /// Exit density per unit area on this class's exit face.
    pub fn exit_weight(&self) -> f64 {
        let [xi, xj, xk] = self.sides();
        let entry_area = xi * xk;
        let exit_area = match self.class.kind() {
            PairKind::Opposing => xi * xk,
            _ => xi * xj,
        };
        match self.weighting {
            ExitWeighting::PerArea => 1.0 / (self.dims.surface_area() - entry_area),
            ExitWeighting::PerFace => 0.2 / exit_area,
        }
    }

    /// Probability that the exit lies on this class's exit face.
    pub fn face_mass(&self) -> f64 {
        let [a, b] = self.class.exit_dims(&self.dims);
        self.exit_weight() * a * b
    }

    fn check_exit(&self, exit: [f64; 2]) -> Result<()> {
        let bounds = self.class.exit_dims(&self.dims);
        let tol = 1e-12 * self.dims.diagonal();
        if (0..2).any(|d| !(exit[d] >= -tol && exit[d] <= bounds[d] + tol)) {
            return Err(Error::ExitOutOfBounds {
                coords: exit,
                bounds,
            });
        }
        Ok(())
    }

    /// Shortest chord to the exit point: the distance to the entry plane.
    pub fn length_floor(&self, exit: [f64; 2]) -> f64 {
        match self.class.kind() {
            PairKind::Opposing => self.sides()[1],
            _ => exit[1],
        }
    }

    /// Longest chord to the exit point: the farthest corner of the entry face.
    pub fn length_ceiling(&self, exit: [f64; 2]) -> f64 {
        let [xi, xj, xk] = self.sides();
        let di = exit[0].max(xi - exit[0]);
        match self.class.kind() {
            PairKind::Opposing => (di * di + xj * xj + exit[1].max(xk - exit[1]).powi(2)).sqrt(),
            _ => (di * di + exit[1] * exit[1] + xk * xk).sqrt(),
        }
    }
}

/// Density of the squared offset `(c − x)²` for `x ~ U(0, extent)`.
fn squared_offset(c: f64, extent: f64, nodes: usize) -> Result<GridDensity1D> {
    let d = transforms::uniform_density(c - extent, c, nodes)?;
    transforms::square_density(&d, transforms::square_axis(&d, nodes)?)
}

/// The squared-offset pipeline shared by both face kinds: `S = s_i + s_k`,
/// then `n = √(S + shift)` with `f_n(n) = f_S(n² − shift) · 2n`.
fn length_from_squares(
    si: &GridDensity1D,
    sk: &GridDensity1D,
    shift: f64,
    n_axis: Axis,
    nodes: usize,
) -> Result<GridDensity1D> {
    let opts = TransformOptions {
        output_nodes: Some(nodes),
        ..TransformOptions::unchecked()
    };
    let s = transforms::convolve_sum(si, sk, &opts)?;
    transforms::sqrt_density(&s, n_axis, shift)
}

fn natural_n_axis(cfg: &Case2Config, exit: [f64; 2], nodes: usize) -> Result<Axis> {
    Axis::nodes(cfg.length_floor(exit), cfg.length_ceiling(exit), nodes)
}

fn conditional_raw(
    cfg: &Case2Config,
    exit: [f64; 2],
    n_axis: Option<Axis>,
    nodes: usize,
) -> Result<GridDensity1D> {
    let (si, sk, shift) = squared_terms(cfg, exit, nodes)?;
    let n_axis = match n_axis {
        Some(a) => a,
        None => natural_n_axis(cfg, exit, nodes)?,
    };
    length_from_squares(&si, &sk, shift, n_axis, nodes)
}

/// Squared-offset carriers `(s_i, s_k)` and the shift for an exit point.
fn squared_terms(
    cfg: &Case2Config,
    exit: [f64; 2],
    nodes: usize,
) -> Result<(GridDensity1D, GridDensity1D, f64)> {
    cfg.check_exit(exit)?;
    let [xi, xj, xk] = cfg.sides();
    let si = squared_offset(exit[0], xi, nodes)?;
    match cfg.class.kind() {
        PairKind::Opposing => Ok((si, squared_offset(exit[1], xk, nodes)?, xj * xj)),
        _ => {
            let xk_density = transforms::uniform_density(0.0, xk, nodes)?;
            let sk = transforms::square_density(
                &xk_density,
                transforms::square_axis(&xk_density, nodes)?,
            )?;
            Ok((si, sk, exit[1] * exit[1]))
        }
    }
}

/// Probability of each cell of `bins` given the exit point, computed as
/// `P(a² − shift ≤ S < b² − shift)` straight from the carriers of `S`, so
/// narrow features near the length floor keep their mass at any bin width.
pub fn conditional_bin_masses(
    cfg: &Case2Config,
    exit: [f64; 2],
    bins: &Axis,
    nodes: usize,
) -> Result<Vec<f64>> {
    let (si, sk, shift) = squared_terms(cfg, exit, nodes)?;
    let mut edges: Vec<f64> = (0..bins.len()).map(|m| bins.cell_bounds(m).0).collect();
    edges.push(bins.cell_bounds(bins.len() - 1).1);
    let s_edges: Vec<f64> = edges.iter().map(|n| (n * n - shift).max(0.0)).collect();
    let total = transforms::sum_interval_masses(&si, &sk, &[0.0, si.hi() + sk.hi()])?[0];
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let masses = transforms::sum_interval_masses(&si, &sk, &s_edges)?;
    Ok(masses.into_iter().map(|m| m / total).collect())
}

/// Conditional as cell averages on a cell-layout length axis.
pub fn conditional_on_cells(
    cfg: &Case2Config,
    exit: [f64; 2],
    bins: Axis,
) -> Result<GridDensity1D> {
    if bins.layout() != Layout::Cells {
        return Err(Error::InvalidGrid(
            "conditional_on_cells needs a cell-layout axis".into(),
        ));
    }
    let masses = conditional_bin_masses(cfg, exit, &bins, cfg.carrier_nodes)?;
    GridDensity1D::new(
        [bins],
        masses.into_iter().map(|m| m / bins.step()).collect(),
    )
}

/// Length density given an exit point on the opposing face, normalized over `n`.
pub fn conditional_length_pdf_opposing(cfg: &Case2Config, exit: [f64; 2]) -> Result<GridDensity1D> {
    if cfg.class.kind() != PairKind::Opposing {
        return Err(Error::Unsupported(format!(
            "{} is not an opposing pair",
            cfg.class
        )));
    }
    conditional_raw(cfg, exit, None, cfg.carrier_nodes)?.normalize()
}

/// Length density given an exit point on an adjacent face, normalized over `n`.
pub fn conditional_length_pdf_adjacent(cfg: &Case2Config, exit: [f64; 2]) -> Result<GridDensity1D> {
    if cfg.class.kind() != PairKind::Adjacent {
        return Err(Error::Unsupported(format!(
            "{} is not an adjacent pair",
            cfg.class
        )));
    }
    conditional_raw(cfg, exit, None, cfg.carrier_nodes)?.normalize()
}

pub fn conditional_length_pdf(cfg: &Case2Config, exit: [f64; 2]) -> Result<GridDensity1D> {
    conditional_raw(cfg, exit, None, cfg.carrier_nodes)?.normalize()
}

/// Conditional on a caller-chosen length axis, normalized by its own mass
/// (zero when the axis misses the support).
pub fn conditional_on_axis(
    cfg: &Case2Config,
    exit: [f64; 2],
    n_axis: Axis,
    nodes: usize,
) -> Result<GridDensity1D> {
    let natural = conditional_raw(cfg, exit, None, nodes)?;
    let mass = natural.integrate();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let scaled = natural.scaled(1.0 / mass);
    scaled.resample(n_axis)
}

/// Joint density over `(n, a, b)`: conditional times exit weight. Node axes get
/// point values; cell axes get cell averages (conditional masses per length
/// cell, averaged over Gauss points of the exit cell).
pub fn joint_pdf_case2(cfg: &Case2Config) -> Result<GridDensity3D> {
    let axes = cfg.joint_axes()?;
    let layout = axes[0].layout();
    if axes.iter().any(|a| a.layout() != layout) {
        return Err(Error::InvalidGrid(
            "joint axes must share one layout".into(),
        ));
    }
    let weight = cfg.exit_weight();
    let (na, nb) = (axes[1].len(), axes[2].len());
    let nodes = cfg.joint_carrier_nodes;
    let columns: Vec<Result<Vec<f64>>> = match layout {
        Layout::Nodes => par::map_indices(na * nb, |flat| {
            let exit = [axes[1].coord(flat / nb), axes[2].coord(flat % nb)];
            let c = conditional_raw(cfg, exit, None, nodes)?.normalize()?;
            Ok((0..axes[0].len())
                .map(|m| weight * c.at(axes[0].coord(m)))
                .collect())
        }),
        Layout::Cells => {
            let gl = GaussLegendre::new(cfg.cell_order);
            let step = axes[0].step();
            par::map_indices(na * nb, |flat| {
                let (ca, cb) = (
                    axes[1].cell_bounds(flat / nb),
                    axes[2].cell_bounds(flat % nb),
                );
                let area = (ca.1 - ca.0) * (cb.1 - cb.0);
                let mut acc = vec![0.0; axes[0].len()];
                for (b, wb) in gl.points(cb.0, cb.1) {
                    for (a, wa) in gl.points(ca.0, ca.1) {
                        let masses = conditional_bin_masses(cfg, [a, b], &axes[0], nodes)?;
                        for (slot, m) in acc.iter_mut().zip(masses) {
                            *slot += wa * wb * m;
                        }
                    }
                }
                Ok(acc
                    .into_iter()
                    .map(|v| weight * v / (area * step))
                    .collect())
            })
        }
    };
    let nn = axes[0].len();
    let mut values = vec![0.0; nn * na * nb];
    for (flat, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (m, v) in col.into_iter().enumerate() {
            values[m * na * nb + flat] = v;
        }
    }
    GridDensity3D::new(axes, values)
}

/// Unnormalized length density of the class (mass = `face_mass`). With the exit
/// point uniform on its face, each exit offset is a difference of two uniforms,
/// so the whole face is handled by one pass of the squared-offset pipeline.
pub fn length_marginal(cfg: &Case2Config, n_axis: Axis) -> Result<GridDensity1D> {
    let [xi, xj, xk] = cfg.sides();
    let nodes = cfg.carrier_nodes;
    let opts = TransformOptions {
        output_nodes: Some(nodes),
        ..TransformOptions::unchecked()
    };
    let offset = |extent: f64| -> Result<GridDensity1D> {
        let exit = transforms::uniform_density(0.0, extent, nodes)?;
        let d = transforms::convolve_diff(&exit, &exit, &opts)?;
        transforms::square_density(&d, transforms::square_axis(&d, nodes)?)
    };
    let si = offset(xi)?;
    let (sk, shift_density) = match cfg.class.kind() {
        PairKind::Opposing => (offset(xk)?, None),
        _ => {
            let xk_density = transforms::uniform_density(0.0, xk, nodes)?;
            let sk = transforms::square_density(
                &xk_density,
                transforms::square_axis(&xk_density, nodes)?,
            )?;
            // the exit elevation x'_j ~ U(0, X_j) enters squared as a third term
            let e = transforms::uniform_density(0.0, xj, nodes)?;
            (
                sk,
                Some(transforms::square_density(
                    &e,
                    transforms::square_axis(&e, nodes)?,
                )?),
            )
        }
    };
    // `S = s + last`, kept as two carriers so cell masses come straight from them
    let (s, last, shift) = match shift_density {
        None => (si, sk, xj * xj),
        Some(sj) => (transforms::convolve_sum(&si, &sk, &opts)?, sj, 0.0),
    };
    let carried = transforms::sum_interval_masses(&s, &last, &[0.0, s.hi() + last.hi()])?[0];
    if !(carried > 0.0) {
        return Err(Error::ZeroMass);
    }
    let density = match n_axis.layout() {
        Layout::Nodes => {
            let total = transforms::convolve_sum(&s, &last, &opts)?;
            transforms::sqrt_density(&total, n_axis, shift)?
        }
        Layout::Cells => {
            let mut edges: Vec<f64> = (0..n_axis.len()).map(|m| n_axis.cell_bounds(m).0).collect();
            edges.push(n_axis.hi());
            let s_edges: Vec<f64> = edges.iter().map(|n| (n * n - shift).max(0.0)).collect();
            let masses = transforms::sum_interval_masses(&s, &last, &s_edges)?;
            GridDensity1D::new(
                [n_axis],
                masses.into_iter().map(|m| m / n_axis.step()).collect(),
            )?
        }
    };
    Ok(density.scaled(cfg.face_mass() / carried))
}

/// Density `α + β x` of a folded in-plane offset on `[0, extent]`.
#[derive(Clone, Copy)]
struct LinearOffset {
    extent: f64,
    alpha: f64,
    beta: f64,
}

impl LinearOffset {
    /// `|x' − x|` for two independent uniforms on `[0, extent]`.
    fn folded_difference(extent: f64) -> Self {
        Self {
            extent,
            alpha: 2.0 / extent,
            beta: -2.0 / (extent * extent),
        }
    }

    fn uniform(extent: f64) -> Self {
        Self {
            extent,
            alpha: 1.0 / extent,
            beta: 0.0,
        }
    }
}

/// `∫ f1(ρ cos θ) f2(ρ sin θ) dθ` over the angles keeping both offsets in range,
/// so that `ρ · polar_angular(ρ)` is the density of `√(d1² + d2²)`.
fn polar_angular(o1: LinearOffset, o2: LinearOffset, rho: f64) -> f64 {
    if !(rho > 0.0) {
        return std::f64::consts::FRAC_PI_2 * o1.alpha * o2.alpha;
    }
    let t0 = if rho > o1.extent {
        (o1.extent / rho).acos()
    } else {
        0.0
    };
    let t1 = if rho > o2.extent {
        (o2.extent / rho).asin()
    } else {
        std::f64::consts::FRAC_PI_2
    };
    if t1 <= t0 {
        return 0.0;
    }
    let anti = |t: f64| {
        let (s, c) = t.sin_cos();
        o1.alpha * o2.alpha * t - o1.alpha * o2.beta * rho * c
            + o1.beta * o2.alpha * rho * s
            + 0.5 * o1.beta * o2.beta * rho * rho * s * s
    };
    anti(t1) - anti(t0)
}

/// Integral of `f` over `[lo, hi]` under `ρ = lo + (hi − lo)(1 − cos πt)/2`,
/// which smooths square-root behaviour at either end.
fn cosine_mapped(gl: &GaussLegendre, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let h = hi - lo;
    gl.integrate(0.0, 1.0, |t| {
        let (s, c) = (std::f64::consts::PI * t).sin_cos();
        f(lo + 0.5 * h * (1.0 - c)) * 0.5 * h * std::f64::consts::PI * s
    })
}

/// Length cell masses of the class (summing to `face_mass`) by exact polar
/// integration over the two in-plane offsets. The opposing face adds the
/// constant `X_j²`; an adjacent face adds `x'_j²` with `x'_j ~ U(0, X_j)`,
/// whose CDF is closed form. Needs a cell-layout axis.
pub fn length_marginal_polar(cfg: &Case2Config, n_axis: Axis) -> Result<GridDensity1D> {
    if n_axis.layout() != Layout::Cells {
        return Err(Error::InvalidGrid(
            "the polar marginal needs a cell-layout length axis".into(),
        ));
    }
    let [xi, xj, xk] = cfg.sides();
    let o1 = LinearOffset::folded_difference(xi);
    let (o2, opposing) = match cfg.class.kind() {
        PairKind::Opposing => (LinearOffset::folded_difference(xk), true),
        _ => (LinearOffset::uniform(xk), false),
    };
    let rmax = (xi * xi + xk * xk).sqrt();
    let gl = GaussLegendre::new(12);
    let radial = |rho: f64| rho * polar_angular(o1, o2, rho);
    let pieces = |extra: &[f64], lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let mut br: Vec<f64> = [xi, xk, rmax]
            .iter()
            .chain(extra)
            .copied()
            .filter(|b| *b > lo && *b < hi)
            .collect();
        br.push(lo);
        br.push(hi);
        br.sort_by(f64::total_cmp);
        br.dedup();
        br.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let masses: Vec<f64> = par::map_indices(n_axis.len(), |m| {
        let (a, b) = n_axis.cell_bounds(m);
        if opposing {
            let r = |n: f64| (n * n - xj * xj).max(0.0).sqrt().min(rmax);
            let (lo, hi) = (r(a), r(b));
            pieces(&[], lo, hi)
                .into_iter()
                .map(|(p, q)| cosine_mapped(&gl, p, q, radial))
                .sum()
        } else {
            // P(x'_j² < t)
            let cdf = |t: f64| (t.max(0.0).sqrt() / xj).min(1.0);
            let hi = b.min(rmax);
            let extra: Vec<f64> = [a, b]
                .iter()
                .flat_map(|n| [*n, (n * n - xj * xj).max(0.0).sqrt()])
                .collect();
            pieces(&extra, 0.0, hi)
                .into_iter()
                .map(|(p, q)| {
                    cosine_mapped(&gl, p, q, |rho| {
                        radial(rho) * (cdf(b * b - rho * rho) - cdf(a * a - rho * rho))
                    })
                })
                .sum()
        }
    });
    let scale = cfg.face_mass() / n_axis.step();
    GridDensity1D::new([n_axis], masses.into_iter().map(|m| m * scale).collect())
}

/// Unnormalized length density by Gauss quadrature of the weighted conditionals
/// over the exit face; a slower cross-check of [`length_marginal`].
pub fn length_marginal_by_exit_quadrature(
    cfg: &Case2Config,
    n_axis: Axis,
    panels: usize,
    order: usize,
) -> Result<GridDensity1D> {
    let [ea, eb] = cfg.class.exit_dims(&cfg.dims);
    let gl = GaussLegendre::new(order);
    let panel_points = |extent: f64| -> Vec<(f64, f64)> {
        (0..panels)
            .flat_map(|m| {
                gl.points(
                    extent * m as f64 / panels as f64,
                    extent * (m + 1) as f64 / panels as f64,
                )
                .collect::<Vec<_>>()
            })
            .collect()
    };
    let pts = [panel_points(ea), panel_points(eb)];
    let (pa, pb) = (&pts[0], &pts[1]);
    let weight = cfg.exit_weight();
    let parts = par::map_indices(pa.len() * pb.len(), |flat| -> Result<Vec<f64>> {
        let (a, wa) = pa[flat / pb.len()];
        let (b, wb) = pb[flat % pb.len()];
        let c = conditional_raw(cfg, [a, b], None, cfg.joint_carrier_nodes)?.normalize()?;
        Ok((0..n_axis.len())
            .map(|m| wa * wb * weight * c.at(n_axis.coord(m)))
            .collect())
    });
    let mut values = vec![0.0; n_axis.len()];
    for part in parts {
        for (slot, v) in values.iter_mut().zip(part?) {
            *slot += v;
        }
    }
    GridDensity1D::new([n_axis], values)
}
