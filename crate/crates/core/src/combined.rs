//! Length densities over the whole box and over a single entry face, assembled
//! from the nine canonical face-pair marginals.
//!
//! Over the whole box each class is weighted by its number of ordered face
//! pairs times the entry probability of its entry face; conditioned on one
//! entry face the weights are the number of exit faces of each class.

use serde::{Deserialize, Serialize};

use crate::case1::{self, Case1Model, Case1Quadrature, DirectionModel};
use crate::case2::{self, Case2Config, ExitWeighting, MarginalRoute};
use crate::density::grid::{Axis, GridDensity1D};
use crate::error::{Error, Result};
use crate::geometry::{classify_pair, entry_probability, BoxDims, CanonicalClass, FaceId};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryCase {
    /// Uniform entry point, random inward direction.
    I,
    /// Uniform entry point, uniform exit point.
    II,
}

/// Whether component marginals enter the sum as sub-probability densities
/// (mass = exit-face probability) or normalized per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    SubProbability,
    NormalizedComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    /// Pick the mode whose weighted sum integrates to one.
    #[default]
    Auto,
    Fixed(NormalizationMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedOptions {
    /// Output length axis; `None` spans `[0, diagonal]` with `n_bins` cells.
    /// Cell axes carry exact cell averages, node axes point values.
    #[serde(default)]
    pub n_axis: Option<Axis>,
    pub n_bins: usize,
    #[serde(default)]
    pub direction: DirectionModel,
    #[serde(default)]
    pub quadrature: Case1Quadrature,
    #[serde(default)]
    pub weighting: ExitWeighting,
    #[serde(default)]
    pub case2_route: MarginalRoute,
    #[serde(default)]
    pub mode: ModeSelection,
}

impl Default for CombinedOptions {
    fn default() -> Self {
        Self {
            n_axis: None,
            n_bins: 160,
            direction: DirectionModel::default(),
            quadrature: Case1Quadrature::default(),
            weighting: ExitWeighting::default(),
            case2_route: MarginalRoute::default(),
            mode: ModeSelection::default(),
        }
    }
}

impl CombinedOptions {
    fn axis(&self, dims: &BoxDims) -> Result<Axis> {
        match self.n_axis {
            Some(a) => Ok(a),
            None => Axis::cells(0.0, dims.diagonal(), self.n_bins),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedTerm {
    pub class: CanonicalClass,
    /// Number of face pairs of this class in the sum.
    pub multiplicity: usize,
    /// Entry probability of the class's entry face (one for a single entry face).
    pub entry_probability: f64,
    /// Mass of the class's unnormalized length marginal.
    pub mass: f64,
    /// Factor applied to the marginal in the selected mode.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedPdf {
    pub case: TrajectoryCase,
    pub density: GridDensity1D,
    pub terms: Vec<CombinedTerm>,
    pub mode: NormalizationMode,
    /// Integral of `density` before any rescaling (the auto-selection criterion).
    pub mass: f64,
}

impl CombinedPdf {
    /// Share of the total carried by each term; sums to one.
    pub fn term_shares(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.terms.iter().map(|t| t.weight * t.mass).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / total).collect()
    }
}

/// Unnormalized length marginal of one class.
pub fn class_marginal(
    dims: BoxDims,
    class: CanonicalClass,
    case: TrajectoryCase,
    opts: &CombinedOptions,
) -> Result<GridDensity1D> {
    let axis = opts.axis(&dims)?;
    match case {
        TrajectoryCase::I => {
            let model = Case1Model::new(dims, class, opts.direction, opts.quadrature);
            case1::length_marginal(&model, axis)
        }
        TrajectoryCase::II => {
            let cfg = Case2Config::new(dims, class)?.with_weighting(opts.weighting);
            match opts.case2_route {
                MarginalRoute::Polar => case2::length_marginal_polar(&cfg, axis),
                MarginalRoute::Chain => case2::length_marginal(&cfg, axis),
            }
        }
    }
}

fn assemble(
    case: TrajectoryCase,
    slots: Vec<(CanonicalClass, usize, f64)>,
    dims: BoxDims,
    opts: &CombinedOptions,
) -> Result<CombinedPdf> {
    let marginals = par::map_indices(slots.len(), |m| {
        class_marginal(dims, slots[m].0, case, opts)
    });
    let marginals: Vec<GridDensity1D> = marginals.into_iter().collect::<Result<_>>()?;
    let masses: Vec<f64> = marginals.iter().map(|g| g.integrate()).collect();
    if masses.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::ZeroMass);
    }
    let build = |mode: NormalizationMode| -> Result<(GridDensity1D, Vec<CombinedTerm>)> {
        let mut total = GridDensity1D::zeros([opts.axis(&dims)?]);
        let mut terms = Vec::with_capacity(slots.len());
        for ((&(class, multiplicity, p), g), &mass) in slots.iter().zip(&marginals).zip(&masses) {
            let mut weight = multiplicity as f64 * p;
            if mode == NormalizationMode::NormalizedComponents {
                weight /= mass;
            }
            total.add_scaled(g, weight)?;
            terms.push(CombinedTerm {
                class,
                multiplicity,
                entry_probability: p,
                mass,
                weight,
            });
        }
        Ok((total, terms))
    };
    let mode = match opts.mode {
        ModeSelection::Fixed(m) => m,
        ModeSelection::Auto => {
            let sub = build(NormalizationMode::SubProbability)?.0.integrate();
            let norm = build(NormalizationMode::NormalizedComponents)?
                .0
                .integrate();
            if (sub - 1.0).abs() <= (norm - 1.0).abs() {
                NormalizationMode::SubProbability
            } else {
                NormalizationMode::NormalizedComponents
            }
        }
    };
    let (density, terms) = build(mode)?;
    let mass = density.integrate();
    Ok(CombinedPdf {
        case,
        density,
        terms,
        mode,
        mass,
    })
}

/// Length density over all entry faces: opposing classes carry two ordered
/// face pairs, adjacent classes four, each weighted by the entry probability.
pub fn combined_pdf(
    dims: BoxDims,
    case: TrajectoryCase,
    opts: &CombinedOptions,
) -> Result<CombinedPdf> {
    let slots = CanonicalClass::traversing()
        .into_iter()
        .map(|c| {
            let (entry, _) = c.representative();
            (c, c.multiplicity(), entry_probability(&dims, entry))
        })
        .collect();
    assemble(case, slots, dims, opts)
}

pub fn combined_pdf_case1(dims: BoxDims, opts: &CombinedOptions) -> Result<CombinedPdf> {
    combined_pdf(dims, TrajectoryCase::I, opts)
}

pub fn combined_pdf_case2(dims: BoxDims, opts: &CombinedOptions) -> Result<CombinedPdf> {
    combined_pdf(dims, TrajectoryCase::II, opts)
}

/// Length density given entry through `entry`: the opposite face plus the four
/// adjacent faces.
pub fn single_face_combined(
    dims: BoxDims,
    entry: FaceId,
    case: TrajectoryCase,
    opts: &CombinedOptions,
) -> Result<CombinedPdf> {
    let mut slots: Vec<(CanonicalClass, usize, f64)> = Vec::new();
    for exit in FaceId::ALL.into_iter().filter(|f| *f != entry) {
        let class = classify_pair(entry, exit).class;
        match slots.iter_mut().find(|s| s.0 == class) {
            Some(slot) => slot.1 += 1,
            None => slots.push((class, 1, 1.0)),
        }
    }
    assemble(case, slots, dims, opts)
}

/// First moment of the normalized density.
pub fn expected_length(pdf: &CombinedPdf) -> Result<f64> {
    pdf.density.mean()
}
