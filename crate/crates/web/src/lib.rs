//! Browser bindings: analytic and sampled length densities for trajectories
//! entering one face of a box, and the exit density of a length band.

use boxpath::case2::{self, Case2Config};
use boxpath::combined::{self, CombinedOptions, TrajectoryCase};
use boxpath::density::Axis;
use boxpath::montecarlo::{self, CollectSpec, SampleConfig, SamplerKind};
use boxpath::{BoxDims, CanonicalClass, FaceId};
use wasm_bindgen::prelude::*;

/// Entries are uniform on this face (an `x2` face, normal to the second side).
const ENTRY: FaceId = FaceId::ALL[2];

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn dims(x1: f64, x2: f64, x3: f64) -> Result<BoxDims, JsError> {
    BoxDims::new(x1, x2, x3).map_err(err)
}

fn case(name: &str) -> Result<TrajectoryCase, JsError> {
    match name {
        "i" => Ok(TrajectoryCase::I),
        "ii" => Ok(TrajectoryCase::II),
        _ => Err(JsError::new("case must be \"i\" or \"ii\"")),
    }
}

/// Box diagonal: the length axis of the densities below spans `[0, diagonal]`.
#[wasm_bindgen]
pub fn diagonal(x1: f64, x2: f64, x3: f64) -> Result<f64, JsError> {
    Ok(dims(x1, x2, x3)?.diagonal())
}

/// Analytic length density on `bins` equal cells of `[0, diagonal]`.
#[wasm_bindgen]
pub fn single_face_pdf(
    x1: f64,
    x2: f64,
    x3: f64,
    case_name: &str,
    bins: usize,
) -> Result<Vec<f64>, JsError> {
    let opts = CombinedOptions {
        n_bins: bins,
        ..Default::default()
    };
    let pdf = combined::single_face_combined(dims(x1, x2, x3)?, ENTRY, case(case_name)?, &opts)
        .map_err(err)?;
    Ok(pdf.density.values().to_vec())
}

/// Sampled length density on the same cells as [`single_face_pdf`].
#[wasm_bindgen]
pub fn sample_lengths(
    x1: f64,
    x2: f64,
    x3: f64,
    case_name: &str,
    seed: u64,
    samples: u32,
    bins: usize,
) -> Result<Vec<f64>, JsError> {
    let kind = match case(case_name)? {
        TrajectoryCase::I => SamplerKind::Case1 {
            direction: Default::default(),
        },
        TrajectoryCase::II => SamplerKind::Case2,
    };
    let cfg =
        SampleConfig::new(dims(x1, x2, x3)?, kind, seed, samples as u64).with_entry_face(ENTRY);
    let run = montecarlo::sample(
        &cfg,
        &CollectSpec {
            length_bins: Some(bins),
            ..Default::default()
        },
    )
    .map_err(err)?;
    Ok(run
        .lengths()
        .expect("length histogram requested")
        .to_density()
        .map_err(err)?
        .values()
        .to_vec())
}

/// Uniform-endpoint exit density on the face opposite the entry face for
/// lengths in `[lo, hi]`, row-major on a `grid` x `grid` cell map.
#[wasm_bindgen]
pub fn band_map(
    x1: f64,
    x2: f64,
    x3: f64,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<Vec<f64>, JsError> {
    let d = dims(x1, x2, x3)?;
    let class = CanonicalClass::Opposing { j: 1 };
    let [ea, eb] = class.exit_dims(&d);
    let axes = [
        Axis::cells(lo, hi, 1).map_err(err)?,
        Axis::cells(0.0, ea, grid).map_err(err)?,
        Axis::cells(0.0, eb, grid).map_err(err)?,
    ];
    let cfg = Case2Config::new(d, class)
        .map_err(err)?
        .with_joint_axes(axes);
    let joint = case2::joint_pdf_case2(&cfg).map_err(err)?;
    Ok(joint.restrict_band(lo, hi).map_err(err)?.values().to_vec())
}
