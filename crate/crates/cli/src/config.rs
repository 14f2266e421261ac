//! Experiment configuration: a JSON file, optionally a preset, with command-line
//! flags applied on top.

use std::path::{Path, PathBuf};

use boxpath::case1::DirectionModel;
use boxpath::case2::ExitWeighting;
use boxpath::combined::{CombinedOptions, ModeSelection, TrajectoryCase};
use boxpath::montecarlo::{HistogramSpec, SampleConfig, SamplerKind};
use boxpath::{BoxDims, FaceId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSelector {
    I,
    Ii,
    Baseline,
}

/// Everything that determines a run. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: [f64; 3],
    pub case: CaseSelector,
    pub direction: DirectionModel,
    pub seed: u64,
    pub samples: u64,
    /// Face label such as `x2lo`; entries are then uniform on that face only.
    pub entry_face: Option<String>,
    pub histogram: HistogramSpec,
    /// Cells of the length axis `[0, diagonal]` for combined densities and length histograms.
    pub length_bins: usize,
    pub weighting: ExitWeighting,
    pub normalization: ModeSelection,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: [1.0, 1.0, 1.0],
            case: CaseSelector::I,
            direction: DirectionModel::default(),
            seed: 42,
            samples: 1_000_000,
            entry_face: None,
            histogram: HistogramSpec::default(),
            length_bins: 160,
            weighting: ExitWeighting::default(),
            normalization: ModeSelection::default(),
            output: None,
            workers: None,
        }
    }
}

pub const PRESETS: [(&str, [f64; 3]); 3] = [
    ("short", [1.0, 0.1, 1.0]),
    ("cubic", [1.0, 1.0, 1.0]),
    ("long", [1.0, 2.0, 1.0]),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, dims) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown preset {name:?} (expected short, cubic or long)"
        ))
    })?;
    Ok(ExperimentConfig {
        dims: *dims,
        output: Some(PathBuf::from(format!("out/{name}"))),
        ..Default::default()
    })
}

pub fn parse_face(label: &str) -> Result<FaceId, CliError> {
    FaceId::ALL
        .into_iter()
        .find(|f| f.label() == label)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "unknown face {label:?} (expected x1lo, x1hi, ..., x3hi)"
            ))
        })
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dims: Option<Vec<f64>>,
    pub case: Option<CaseSelector>,
    pub direction: Option<DirectionModel>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub entry_face: Option<String>,
    pub length_bins: Option<usize>,
    pub weighting: Option<ExitWeighting>,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) -> Result<(), CliError> {
        if let Some(d) = o.dims {
            self.dims = d.try_into().map_err(|d: Vec<f64>| {
                CliError::Usage(format!("--dims takes three sides, got {}", d.len()))
            })?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        take!(case, direction, seed, samples, length_bins, weighting);
        if o.entry_face.is_some() {
            self.entry_face = o.entry_face;
        }
        if o.output.is_some() {
            self.output = o.output;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        Ok(())
    }

    pub fn box_dims(&self) -> Result<BoxDims, CliError> {
        Ok(BoxDims::new(self.dims[0], self.dims[1], self.dims[2])?)
    }

    pub fn entry(&self) -> Result<Option<FaceId>, CliError> {
        self.entry_face.as_deref().map(parse_face).transpose()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.box_dims()?;
        self.entry()?;
        if self.length_bins == 0
            || self.histogram.n_bins == 0
            || self.histogram.a_bins == 0
            || self.histogram.b_bins == 0
        {
            return Err(CliError::Usage("bin counts must be positive".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("boxpath-out"))
    }

    /// SHA-256 of the data-determining fields (output location and worker count excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.workers = None;
        hex::encode(Sha256::digest(
            serde_json::to_vec(&c).expect("config serializes"),
        ))
    }

    pub fn trajectory_case(&self) -> Result<TrajectoryCase, CliError> {
        match self.case {
            CaseSelector::I => Ok(TrajectoryCase::I),
            CaseSelector::Ii => Ok(TrajectoryCase::II),
            CaseSelector::Baseline => Err(CliError::Usage(
                "the baseline sampler has no analytic density; use case i or ii".into(),
            )),
        }
    }

    pub fn sampler(&self) -> SamplerKind {
        match self.case {
            CaseSelector::I => SamplerKind::Case1 {
                direction: self.direction,
            },
            CaseSelector::Ii => SamplerKind::Case2,
            CaseSelector::Baseline => SamplerKind::Baseline,
        }
    }

    pub fn sample_config(&self) -> Result<SampleConfig, CliError> {
        if self.samples == 0 {
            return Err(CliError::Usage("samples must be positive".into()));
        }
        let mut cfg = SampleConfig::new(self.box_dims()?, self.sampler(), self.seed, self.samples);
        cfg.entry_face = self.entry()?;
        Ok(cfg)
    }

    pub fn combined_options(&self) -> CombinedOptions {
        CombinedOptions {
            n_bins: self.length_bins,
            direction: self.direction,
            weighting: self.weighting,
            mode: self.normalization,
            ..Default::default()
        }
    }
}

/// Parses a flag value spelled as in the JSON file (`ball_rejection`, `per_face`, ...).
pub fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}
