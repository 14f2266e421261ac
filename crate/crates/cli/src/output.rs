//! Output directories: every file written is listed with its digest in a
//! manifest that also records the configuration and the modes in force.

use std::path::{Path, PathBuf};

use boxpath::case1::DirectionModel;
use boxpath::case2::{ExitWeighting, MarginalRoute};
use boxpath::combined::{ModeSelection, NormalizationMode};
use boxpath::density::{io, GridDensity};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Modelling choices behind the numbers in a directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modes {
    pub direction_model: DirectionModel,
    pub normalization_selection: ModeSelection,
    /// Mode actually used by the combined densities, when any were written.
    pub normalization_mode: Option<NormalizationMode>,
    pub exit_weighting: ExitWeighting,
    pub case2_marginal_route: MarginalRoute,
    pub jacobian_opposing: String,
    pub jacobian_adjacent: String,
    pub sqrt_transform: String,
}

impl Modes {
    pub fn new(cfg: &ExperimentConfig, normalization_mode: Option<NormalizationMode>) -> Self {
        Self {
            direction_model: cfg.direction,
            normalization_selection: cfg.normalization,
            normalization_mode,
            exit_weighting: cfg.weighting,
            case2_marginal_route: MarginalRoute::default(),
            jacobian_opposing: "n^2 q / (X_j r^2), X_j^2 inside the root".into(),
            jacobian_adjacent: "zeta_k^4 / n = |zeta_k|^3 / r".into(),
            sqrt_transform: "f_n(n) = f_S(n^2 - shift) * 2n".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub modes: Modes,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        read_json(&dir.join(MANIFEST))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    v
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root)
            .map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        self.write(name, &to_json(value))
    }

    pub fn write_csv<const D: usize>(
        &mut self,
        name: &str,
        g: &GridDensity<D>,
        columns: [&str; D],
        value: &str,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        io::write_grid_csv(&mut buf, g, columns, value)?;
        self.write(name, &buf)
    }

    pub fn write_grid<const D: usize>(
        &mut self,
        name: &str,
        g: &GridDensity<D>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        io::write_grid(&mut buf, g)?;
        self.write(name, &buf)
    }

    /// Writes the manifest last so that it lists every other file.
    pub fn finish(
        mut self,
        command: &str,
        cfg: &ExperimentConfig,
        modes: Modes,
    ) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            modes,
            files: std::mem::take(&mut self.files),
        };
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, to_json(&manifest))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(self.root)
    }
}

pub fn read_grid<const D: usize>(path: &Path) -> Result<GridDensity<D>, CliError> {
    let file =
        std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(io::read_grid(&mut std::io::BufReader::new(file))?)
}

/// CSV of shared `x` values and one column per series.
pub fn columns_csv(header: &[&str], x: &[f64], series: &[&[f64]]) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for (m, xv) in x.iter().enumerate() {
        out.push_str(&io::fmt_f64(*xv));
        for s in series {
            out.push(',');
            out.push_str(&io::fmt_f64(s[m]));
        }
        out.push('\n');
    }
    out.into_bytes()
}
