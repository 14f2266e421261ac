use std::path::{Path, PathBuf};

use boxpath::case1::{self, Case1Model, Case1Quadrature};
use boxpath::case2::{self, Case2Config};
use boxpath::combined::{self, NormalizationMode, TrajectoryCase};
use boxpath::compare::{self, elevation_profile, ComparisonReport, ExitCell, LocationSource};
use boxpath::density::{io::fmt_f64, Axis, GridDensity1D, GridDensity2D, GridDensity3D};
use boxpath::montecarlo::{self, CollectSpec, JointHistogram, SampleRun, SamplerKind};
use boxpath::{BoxDims, CanonicalClass, FaceId, Side};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, PRESETS};
use crate::error::CliError;
use crate::output::{columns_csv, read_grid, read_json, Manifest, Modes, OutputDir};
use crate::svg;

pub const RUN_FILE: &str = "run.json";

fn joint_file(class: CanonicalClass) -> String {
    format!("joint_{}.bxgd", class.label())
}

fn single_face_file(face: FaceId) -> String {
    format!("single_face_{}.bxgd", face.label())
}

fn class_joint(
    cfg: &ExperimentConfig,
    dims: BoxDims,
    class: CanonicalClass,
    case: TrajectoryCase,
    axes: [Axis; 3],
) -> Result<GridDensity3D, CliError> {
    Ok(match case {
        TrajectoryCase::I => case1::joint_on_axes(
            &Case1Model::new(dims, class, cfg.direction, Case1Quadrature::default()),
            axes,
        )?,
        TrajectoryCase::II => case2::joint_pdf_case2(
            &Case2Config::new(dims, class)?
                .with_joint_axes(axes)
                .with_weighting(cfg.weighting),
        )?,
    })
}

/// Joint densities of the nine classes on the histogram bins, the combined
/// length density, and the single-face length densities.
pub fn analytic(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let dims = cfg.box_dims()?;
    let case = cfg.trajectory_case()?;
    let mut out = OutputDir::create(cfg.output_dir())?;
    for class in CanonicalClass::traversing() {
        let g = class_joint(cfg, dims, class, case, cfg.histogram.axes(&dims, class)?)?;
        out.write_grid(&joint_file(class), &g)?;
        out.write_csv(
            &format!("joint_{}.csv", class.label()),
            &g,
            ["n", "a", "b"],
            "density",
        )?;
    }
    let opts = cfg.combined_options();
    let pdf = combined::combined_pdf(dims, case, &opts)?;
    out.write_grid("combined.bxgd", &pdf.density)?;
    out.write_csv("combined.csv", &pdf.density, ["n"], "density")?;
    out.write_json("combined_terms.json", &pdf.terms)?;
    // one face per axis: the two faces of an axis give the same density
    for axis in 0..3 {
        let face = FaceId::new(axis, Side::Low);
        let sf = combined::single_face_combined(dims, face, case, &opts)?;
        out.write_grid(&single_face_file(face), &sf.density)?;
        out.write_csv(
            &format!("single_face_{}.csv", face.label()),
            &sf.density,
            ["n"],
            "density",
        )?;
    }
    out.finish("analytic", cfg, Modes::new(cfg, Some(pdf.mode)))
}

fn counts_grid(h: &JointHistogram) -> Result<GridDensity3D, CliError> {
    Ok(GridDensity3D::new(
        h.axes,
        h.counts.iter().map(|c| *c as f64).collect(),
    )?)
}

/// Monte Carlo histograms: the full run, the length density, and the counts
/// of each class folded over its face pairs.
pub fn sample(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    let sc = cfg.sample_config()?;
    let spec = CollectSpec {
        joint: Some(cfg.histogram),
        length_bins: Some(cfg.length_bins),
        probes: vec![],
    };
    let run = montecarlo::sample(&sc, &spec)?;
    let mut out = OutputDir::create(cfg.output_dir())?;
    out.write_json(RUN_FILE, &run)?;
    let lengths = run
        .lengths()
        .expect("length histogram requested")
        .to_density()?;
    out.write_csv("lengths.csv", &lengths, ["n"], "density")?;
    let set = run.joint().expect("joint histograms requested");
    for class in CanonicalClass::traversing() {
        out.write_csv(
            &format!("hist_{}.csv", class.label()),
            &counts_grid(&set.fold(class)?)?,
            ["n", "a", "b"],
            "count",
        )?;
    }
    out.finish("sample", cfg, Modes::new(cfg, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub entry: String,
    pub exit: String,
    pub class: String,
    pub samples: u64,
    pub l1_distance: f64,
    pub chi_square_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub samples: u64,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub analytic_config_hash: String,
    pub sample_config_hash: String,
    pub analytic_case: String,
    pub sampler: SamplerKind,
    /// Each class's histogram folded over its face pairs.
    pub classes: Vec<ClassReport>,
    pub pairs: Vec<PairReport>,
    pub worst_pair: Option<PairReport>,
    pub worst_class_l1: f64,
    /// Length histogram against the combined density (single-face density for single-face runs).
    pub lengths: ComparisonReport,
}

pub fn load_run(dir: &Path) -> Result<(Manifest, SampleRun), CliError> {
    let m = Manifest::load(dir)?;
    if m.command != "sample" {
        return Err(CliError::Usage(format!(
            "{} holds `{}` output, not a sample run",
            dir.display(),
            m.command
        )));
    }
    Ok((m, read_json(&dir.join(RUN_FILE))?))
}

pub fn compare(analytic_dir: &Path, sample_dir: &Path) -> Result<CompareReport, CliError> {
    let am = Manifest::load(analytic_dir)?;
    if am.command != "analytic" {
        return Err(CliError::Usage(format!(
            "{} holds `{}` output, not analytic densities",
            analytic_dir.display(),
            am.command
        )));
    }
    let (sm, run) = load_run(sample_dir)?;
    if am.config.dims != sm.config.dims {
        return Err(CliError::Usage(format!(
            "box {:?} of the analytic run differs from box {:?} of the sample",
            am.config.dims, sm.config.dims
        )));
    }
    let set = run
        .joint()
        .ok_or_else(|| CliError::Usage("sample run has no joint histograms".into()))?;
    let mut classes = Vec::new();
    let mut pairs = Vec::new();
    for class in CanonicalClass::traversing() {
        let pdf: GridDensity3D = read_grid(&analytic_dir.join(joint_file(class)))?;
        let folded = set.fold(class)?;
        if folded.in_range() > 0 {
            classes.push(ClassReport {
                class: class.label(),
                samples: folded.in_range(),
                report: compare::compare(&folded, &pdf)?,
            });
        }
        for hist in set
            .pairs
            .iter()
            .filter(|p| p.class == class && p.in_range() > 0)
        {
            let r = compare::compare(hist, &pdf)?;
            pairs.push(PairReport {
                entry: hist.entry_face.label(),
                exit: hist.exit_face.label(),
                class: class.label(),
                samples: hist.in_range(),
                l1_distance: r.l1_distance,
                chi_square_p: r.chi_square.p_value,
            });
        }
    }
    let lengths_file = match run.config.entry_face {
        Some(f) => single_face_file(FaceId::new(f.axis(), Side::Low)),
        None => "combined.bxgd".into(),
    };
    let pdf: GridDensity1D = read_grid(&analytic_dir.join(lengths_file))?;
    let lengths = compare::compare_lengths(
        run.lengths()
            .ok_or_else(|| CliError::Usage("sample run has no length histogram".into()))?,
        &pdf,
    )?;
    let worst_pair = pairs
        .iter()
        .max_by(|a, b| a.l1_distance.total_cmp(&b.l1_distance))
        .cloned();
    let worst_class_l1 = classes
        .iter()
        .map(|c| c.report.l1_distance)
        .fold(0.0, f64::max);
    Ok(CompareReport {
        analytic_config_hash: am.config_hash,
        sample_config_hash: sm.config_hash,
        analytic_case: format!("{:?}", am.config.case).to_lowercase(),
        sampler: run.config.kind,
        classes,
        pairs,
        worst_pair,
        worst_class_l1,
        lengths,
    })
}

fn mc_column(kind: SamplerKind) -> &'static str {
    match kind {
        SamplerKind::Case1 { .. } => "mc_case_i",
        SamplerKind::Case2 => "mc_case_ii",
        SamplerKind::Baseline => "mc_baseline",
    }
}

fn write_profile(
    out: &mut OutputDir,
    stem: &str,
    title: &str,
    p: &GridDensity2D,
) -> Result<(), CliError> {
    out.write_csv(&format!("{stem}.csv"), p, ["n", "elevation"], "density")?;
    let [x, y] = *p.axes();
    out.write(
        &format!("{stem}.svg"),
        svg::heatmap(title, "length n", "elevation", &x, &y, p.values()).as_bytes(),
    )
}

pub const FIGURES: [u32; 7] = [3, 4, 5, 6, 7, 8, 9];

/// Figure data products. Figures 3 to 6 use the unit cube; 7, 8 and 9 the
/// short, cubic and long boxes entered through an `x2` face. Sample runs with
/// a matching box (and entry face, for 7 to 9) add Monte Carlo overlays.
pub fn figures(
    cfg: &ExperimentConfig,
    figs: &[u32],
    sample_dirs: &[PathBuf],
) -> Result<PathBuf, CliError> {
    cfg.validate()?;
    if let Some(f) = figs.iter().find(|f| !FIGURES.contains(f)) {
        return Err(CliError::Usage(format!(
            "no figure {f} (figures 3 to 9 exist)"
        )));
    }
    let runs = sample_dirs
        .iter()
        .map(|d| load_run(d))
        .collect::<Result<Vec<_>, _>>()?;
    let cube = BoxDims::cube();
    let opp = CanonicalClass::Opposing { j: 1 };
    let adj = CanonicalClass::Adjacent { j: 1, k: 0 };
    let mut out = OutputDir::create(cfg.output_dir())?;
    let mut mode: Option<NormalizationMode> = None;
    for &fig in figs {
        match fig {
            3 => {
                let (lo, hi) = (1.17, 1.22);
                let axes = [
                    Axis::cells(lo, hi, 1)?,
                    Axis::cells(0.0, 1.0, 24)?,
                    Axis::cells(0.0, 1.0, 24)?,
                ];
                let map =
                    class_joint(cfg, cube, opp, TrajectoryCase::II, axes)?.restrict_band(lo, hi)?;
                let face = opp.representative().1.label();
                let mut csv = String::from("face,a,b,density\n");
                for (flat, v) in map.values().iter().enumerate() {
                    let [a, b] = map.coord_of(flat);
                    csv.push_str(&format!(
                        "{face},{},{},{}\n",
                        fmt_f64(a),
                        fmt_f64(b),
                        fmt_f64(*v)
                    ));
                }
                out.write("fig3.csv", csv.as_bytes())?;
                let [x, y] = *map.axes();
                let title = format!(
                    "Exit density on the opposing face, {lo} <= n <= {hi} (uniform endpoints)"
                );
                out.write(
                    "fig3.svg",
                    svg::heatmap(&title, "a", "b", &x, &y, map.values()).as_bytes(),
                )?;
            }
            4 | 5 => {
                let case = if fig == 4 {
                    TrajectoryCase::I
                } else {
                    TrajectoryCase::II
                };
                let axes = [
                    Axis::cells(0.0, cube.diagonal(), 40)?,
                    Axis::cells(0.0, 1.0, 8)?,
                    Axis::cells(0.0, 1.0, 20)?,
                ];
                let p = elevation_profile(&class_joint(cfg, cube, adj, case, axes)?)?;
                let name = if fig == 4 {
                    "random direction"
                } else {
                    "uniform endpoints"
                };
                write_profile(
                    &mut out,
                    &format!("fig{fig}"),
                    &format!("Length against elevation on an adjacent face ({name})"),
                    &p,
                )?;
                let matching = runs.iter().find(|(m, r)| {
                    m.config.dims == cube.as_array()
                        && matches!(
                            (case, r.config.kind),
                            (TrajectoryCase::I, SamplerKind::Case1 { .. })
                                | (TrajectoryCase::II, SamplerKind::Case2)
                        )
                });
                if let Some((_, run)) = matching {
                    if let Some(set) = run.joint() {
                        let p = elevation_profile(&set.fold(adj)?)?;
                        write_profile(
                            &mut out,
                            &format!("fig{fig}_mc"),
                            &format!("Sampled length against elevation ({name})"),
                            &p,
                        )?;
                    }
                }
            }
            6 => {
                let cell = ExitCell::around(&cube, opp, [1.0, 0.25], 0.003, 0.003)?;
                let n_axis = Axis::cells(1.0, cube.diagonal(), 48)?;
                let c2 = Case2Config::new(cube, opp)?.with_weighting(cfg.weighting);
                let pdf = compare::location_pdf(LocationSource::Case2(&c2, n_axis), cell)?;
                let x = n_axis.coords();
                out.write(
                    "fig6.csv",
                    &columns_csv(&["n", "density"], &x, &[pdf.values()]),
                )?;
                let title = "Length density at exit (1, 0.25) on the opposing face";
                out.write(
                    "fig6.svg",
                    svg::lines(
                        title,
                        "length n",
                        "density",
                        &x,
                        &[("uniform endpoints", pdf.values())],
                    )
                    .as_bytes(),
                )?;
            }
            _ => {
                let (name, d) = PRESETS[(fig - 7) as usize];
                let dims = BoxDims::new(d[0], d[1], d[2])?;
                let entry = FaceId::new(1, Side::Low);
                let opts = cfg.combined_options();
                let p1 = combined::single_face_combined(dims, entry, TrajectoryCase::I, &opts)?;
                let p2 = combined::single_face_combined(dims, entry, TrajectoryCase::II, &opts)?;
                mode = Some(p2.mode);
                let n_axis = p1.density.axes()[0];
                let mut header = vec!["n", "case_i", "case_ii"];
                let mut cols: Vec<Vec<f64>> =
                    vec![p1.density.values().to_vec(), p2.density.values().to_vec()];
                for (m, run) in &runs {
                    let single = run.config.entry_face.is_some_and(|f| f.axis() == 1);
                    if m.config.dims != d || !single || header.contains(&mc_column(run.config.kind))
                    {
                        continue;
                    }
                    match run.lengths() {
                        Some(h) if h.axis == n_axis => {
                            header.push(mc_column(run.config.kind));
                            cols.push(h.to_density()?.values().to_vec());
                        }
                        _ => eprintln!(
                            "note: figure {fig}: a sample run with other length bins was skipped"
                        ),
                    }
                }
                let x = n_axis.coords();
                let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
                out.write(&format!("fig{fig}.csv"), &columns_csv(&header, &x, &refs))?;
                let series: Vec<(&str, &[f64])> = header[1..]
                    .iter()
                    .copied()
                    .zip(refs.iter().copied())
                    .collect();
                let title = format!("Length density, {name} box {d:?}, entry through one x2 face");
                out.write(
                    &format!("fig{fig}.svg"),
                    svg::lines(&title, "length n", "density", &x, &series).as_bytes(),
                )?;
            }
        }
    }
    out.finish("figures", cfg, Modes::new(cfg, mode))
}
