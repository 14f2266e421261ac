use boxpath::combined::{self, CombinedOptions, CombinedPdf, NormalizationMode, TrajectoryCase};
use boxpath::density::{self, Axis};
use boxpath::geometry::entry_probability;
use boxpath::montecarlo::{self, CollectSpec, SampleConfig, SamplerKind};
use boxpath::{BoxDims, CanonicalClass, FaceId, Side};

fn presets() -> [BoxDims; 3] {
    [
        BoxDims::new(1.0, 0.1, 1.0).unwrap(),
        BoxDims::cube(),
        BoxDims::new(1.0, 2.0, 1.0).unwrap(),
    ]
}

fn opts() -> CombinedOptions {
    CombinedOptions::default()
}

#[test]
fn cube_case1_support_and_bookkeeping() {
    let cube = BoxDims::cube();
    let pdf = combined::combined_pdf_case1(cube, &opts()).unwrap();
    let ax = pdf.density.axis0();
    assert_eq!((ax.lo(), ax.hi()), (0.0, 3f64.sqrt()));
    let last = *pdf.density.values().last().unwrap();
    let peak = pdf.density.values().iter().copied().fold(0.0, f64::max);
    assert!(
        last < 1e-3 * peak,
        "density at the diagonal {last} vs peak {peak}"
    );
    assert!((pdf.mass - 1.0).abs() < 0.02 && pdf.mode == NormalizationMode::SubProbability);

    assert_eq!(pdf.terms.len(), 9);
    assert!(pdf
        .terms
        .iter()
        .all(|t| (t.entry_probability - 1.0 / 6.0).abs() < 1e-15));
    assert_eq!(pdf.terms.iter().map(|t| t.multiplicity).sum::<usize>(), 30);
    let shares: f64 = pdf.term_shares().iter().sum();
    assert!((shares - 1.0).abs() < 1e-12);
}

#[test]
fn combined_is_the_weighted_sum_of_its_terms() {
    let dims = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    for case in [TrajectoryCase::I, TrajectoryCase::II] {
        let pdf = combined::combined_pdf(dims, case, &opts()).unwrap();
        let expected: f64 = pdf.terms.iter().map(|t| t.weight * t.mass).sum();
        assert!((pdf.mass - expected).abs() < 1e-9);
        assert!((pdf.mass - 1.0).abs() < 0.02, "{case:?} mass {}", pdf.mass);
        for t in &pdf.terms {
            let (entry, _) = t.class.representative();
            assert!(
                (t.weight - t.multiplicity as f64 * entry_probability(&dims, entry)).abs() < 1e-15
            );
            let marginal = combined::class_marginal(dims, t.class, case, &opts()).unwrap();
            assert!((marginal.integrate() - t.mass).abs() < 1e-12);
        }
    }
}

#[test]
fn short_box_concentrates_at_small_lengths() {
    let axis = Axis::cells(0.0, 3f64.sqrt(), 160).unwrap();
    let o = CombinedOptions {
        n_axis: Some(axis),
        ..opts()
    };
    let short = combined::combined_pdf_case2(presets()[0], &o)
        .unwrap()
        .density;
    let cube = combined::combined_pdf_case2(presets()[1], &o)
        .unwrap()
        .density;
    for m in 1..40 {
        let x = m as f64 * 0.04;
        assert!(
            short.cdf(x) >= cube.cdf(x) - 1e-9,
            "CDF at {x}: short {} cube {}",
            short.cdf(x),
            cube.cdf(x)
        );
    }
    let mean = |dims: BoxDims, seed: u64| {
        let run = montecarlo::sample(
            &SampleConfig::new(dims, SamplerKind::Case2, seed, 1_000_000),
            &CollectSpec {
                length_bins: Some(16),
                ..Default::default()
            },
        )
        .unwrap();
        run.lengths().unwrap().mean().unwrap()
    };
    assert!(mean(presets()[0], 31) < mean(presets()[1], 32));
}

#[test]
fn cube_single_face_is_the_same_for_every_face() {
    let cube = BoxDims::cube();
    for case in [TrajectoryCase::I, TrajectoryCase::II] {
        let reference =
            combined::single_face_combined(cube, FaceId::new(0, Side::Low), case, &opts()).unwrap();
        for face in FaceId::ALL {
            let pdf = combined::single_face_combined(cube, face, case, &opts()).unwrap();
            assert!(
                density::l1_distance(&reference.density, &pdf.density) < 1e-12,
                "{case:?} {face}"
            );
        }
        assert_eq!(
            reference
                .terms
                .iter()
                .map(|t| t.multiplicity)
                .sum::<usize>(),
            5
        );
    }
}

#[test]
fn expectation_of_a_narrow_density() {
    let density = density::narrow_density(1.0, 1e-3, 65).unwrap();
    let pdf = CombinedPdf {
        case: TrajectoryCase::I,
        density,
        terms: vec![],
        mode: NormalizationMode::SubProbability,
        mass: 1.0,
    };
    assert!((combined::expected_length(&pdf).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn single_face_expectation_matches_sampling() {
    let cube = BoxDims::cube();
    let entry = FaceId::new(1, Side::Low);
    let pdf = combined::single_face_combined(cube, entry, TrajectoryCase::II, &opts()).unwrap();
    let analytic = combined::expected_length(&pdf).unwrap();
    let cfg = SampleConfig::new(cube, SamplerKind::Case2, 33, 2_000_000).with_entry_face(entry);
    let run = montecarlo::sample(
        &cfg,
        &CollectSpec {
            length_bins: Some(16),
            ..Default::default()
        },
    )
    .unwrap();
    let sampled = run.lengths().unwrap().mean().unwrap();
    assert!(
        (analytic - sampled).abs() <= 0.005,
        "analytic {analytic}, MC {sampled}"
    );
}

#[test]
fn expectation_scales_with_the_box() {
    let dims = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    for case in [TrajectoryCase::I, TrajectoryCase::II] {
        let base = combined::expected_length(&combined::combined_pdf(dims, case, &opts()).unwrap())
            .unwrap();
        let big = combined::expected_length(
            &combined::combined_pdf(dims.scaled(2.5).unwrap(), case, &opts()).unwrap(),
        )
        .unwrap();
        assert!(
            (big - 2.5 * base).abs() < 1e-9 * big,
            "{case:?}: {base} -> {big}"
        );
    }
}

#[test]
fn relabelling_the_box_changes_nothing() {
    let dims = BoxDims::new(0.6, 1.3, 2.0).unwrap();
    let permuted = dims.permuted([2, 0, 1]);
    for case in [TrajectoryCase::I, TrajectoryCase::II] {
        let a = combined::combined_pdf(dims, case, &opts()).unwrap();
        let b = combined::combined_pdf(permuted, case, &opts()).unwrap();
        let l1 = density::l1_distance(&a.density, &b.density);
        assert!(l1 < 1e-9, "{case:?} L1 {l1}");
        let mut ca: Vec<CanonicalClass> = a.terms.iter().map(|t| t.class).collect();
        ca.sort();
        assert_eq!(ca, CanonicalClass::traversing().to_vec());
    }
}

#[test]
fn enlarging_a_side_never_shortens_the_mean() {
    for case in [TrajectoryCase::I, TrajectoryCase::II] {
        let means: Vec<f64> = presets()
            .iter()
            .map(|d| {
                combined::expected_length(&combined::combined_pdf(*d, case, &opts()).unwrap())
                    .unwrap()
            })
            .collect();
        assert!(
            means[0] < means[1] && means[1] < means[2],
            "{case:?}: {means:?}"
        );
    }
}

#[test]
fn fixed_normalized_components_integrate_to_one() {
    let dims = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    let fixed = CombinedOptions {
        mode: combined::ModeSelection::Fixed(NormalizationMode::NormalizedComponents),
        ..opts()
    };
    let pdf = combined::combined_pdf(dims, TrajectoryCase::I, &fixed).unwrap();
    assert_eq!(pdf.mode, NormalizationMode::NormalizedComponents);
    // weights are then the raw pair weights, which sum to five per entry face
    let total: f64 = pdf.terms.iter().map(|t| t.weight * t.mass).sum();
    assert!((total - 5.0).abs() < 1e-9 && (pdf.mass - 5.0).abs() < 1e-9);
}
