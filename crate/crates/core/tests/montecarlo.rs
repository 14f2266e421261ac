use std::f64::consts::PI;

use boxpath::case1::DirectionModel;
use boxpath::case2::Case2Config;
use boxpath::compare::{self, ExitCell, LocationSource};
use boxpath::density::{self, Axis};
use boxpath::montecarlo::record::{read_records, write_records};
use boxpath::montecarlo::{
    self, exit_ray, sample_direction, CollectSpec, DirectionStats, HistogramSpec, JointHistogram,
    ProbeSpec, SampleConfig, SamplerKind, SeededStream,
};
use boxpath::{BoxDims, CanonicalClass, FaceId, Side};

const CUBE_I: SamplerKind = SamplerKind::Case1 {
    direction: DirectionModel::CubeComponents,
};

/// Chi-square p-value of unit directions (inward along axis 2) over 100
/// equal-area cells of the hemisphere: 10 bands of `z`, 10 sectors of azimuth.
fn hemisphere_p(model: DirectionModel, seed: u64) -> f64 {
    let mut rng = SeededStream::new(seed, 0).rng();
    let mut stats = DirectionStats::default();
    let mut counts = vec![0.0; 100];
    for _ in 0..1_000_000 {
        let d = sample_direction(&mut rng, model, 2, 1.0, &mut stats);
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let z = ((d[2] / r * 10.0) as usize).min(9);
        let phi = (((d[1].atan2(d[0]) + PI) / (2.0 * PI) * 10.0) as usize).min(9);
        counts[z * 10 + phi] += 1.0;
    }
    let axes = [
        Axis::cells(0.0, 1.0, 10).unwrap(),
        Axis::cells(-PI, PI, 10).unwrap(),
    ];
    compare::compare_bins(&counts, &[0.01; 100], &axes)
        .unwrap()
        .chi_square
        .p_value
}

#[test]
fn ball_rejection_acceptance_rate() {
    let mut rng = SeededStream::new(41, 0).rng();
    let mut stats = DirectionStats::default();
    while stats.proposals < 1_000_000 {
        sample_direction(&mut rng, DirectionModel::BallRejection, 0, -1.0, &mut stats);
    }
    let rate = stats.accepted as f64 / stats.proposals as f64;
    assert!((rate - PI / 6.0).abs() < 1e-3, "acceptance {rate}");
}

#[test]
fn direction_laws_on_the_sphere() {
    let ball = hemisphere_p(DirectionModel::BallRejection, 42);
    assert!(ball > 0.01, "ball p {ball}");
    let cube = hemisphere_p(DirectionModel::CubeComponents, 43);
    assert!(cube < 1e-6, "cube-components p {cube}");
}

#[test]
fn inward_sign_is_forced() {
    let mut rng = SeededStream::new(44, 0).rng();
    let mut stats = DirectionStats::default();
    for (axis, sign) in [(0, 1.0), (1, -1.0), (2, -1.0)] {
        for model in [
            DirectionModel::BallRejection,
            DirectionModel::CubeComponents,
        ] {
            for _ in 0..1000 {
                assert!(
                    sample_direction(&mut rng, model, axis, sign, &mut stats)[axis] * sign > 0.0
                );
            }
        }
    }
}

#[test]
fn straight_chords() {
    let cube = [1.0; 3];
    let (face, q) = exit_ray(cube, [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]).unwrap();
    assert_eq!(face, FaceId::new(1, Side::High));
    assert_eq!(q, [0.5, 1.0, 0.5]);
    let (face, _) = exit_ray([1.0, 2.0, 1.0], [1.0, 0.3, 0.2], [-1.0, 0.0, 0.0]).unwrap();
    assert_eq!(face, FaceId::new(0, Side::Low));
}

#[test]
fn trajectory_invariants_for_every_sampler() {
    let dims = BoxDims::new(1.0, 2.0, 0.5).unwrap();
    for kind in [
        CUBE_I,
        SamplerKind::Case1 {
            direction: DirectionModel::BallRejection,
        },
        SamplerKind::Case2,
    ] {
        for t in montecarlo::generate(&SampleConfig::new(dims, kind, 45, 100_000)).unwrap() {
            let (p, q) = (t.entry_point(&dims), t.exit_point(&dims));
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            assert!((t.length - d).abs() <= 1e-12 * d.max(1e-300));
            assert_ne!(t.entry_face, t.exit_face);
        }
    }
}

#[test]
fn same_face_rates() {
    let cube = BoxDims::cube();
    let spec = CollectSpec {
        joint: Some(HistogramSpec {
            n_bins: 1,
            a_bins: 1,
            b_bins: 1,
            ..Default::default()
        }),
        ..Default::default()
    };
    let run = montecarlo::sample(
        &SampleConfig::new(cube, SamplerKind::Case2, 46, 1_000_000),
        &spec,
    )
    .unwrap();
    assert!(
        (run.same_face_rate() - 1.0 / 6.0).abs() < 2e-3,
        "rate {}",
        run.same_face_rate()
    );
    assert_eq!(run.joint().unwrap().same_face, 0);

    let base = montecarlo::sample(
        &SampleConfig::new(cube, SamplerKind::Baseline, 46, 1_000_000),
        &spec,
    )
    .unwrap();
    let set = base.joint().unwrap();
    let kept = set.same_face as f64 / set.total as f64;
    assert!((kept - 1.0 / 6.0).abs() < 2e-3, "kept {kept}");
    assert_eq!(base.stats.same_face_resamples, 0);
}

fn lengths(kind: SamplerKind, seed: u64, n: u64) -> Vec<f64> {
    montecarlo::generate(&SampleConfig::new(BoxDims::cube(), kind, seed, n))
        .unwrap()
        .into_iter()
        .filter(|t| t.entry_face != t.exit_face)
        .map(|t| t.length)
        .collect()
}

/// Two-sample Kolmogorov-Smirnov p-value.
fn ks_two_sample(mut x: Vec<f64>, mut y: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    let ne = nx * ny / (nx + ny);
    compare::kolmogorov_tail((ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d)
}

#[test]
fn baseline_without_same_face_pairs_is_case2() {
    let p = ks_two_sample(
        lengths(SamplerKind::Baseline, 47, 300_000),
        lengths(SamplerKind::Case2, 48, 250_000),
    );
    assert!(p > 0.01, "KS p {p}");
    let p = ks_two_sample(
        lengths(CUBE_I, 47, 300_000),
        lengths(SamplerKind::Case2, 48, 250_000),
    );
    assert!(p < 1e-6, "Case I against Case II KS p {p}");
}

#[test]
fn baseline_mean_is_seed_independent() {
    let cube = BoxDims::cube();
    let spec = CollectSpec {
        length_bins: Some(8),
        ..Default::default()
    };
    let mut means = Vec::new();
    let mut reference = 0.0;
    for seed in 50..54 {
        let run = montecarlo::sample(
            &SampleConfig::new(cube, SamplerKind::Baseline, seed, 1_000_000),
            &spec,
        )
        .unwrap();
        means.push(run.lengths().unwrap().mean().unwrap());
    }
    let big = montecarlo::sample(
        &SampleConfig::new(cube, SamplerKind::Baseline, 49, 8_000_000),
        &spec,
    )
    .unwrap();
    reference += big.lengths().unwrap().mean().unwrap();
    // per-sample standard deviation of the chord length is below 0.4
    for m in &means {
        assert!(
            (m - reference).abs() < 3.0 * 0.4 * (1.0 / 1e6 + 1.0 / 8e6f64).sqrt(),
            "{means:?} vs {reference}"
        );
    }
}

#[test]
fn conditional_at_an_exit_cell() {
    let cube = BoxDims::cube();
    let class = CanonicalClass::Opposing { j: 1 };
    let cell = ExitCell::around(&cube, class, [0.3, 0.6], 0.05, 0.05).unwrap();
    // eight length bins keep the sampling noise of about 5e3 hits below the tolerance
    let n_axis = Axis::cells(1.0, 1.5, 8).unwrap();
    let probe = ProbeSpec::Location {
        class,
        a: cell.a,
        b: cell.b,
        n_axis,
    };
    let cfg = SampleConfig::new(cube, SamplerKind::Case2, 55, 10_000_000)
        .with_entry_face(FaceId::new(1, Side::Low));
    let run = montecarlo::sample(
        &cfg,
        &CollectSpec {
            probes: vec![probe],
            ..Default::default()
        },
    )
    .unwrap();
    let mc = compare::location_pdf(LocationSource::Probe(&run.collected.probes[0]), cell).unwrap();
    let cfg2 = Case2Config::new(cube, class).unwrap();
    let pdf = compare::location_pdf(LocationSource::Case2(&cfg2, n_axis), cell).unwrap();
    let l1 = density::l1_distance(&pdf, &mc);
    assert!(
        l1 <= 0.05,
        "L1 {l1} with {} hits",
        run.collected.probes[0].hits
    );
}

#[test]
fn histogram_bookkeeping() {
    let dims = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    let spec = CollectSpec {
        joint: Some(HistogramSpec {
            n_bins: 1,
            a_bins: 1,
            b_bins: 1,
            ..Default::default()
        }),
        length_bins: Some(10),
        ..Default::default()
    };
    for kind in [CUBE_I, SamplerKind::Case2] {
        let run = montecarlo::sample(&SampleConfig::new(dims, kind, 56, 200_000), &spec).unwrap();
        let set = run.joint().unwrap();
        assert_eq!(set.binned(), 200_000);
        assert_eq!(set.overflow(), 0);
        let lengths = run.lengths().unwrap();
        assert_eq!(
            lengths.counts.iter().sum::<u64>() + lengths.overflow,
            200_000
        );
        assert!((lengths.to_density().unwrap().integrate() - 1.0).abs() < 1e-12);
        let dens: f64 = set
            .pairs
            .iter()
            .map(|p| p.to_density().unwrap().integrate())
            .sum();
        assert!((dens - 1.0).abs() < 1e-12);
    }

    let class = CanonicalClass::Opposing { j: 1 };
    let axes = [
        Axis::cells(1.0, 1.5, 5).unwrap(),
        Axis::cells(0.0, 1.0, 2).unwrap(),
        Axis::cells(0.0, 1.0, 2).unwrap(),
    ];
    let mut h = JointHistogram::new(
        FaceId::new(1, Side::Low),
        FaceId::new(1, Side::High),
        class,
        axes,
    );
    for (n, a, b) in [
        (1.1, 0.2, 0.2),
        (1.7, 0.2, 0.2),
        (1.2, 0.7, 0.9),
        (1.2, 1.2, 0.1),
    ] {
        h.add(n, a, b);
    }
    h.total = 4;
    assert_eq!((h.in_range(), h.overflow), (2, 2));
    assert!((h.to_density().unwrap().integrate() - 0.5).abs() < 1e-12);
}

#[test]
fn runs_are_reproducible() {
    let dims = BoxDims::new(1.0, 0.1, 1.0).unwrap();
    let cfg = SampleConfig::new(dims, SamplerKind::Case2, 57, 20_000);
    assert_eq!(
        montecarlo::generate(&cfg).unwrap(),
        montecarlo::generate(&cfg).unwrap()
    );
    let other = SampleConfig {
        seed: 58,
        ..cfg.clone()
    };
    assert_ne!(
        montecarlo::generate(&cfg).unwrap(),
        montecarlo::generate(&other).unwrap()
    );

    let one = boxpath::par::with_workers(1, || montecarlo::generate(&cfg).unwrap());
    let three = boxpath::par::with_workers(3, || montecarlo::generate(&cfg).unwrap());
    assert_eq!(one, three);

    let mut bytes = Vec::new();
    write_records(&cfg, &mut bytes).unwrap();
    let back = read_records(&mut bytes.as_slice()).unwrap();
    assert_eq!(back, one);
}
