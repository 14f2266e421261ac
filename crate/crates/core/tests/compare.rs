use boxpath::case1::{self, Case1Model, Case1Quadrature, DirectionModel};
use boxpath::case2::{self, Case2Config};
use boxpath::compare::{self, elevation_profile, ExitCell, LocationSource};
use boxpath::density::{self, Axis, GridDensity3D};
use boxpath::montecarlo::{
    self, CollectSpec, HistogramSpec, JointHistogram, SampleConfig, SamplerKind, SeededStream,
    StreamRng,
};
use boxpath::{BoxDims, CanonicalClass, Error, FaceId, Side};

const ADJ: CanonicalClass = CanonicalClass::Adjacent { j: 1, k: 0 };
const OPP: CanonicalClass = CanonicalClass::Opposing { j: 1 };

/// Draw from the density `(1 + c x) / (1 + c / 2)` on `[0, 1]` by inversion.
fn linear_draw(r: &mut StreamRng, c: f64) -> f64 {
    let u = r.uniform() * (1.0 + 0.5 * c);
    if c == 0.0 {
        u
    } else {
        ((1.0 + 2.0 * c * u).sqrt() - 1.0) / c
    }
}

fn test_axes() -> [Axis; 3] {
    [
        Axis::cells(0.0, 1.0, 10).unwrap(),
        Axis::cells(0.0, 1.0, 6).unwrap(),
        Axis::cells(0.0, 1.0, 6).unwrap(),
    ]
}

fn test_pdf() -> GridDensity3D {
    let node_axes = [
        Axis::nodes(0.0, 1.0, 33).unwrap(),
        Axis::nodes(0.0, 1.0, 33).unwrap(),
        Axis::nodes(0.0, 1.0, 33).unwrap(),
    ];
    GridDensity3D::from_fn(node_axes, |[n, a, b]| {
        (1.0 + 2.0 * n) * (1.0 + 0.5 * a) * (1.0 - 0.6 * b) / (2.0 * 1.25 * 0.7)
    })
    .unwrap()
}

fn self_sample(seed: u64, n: u64) -> JointHistogram {
    let mut h = JointHistogram::new(
        FaceId::new(1, Side::Low),
        FaceId::new(1, Side::High),
        OPP,
        test_axes(),
    );
    let mut r = SeededStream::new(seed, 0).rng();
    for _ in 0..n {
        let (x, a) = (linear_draw(&mut r, 2.0), linear_draw(&mut r, 0.5));
        let b = linear_draw(&mut r, -0.6);
        h.add(x, a, b);
    }
    h.total = n;
    h
}

#[test]
fn self_test_p_values_and_convergence() {
    let pdf = test_pdf();
    assert!((pdf.integrate() - 1.0).abs() < 1e-12);
    let ps: Vec<f64> = (0..20)
        .map(|s| {
            compare::compare(&self_sample(100 + s, 1_000_000), &pdf)
                .unwrap()
                .chi_square
                .p_value
        })
        .collect();
    let small = ps.iter().filter(|p| **p < 0.05).count();
    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
    assert!(small <= 4 && (0.25..0.75).contains(&mean), "{ps:?}");

    let l1: Vec<f64> = [10_000u64, 100_000, 1_000_000]
        .iter()
        .map(|n| {
            compare::compare(&self_sample(7, *n), &pdf)
                .unwrap()
                .l1_distance
        })
        .collect();
    // sampling noise in L1 falls like n^(-1/2)
    assert!(
        l1[0] > 2.5 * l1[1] && l1[1] > 2.5 * l1[2] && l1[2] < 0.02,
        "{l1:?}"
    );
    let r = compare::compare(&self_sample(8, 1_000_000), &pdf).unwrap();
    assert!(r.ks.iter().all(|k| k.p_value > 1e-3 && k.statistic < 0.01));
    assert_eq!(r.samples, 1_000_000);
}

#[test]
fn case1_and_case2_are_told_apart() {
    let cube = BoxDims::cube();
    let spec = HistogramSpec::default();
    let axes = spec.axes(&cube, ADJ).unwrap();
    let run = montecarlo::sample(
        &SampleConfig::new(
            cube,
            SamplerKind::Case1 {
                direction: DirectionModel::CubeComponents,
            },
            81,
            1_000_000,
        ),
        &CollectSpec {
            joint: Some(spec),
            ..Default::default()
        },
    )
    .unwrap();
    let hist = run.joint().unwrap().fold(ADJ).unwrap();
    let wrong = case2::joint_pdf_case2(&Case2Config::new(cube, ADJ).unwrap().with_joint_axes(axes))
        .unwrap();
    let right = case1::joint_on_axes(
        &Case1Model::new(
            cube,
            ADJ,
            DirectionModel::CubeComponents,
            Case1Quadrature::default(),
        ),
        axes,
    )
    .unwrap();
    let (w, r) = (
        compare::compare(&hist, &wrong).unwrap(),
        compare::compare(&hist, &right).unwrap(),
    );
    assert!(
        w.chi_square.p_value < 1e-6 && r.chi_square.p_value > 1e-3,
        "wrong {w:?}\nright {r:?}"
    );
    assert!(w.l1_distance > 0.1 && w.l1_distance <= 2.0);
}

#[test]
fn report_errors() {
    let empty = JointHistogram::new(
        FaceId::new(1, Side::Low),
        FaceId::new(1, Side::High),
        OPP,
        test_axes(),
    );
    assert!(matches!(
        compare::compare(&empty, &test_pdf()),
        Err(Error::EmptyHistogram)
    ));
    let mut h = self_sample(9, 1000);
    h.axes[0] = Axis::cells(0.0, 2.0, 10).unwrap();
    assert!(matches!(
        compare::compare(&h, &test_pdf()),
        Err(Error::IncompatibleBins(_))
    ));
    let axes = [Axis::cells(0.0, 1.0, 4).unwrap()];
    assert!(matches!(
        compare::compare_bins(&[1.0; 3], &[0.25; 4], &axes),
        Err(Error::IncompatibleBins(_))
    ));
}

#[test]
fn l1_is_symmetric_and_bounded() {
    let axes = [Axis::cells(0.0, 1.0, 5).unwrap()];
    let p = [0.1, 0.2, 0.3, 0.25, 0.15];
    let q = [0.3, 0.3, 0.1, 0.2, 0.1];
    let pc: Vec<f64> = p.iter().map(|x| x * 1e4).collect();
    let qc: Vec<f64> = q.iter().map(|x| x * 1e4).collect();
    let a = compare::compare_bins(&pc, &q, &axes).unwrap().l1_distance;
    let b = compare::compare_bins(&qc, &p, &axes).unwrap().l1_distance;
    assert!((a - b).abs() < 1e-15 && (a - 0.6).abs() < 1e-12);
    let disjoint = compare::compare_bins(
        &[5.0, 0.0],
        &[0.0, 1.0],
        &[Axis::cells(0.0, 1.0, 2).unwrap()],
    )
    .unwrap();
    assert!((disjoint.l1_distance - 2.0).abs() < 1e-15 && disjoint.chi_square.p_value == 0.0);
}

#[test]
fn reports_serialize_to_json() {
    let r = compare::compare(&self_sample(10, 10_000), &test_pdf()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert!(v["l1_distance"].is_f64() && v["chi_square"]["dof"].is_u64());
    assert_eq!(v["ks"].as_array().unwrap().len(), 3);
    assert_eq!(v["worst_bins"].as_array().unwrap().len(), 3);
}

#[test]
fn separable_profile_integrates_exactly() {
    let axes = [
        Axis::nodes(0.0, 2.0, 21).unwrap(),
        Axis::nodes(0.0, 1.0, 11).unwrap(),
        Axis::nodes(0.0, 0.5, 11).unwrap(),
    ];
    let g = GridDensity3D::from_fn(axes, |[n, a, b]| n * (0.5 + a) * 4.0 * b).unwrap();
    let p = elevation_profile(&g).unwrap();
    for (flat, v) in p.values().iter().enumerate() {
        let [n, b] = p.coord_of(flat);
        assert!((v - n * 4.0 * b).abs() < 1e-12);
    }

    let run = montecarlo::sample(
        &SampleConfig::new(BoxDims::cube(), SamplerKind::Case2, 82, 1000),
        &CollectSpec {
            joint: Some(HistogramSpec::default()),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(elevation_profile(&run.joint().unwrap().fold(ADJ).unwrap()).is_ok());
    assert!(matches!(
        elevation_profile(&run.joint().unwrap().fold(OPP).unwrap()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn whole_face_cell_gives_the_length_marginal() {
    let dims = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    let class = CanonicalClass::Adjacent { j: 0, k: 1 };
    let whole = ExitCell::whole_face(&dims, class);
    let n_axis = Axis::cells(0.0, dims.diagonal(), 40).unwrap();

    let model = Case1Model::new(
        dims,
        class,
        DirectionModel::CubeComponents,
        Case1Quadrature::default(),
    );
    let marginal = case1::length_marginal(&model, n_axis)
        .unwrap()
        .normalize()
        .unwrap();
    let from_cell = compare::location_pdf(LocationSource::Case1(&model, n_axis), whole).unwrap();
    let l1 = density::l1_distance(&marginal, &from_cell);
    assert!(l1 < 1e-2, "Case I whole-face L1 {l1}");

    let (lo, hi) = class.length_range(&dims);
    let [ea, eb] = class.exit_dims(&dims);
    let axes = [
        Axis::nodes(lo, hi, 65).unwrap(),
        Axis::nodes(0.0, ea, 17).unwrap(),
        Axis::nodes(0.0, eb, 17).unwrap(),
    ];
    let joint = case1::joint_on_axes(&model, axes).unwrap();
    let direct = joint
        .marginalize(2)
        .unwrap()
        .marginalize(1)
        .unwrap()
        .normalize()
        .unwrap();
    let via_cell = compare::location_pdf(LocationSource::Joint(&joint), whole).unwrap();
    assert!(density::l1_distance(&direct, &via_cell) < 1e-12);

    let cfg = Case2Config::new(dims, class).unwrap();
    assert!(compare::location_pdf(
        LocationSource::Case2(&cfg, Axis::nodes(0.0, 1.0, 20).unwrap()),
        whole
    )
    .is_err());
}
