use boxpath::geometry::{
    canonical_pdf_count, classify_pair, entry_probability, face_area, pairs_of_class,
};
use boxpath::{BoxDims, CanonicalClass, FaceId, PairKind, PermutationIndices, Side};
use proptest::prelude::*;

fn face(axis: usize, side: Side) -> FaceId {
    FaceId::new(axis, side)
}

#[test]
fn preset_face_areas() {
    let cube = BoxDims::cube();
    for f in FaceId::ALL {
        assert_eq!(face_area(&cube, f), 1.0);
    }
    // axis indices are zero-based: "axis 2" of the short box is index 1
    let short = BoxDims::new(1.0, 0.1, 1.0).unwrap();
    assert_eq!(face_area(&short, face(1, Side::Low)), 1.0);
    let long = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    assert_eq!(face_area(&long, face(0, Side::High)), 2.0);
}

#[test]
fn short_box_entry_probability() {
    let short = BoxDims::new(1.0, 0.1, 1.0).unwrap();
    let p = entry_probability(&short, face(1, Side::High));
    assert!((p - 1.0 / 2.4).abs() < 1e-15);
}

#[test]
fn degenerate_boxes_are_rejected() {
    for d in [
        [0.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, f64::NAN],
        [f64::INFINITY, 1.0, 1.0],
    ] {
        assert!(BoxDims::new(d[0], d[1], d[2]).is_err());
    }
}

#[test]
fn permutation_algebra() {
    assert!(PermutationIndices::new(0, 0, 2).is_err());
    assert!(PermutationIndices::new(0, 1, 3).is_err());
    let even: Vec<_> = PermutationIndices::all()
        .into_iter()
        .filter(|p| p.is_even())
        .collect();
    assert_eq!(even.len(), 3);
    for j in 0..3 {
        let p = PermutationIndices::even_with_j(j);
        assert!(p.is_even() && p.j == j);
    }
}

#[test]
fn classification() {
    let c = classify_pair(face(1, Side::Low), face(1, Side::High));
    assert_eq!(c.kind, PairKind::Opposing);
    assert_eq!((c.perm.i, c.perm.j, c.perm.k), (0, 1, 2));
    assert_eq!(
        classify_pair(face(1, Side::Low), face(2, Side::Low)).kind,
        PairKind::Adjacent
    );
    assert_eq!(
        classify_pair(face(2, Side::High), face(2, Side::High)).kind,
        PairKind::Same
    );
}

#[test]
fn thirty_pairs_reduce_to_nine() {
    assert_eq!(
        canonical_pdf_count(&BoxDims::new(0.3, 1.7, 2.2).unwrap()),
        (3, 6)
    );
    let total: usize = CanonicalClass::traversing()
        .iter()
        .map(|c| pairs_of_class(*c).len())
        .sum();
    assert_eq!(total, 30);
    for c in CanonicalClass::traversing() {
        assert_eq!(pairs_of_class(c).len(), c.multiplicity());
    }
}

#[test]
fn opposing_classes_under_relabelling() {
    let perm_dims = |dims: &BoxDims, j: usize| CanonicalClass::Opposing { j }.perm().dims(dims);
    let cube = BoxDims::cube();
    assert!((0..3).all(|j| perm_dims(&cube, j) == [1.0; 3]));
    let long = BoxDims::new(1.0, 2.0, 1.0).unwrap();
    assert_eq!(perm_dims(&long, 0)[1], perm_dims(&long, 2)[1]);
    assert_ne!(perm_dims(&long, 0)[1], perm_dims(&long, 1)[1]);
}

fn dims_strategy() -> impl Strategy<Value = BoxDims> {
    (0.05f64..3.0, 0.05f64..3.0, 0.05f64..3.0).prop_map(|(a, b, c)| BoxDims::new(a, b, c).unwrap())
}

proptest! {
    #[test]
    fn entry_probabilities_sum_to_one(dims in dims_strategy()) {
        let s: f64 = FaceId::ALL.iter().map(|f| entry_probability(&dims, *f)).sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn canonical_maps_invert(dims in dims_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                let pair = classify_pair(entry, exit);
                prop_assert_eq!(pair.kind, classify_pair(exit, entry).kind);
                let [ea, eb] = exit.local_dims(&dims);
                let local = [u * ea, v * eb];
                let back = pair.exit_from_canonical(&dims, pair.exit_to_canonical(&dims, local));
                prop_assert!((back[0] - local[0]).abs() < 1e-12 && (back[1] - local[1]).abs() < 1e-12);
                let [na, nb] = entry.local_dims(&dims);
                let local = [u * na, v * nb];
                let back = pair.entry_from_canonical(&dims, pair.entry_to_canonical(&dims, local));
                prop_assert!((back[0] - local[0]).abs() < 1e-12 && (back[1] - local[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_entry_lies_on_low_plane(dims in dims_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                let pair = classify_pair(entry, exit);
                let [na, nb] = entry.local_dims(&dims);
                let p = pair.point_to_canonical(&dims, entry.to_world(&dims, [u * na, v * nb]));
                prop_assert!(p[entry.axis()].abs() < 1e-12);
            }
        }
    }
}
