//! Box, face and index algebra.
//!
//! Axes are zero-based (`0`, `1`, `2` for x1, x2, x3). A point on a face is
//! described by its two in-plane world coordinates in ascending axis order
//! ("face-local" coordinates). Densities are computed in a canonical frame in
//! which the entry face is `x_j = 0` and the exit face is either `x_j = X_j`
//! (opposing) or `x_k = 0` (adjacent); [`FacePairClass`] carries the index
//! permutation and the reflections that map a world face pair onto it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side lengths of an axis-aligned cuboid with one corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BoxDims([f64; 3]);

impl BoxDims {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let dims = [x1, x2, x3];
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(Self(dims))
        } else {
            Err(Error::InvalidBox(dims))
        }
    }

    pub fn cube() -> Self {
        Self([1.0; 3])
    }

    /// Length of the side along `axis`.
    #[inline]
    pub fn side(&self, axis: usize) -> f64 {
        self.0[axis]
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn diagonal(&self) -> f64 {
        self.0.iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    pub fn surface_area(&self) -> f64 {
        let [a, b, c] = self.0;
        2.0 * (a * b + a * c + b * c)
    }

    /// Box with every side multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0[0] * factor, self.0[1] * factor, self.0[2] * factor)
    }

    /// Box with its sides relabelled: side `a` of the result is side `order[a]` of `self`.
    pub fn permuted(&self, order: [usize; 3]) -> Self {
        Self([self.0[order[0]], self.0[order[1]], self.0[order[2]]])
    }
}

impl TryFrom<[f64; 3]> for BoxDims {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<BoxDims> for [f64; 3] {
    fn from(b: BoxDims) -> Self {
        b.0
    }
}

/// Which of the two parallel faces along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The face at coordinate 0.
    Low,
    /// The face at coordinate `X_axis`.
    High,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Low => Side::High,
            Side::High => Side::Low,
        }
    }
}

/// One of the six faces of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceId {
    axis: u8,
    side: Side,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [
        FaceId {
            axis: 0,
            side: Side::Low,
        },
        FaceId {
            axis: 0,
            side: Side::High,
        },
        FaceId {
            axis: 1,
            side: Side::Low,
        },
        FaceId {
            axis: 1,
            side: Side::High,
        },
        FaceId {
            axis: 2,
            side: Side::Low,
        },
        FaceId {
            axis: 2,
            side: Side::High,
        },
    ];

    /// Panics if `axis > 2`.
    pub fn new(axis: usize, side: Side) -> Self {
        assert!(axis < 3, "axis index {axis} out of range");
        Self {
            axis: axis as u8,
            side,
        }
    }

    #[inline]
    pub fn axis(self) -> usize {
        self.axis as usize
    }

    #[inline]
    pub fn side(self) -> Side {
        self.side
    }

    pub fn opposite(self) -> Self {
        Self {
            axis: self.axis,
            side: self.side.flip(),
        }
    }

    /// Dense index in `0..6`, the order of [`FaceId::ALL`]; also the on-disk byte.
    pub fn index(self) -> usize {
        2 * self.axis as usize + matches!(self.side, Side::High) as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// The two in-plane axes in ascending order.
    pub fn in_plane_axes(self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    /// Coordinate value of the face plane.
    pub fn plane(self, dims: &BoxDims) -> f64 {
        match self.side {
            Side::Low => 0.0,
            Side::High => dims.side(self.axis()),
        }
    }

    /// Extent of the face-local coordinate ranges.
    pub fn local_dims(self, dims: &BoxDims) -> [f64; 2] {
        let [a, b] = self.in_plane_axes();
        [dims.side(a), dims.side(b)]
    }

    /// Lift face-local coordinates to a 3D point on the face.
    pub fn to_world(self, dims: &BoxDims, local: [f64; 2]) -> [f64; 3] {
        let mut p = [0.0; 3];
        let [a, b] = self.in_plane_axes();
        p[self.axis()] = self.plane(dims);
        p[a] = local[0];
        p[b] = local[1];
        p
    }

    /// Project a 3D point onto face-local coordinates.
    pub fn to_local(self, point: [f64; 3]) -> [f64; 2] {
        let [a, b] = self.in_plane_axes();
        [point[a], point[b]]
    }

    pub fn label(self) -> String {
        format!(
            "x{}{}",
            self.axis + 1,
            match self.side {
                Side::Low => "lo",
                Side::High => "hi",
            }
        )
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn face_area(dims: &BoxDims, face: FaceId) -> f64 {
    let [a, b] = face.in_plane_axes();
    dims.side(a) * dims.side(b)
}

/// Probability that a trajectory enters through `face`: its share of the surface area.
pub fn entry_probability(dims: &BoxDims, face: FaceId) -> f64 {
    face_area(dims, face) / dims.surface_area()
}

/// An ordering `(i, j, k)` of the three axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermutationIndices {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl PermutationIndices {
    pub fn new(i: usize, j: usize, k: usize) -> Result<Self> {
        let mut seen = [false; 3];
        for a in [i, j, k] {
            if a > 2 || seen[a] {
                return Err(Error::InvalidGrid(format!(
                    "({i}, {j}, {k}) is not a permutation of the axes"
                )));
            }
            seen[a] = true;
        }
        Ok(Self { i, j, k })
    }

    /// The even permutation with the given middle index: (1,2,3), (2,3,1), (3,1,2).
    pub fn even_with_j(j: usize) -> Self {
        assert!(j < 3);
        Self {
            i: (j + 2) % 3,
            j,
            k: (j + 1) % 3,
        }
    }

    /// The permutation with the given `j` and `k`.
    pub fn with_jk(j: usize, k: usize) -> Result<Self> {
        if j == k || j > 2 || k > 2 {
            return Err(Error::InvalidGrid(format!(
                "axes j={j}, k={k} must be distinct"
            )));
        }
        Ok(Self { i: 3 - j - k, j, k })
    }

    pub fn all() -> [Self; 6] {
        [
            Self { i: 0, j: 1, k: 2 },
            Self { i: 1, j: 2, k: 0 },
            Self { i: 2, j: 0, k: 1 },
            Self { i: 0, j: 2, k: 1 },
            Self { i: 1, j: 0, k: 2 },
            Self { i: 2, j: 1, k: 0 },
        ]
    }

    pub fn is_even(&self) -> bool {
        (self.j + 3 - self.i) % 3 == 1 && (self.k + 3 - self.j) % 3 == 1
    }

    /// Side lengths `(X_i, X_j, X_k)`.
    pub fn dims(&self, dims: &BoxDims) -> [f64; 3] {
        [dims.side(self.i), dims.side(self.j), dims.side(self.k)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Opposing,
    Adjacent,
    Same,
}

/// Identifies one of the nine distinct face-pair densities of a box (plus the
/// degenerate same-face pairs used only by the two-point baseline sampler).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CanonicalClass {
    /// Entry on an axis-`j` face, exit on the parallel face.
    Opposing { j: usize },
    /// Entry on an axis-`j` face, exit on an axis-`k` face.
    Adjacent { j: usize, k: usize },
    /// Entry and exit on the same axis-`j` face.
    Same { j: usize },
}

impl CanonicalClass {
    /// The nine classes with a traversing chord: three opposing, then six adjacent.
    pub fn traversing() -> [CanonicalClass; 9] {
        [
            CanonicalClass::Opposing { j: 0 },
            CanonicalClass::Opposing { j: 1 },
            CanonicalClass::Opposing { j: 2 },
            CanonicalClass::Adjacent { j: 0, k: 1 },
            CanonicalClass::Adjacent { j: 0, k: 2 },
            CanonicalClass::Adjacent { j: 1, k: 0 },
            CanonicalClass::Adjacent { j: 1, k: 2 },
            CanonicalClass::Adjacent { j: 2, k: 0 },
            CanonicalClass::Adjacent { j: 2, k: 1 },
        ]
    }

    pub fn kind(&self) -> PairKind {
        match self {
            CanonicalClass::Opposing { .. } => PairKind::Opposing,
            CanonicalClass::Adjacent { .. } => PairKind::Adjacent,
            CanonicalClass::Same { .. } => PairKind::Same,
        }
    }

    pub fn perm(&self) -> PermutationIndices {
        match *self {
            CanonicalClass::Opposing { j } | CanonicalClass::Same { j } => {
                PermutationIndices::even_with_j(j)
            }
            CanonicalClass::Adjacent { j, k } => PermutationIndices { i: 3 - j - k, j, k },
        }
    }

    pub fn entry_axis(&self) -> usize {
        self.perm().j
    }

    /// Number of ordered world face pairs that map onto this class.
    pub fn multiplicity(&self) -> usize {
        match self {
            CanonicalClass::Opposing { .. } | CanonicalClass::Same { .. } => 2,
            CanonicalClass::Adjacent { .. } => 4,
        }
    }

    /// Extents of the two canonical exit coordinates: `(X_i, X_k)` for opposing
    /// and same-face pairs, `(X_i, X_j)` for adjacent pairs.
    pub fn exit_dims(&self, dims: &BoxDims) -> [f64; 2] {
        let p = self.perm();
        match self {
            CanonicalClass::Adjacent { .. } => [dims.side(p.i), dims.side(p.j)],
            _ => [dims.side(p.i), dims.side(p.k)],
        }
    }

    /// Range of chord lengths that can occur for this class.
    pub fn length_range(&self, dims: &BoxDims) -> (f64, f64) {
        let p = self.perm();
        match self {
            CanonicalClass::Opposing { .. } => (dims.side(p.j), dims.diagonal()),
            CanonicalClass::Adjacent { .. } => (0.0, dims.diagonal()),
            CanonicalClass::Same { .. } => (0.0, dims.side(p.i).hypot(dims.side(p.k))),
        }
    }

    /// One representative ordered world pair (entry on the low face).
    pub fn representative(&self) -> (FaceId, FaceId) {
        match *self {
            CanonicalClass::Opposing { j } => {
                (FaceId::new(j, Side::Low), FaceId::new(j, Side::High))
            }
            CanonicalClass::Adjacent { j, k } => {
                (FaceId::new(j, Side::Low), FaceId::new(k, Side::Low))
            }
            CanonicalClass::Same { j } => (FaceId::new(j, Side::Low), FaceId::new(j, Side::Low)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            CanonicalClass::Opposing { j } => format!("opp_j{}", j + 1),
            CanonicalClass::Adjacent { j, k } => format!("adj_j{}_k{}", j + 1, k + 1),
            CanonicalClass::Same { j } => format!("same_j{}", j + 1),
        }
    }
}

impl fmt::Display for CanonicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Classification of an ordered (entry, exit) face pair together with the map
/// into the canonical frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacePairClass {
    pub entry: FaceId,
    pub exit: FaceId,
    pub kind: PairKind,
    pub perm: PermutationIndices,
    pub class: CanonicalClass,
    /// Axes reflected (`x -> X - x`) to reach the canonical frame.
    pub reflect: [bool; 3],
}

pub fn classify_pair(entry: FaceId, exit: FaceId) -> FacePairClass {
    let j = entry.axis();
    let mut reflect = [false; 3];
    reflect[j] = entry.side() == Side::High;
    let (kind, class) = if entry == exit {
        (PairKind::Same, CanonicalClass::Same { j })
    } else if exit.axis() == j {
        (PairKind::Opposing, CanonicalClass::Opposing { j })
    } else {
        let k = exit.axis();
        reflect[k] = exit.side() == Side::High;
        (PairKind::Adjacent, CanonicalClass::Adjacent { j, k })
    };
    FacePairClass {
        entry,
        exit,
        kind,
        perm: class.perm(),
        class,
        reflect,
    }
}

impl FacePairClass {
    fn reflect_axis(&self, dims: &BoxDims, axis: usize, x: f64) -> f64 {
        if self.reflect[axis] {
            dims.side(axis) - x
        } else {
            x
        }
    }

    /// Map a world point into the canonical frame (applies the reflections).
    pub fn point_to_canonical(&self, dims: &BoxDims, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| self.reflect_axis(dims, a, p[a]))
    }

    /// Inverse of [`Self::point_to_canonical`] (reflections are involutions).
    pub fn point_from_canonical(&self, dims: &BoxDims, p: [f64; 3]) -> [f64; 3] {
        self.point_to_canonical(dims, p)
    }

    /// Face-local exit coordinates to canonical exit coordinates.
    pub fn exit_to_canonical(&self, dims: &BoxDims, local: [f64; 2]) -> [f64; 2] {
        let p = self.point_to_canonical(dims, self.exit.to_world(dims, local));
        self.canonical_exit_coords(p)
    }

    pub fn exit_from_canonical(&self, dims: &BoxDims, canon: [f64; 2]) -> [f64; 2] {
        let mut p = [0.0; 3];
        let PermutationIndices { i, j, k } = self.perm;
        match self.kind {
            PairKind::Adjacent => {
                p[i] = canon[0];
                p[j] = canon[1];
                p[k] = 0.0;
            }
            PairKind::Opposing => {
                p[i] = canon[0];
                p[j] = dims.side(j);
                p[k] = canon[1];
            }
            PairKind::Same => {
                p[i] = canon[0];
                p[j] = 0.0;
                p[k] = canon[1];
            }
        }
        self.exit.to_local(self.point_from_canonical(dims, p))
    }

    /// Face-local entry coordinates to canonical entry coordinates `(x_i, x_k)`.
    pub fn entry_to_canonical(&self, dims: &BoxDims, local: [f64; 2]) -> [f64; 2] {
        let p = self.point_to_canonical(dims, self.entry.to_world(dims, local));
        [p[self.perm.i], p[self.perm.k]]
    }

    pub fn entry_from_canonical(&self, dims: &BoxDims, canon: [f64; 2]) -> [f64; 2] {
        let mut p = [0.0; 3];
        p[self.perm.i] = canon[0];
        p[self.perm.k] = canon[1];
        self.entry.to_local(self.point_from_canonical(dims, p))
    }

    fn canonical_exit_coords(&self, p: [f64; 3]) -> [f64; 2] {
        let PermutationIndices { i, j, k } = self.perm;
        match self.kind {
            PairKind::Adjacent => [p[i], p[j]],
            _ => [p[i], p[k]],
        }
    }

    /// Multiplicity weight of this pair's canonical class.
    pub fn multiplicity(&self) -> usize {
        self.class.multiplicity()
    }
}

/// Number of distinct opposing and adjacent face-pair densities, found by
/// enumerating all ordered pairs of distinct faces.
pub fn canonical_pdf_count(_dims: &BoxDims) -> (usize, usize) {
    let mut seen = std::collections::BTreeSet::new();
    for entry in FaceId::ALL {
        for exit in FaceId::ALL {
            if entry != exit {
                seen.insert(classify_pair(entry, exit).class);
            }
        }
    }
    let opposing = seen
        .iter()
        .filter(|c| c.kind() == PairKind::Opposing)
        .count();
    (opposing, seen.len() - opposing)
}

/// All ordered pairs of distinct faces mapping onto `class`.
pub fn pairs_of_class(class: CanonicalClass) -> Vec<(FaceId, FaceId)> {
    let mut out = Vec::new();
    for entry in FaceId::ALL {
        for exit in FaceId::ALL {
            if classify_pair(entry, exit).class == class {
                out.push((entry, exit));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> BoxDims {
        BoxDims::new(1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoxDims::new(0.0, 1.0, 1.0).is_err());
        assert!(BoxDims::new(1.0, -1.0, 1.0).is_err());
        assert!(BoxDims::new(1.0, 1.0, f64::NAN).is_err());
        assert!(BoxDims::new(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn face_areas() {
        for f in FaceId::ALL {
            assert_eq!(face_area(&BoxDims::cube(), f), 1.0);
        }
        assert_eq!(face_area(&short(), FaceId::new(1, Side::Low)), 1.0);
        let long = BoxDims::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(face_area(&long, FaceId::new(0, Side::High)), 2.0);
    }

    #[test]
    fn entry_probabilities() {
        for f in FaceId::ALL {
            assert!((entry_probability(&BoxDims::cube(), f) - 1.0 / 6.0).abs() < 1e-15);
        }
        let p = entry_probability(&short(), FaceId::new(1, Side::Low));
        assert!((p - 1.0 / 2.4).abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        let c = classify_pair(FaceId::new(1, Side::Low), FaceId::new(1, Side::High));
        assert_eq!(c.kind, PairKind::Opposing);
        assert_eq!(c.perm, PermutationIndices { i: 0, j: 1, k: 2 });
        let c = classify_pair(FaceId::new(1, Side::Low), FaceId::new(2, Side::Low));
        assert_eq!(c.kind, PairKind::Adjacent);
        let f = FaceId::new(2, Side::High);
        assert_eq!(classify_pair(f, f).kind, PairKind::Same);
    }

    #[test]
    fn kind_is_symmetric() {
        for a in FaceId::ALL {
            for b in FaceId::ALL {
                assert_eq!(classify_pair(a, b).kind, classify_pair(b, a).kind);
            }
        }
    }

    #[test]
    fn even_permutations() {
        let evens: Vec<_> = (0..3).map(PermutationIndices::even_with_j).collect();
        assert!(evens.contains(&PermutationIndices { i: 0, j: 1, k: 2 }));
        assert!(evens.contains(&PermutationIndices { i: 1, j: 2, k: 0 }));
        assert!(evens.contains(&PermutationIndices { i: 2, j: 0, k: 1 }));
        assert!(evens.iter().all(|p| p.is_even()));
        assert_eq!(
            PermutationIndices::all()
                .iter()
                .filter(|p| p.is_even())
                .count(),
            3
        );
        assert!(PermutationIndices::new(0, 0, 1).is_err());
    }

    #[test]
    fn nine_canonical_densities() {
        for dims in [
            BoxDims::cube(),
            short(),
            BoxDims::new(1.0, 2.0, 1.0).unwrap(),
        ] {
            assert_eq!(canonical_pdf_count(&dims), (3, 6));
        }
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
    fn canonical_entry_sits_on_low_plane() {
        let dims = BoxDims::new(1.0, 2.0, 3.0).unwrap();
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                let c = classify_pair(entry, exit);
                let p = c.point_to_canonical(&dims, entry.to_world(&dims, [0.3, 0.4]));
                assert_eq!(p[c.perm.j], 0.0);
                if c.kind == PairKind::Adjacent {
                    let q = c.point_to_canonical(&dims, exit.to_world(&dims, [0.2, 0.1]));
                    assert_eq!(q[c.perm.k], 0.0);
                }
                if c.kind == PairKind::Opposing {
                    let q = c.point_to_canonical(&dims, exit.to_world(&dims, [0.2, 0.1]));
                    assert_eq!(q[c.perm.j], dims.side(c.perm.j));
                }
            }
        }
    }

    #[test]
    fn canonical_round_trip_all_pairs() {
        let dims = BoxDims::new(1.3, 0.7, 2.1).unwrap();
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                let c = classify_pair(entry, exit);
                let [a, b] = exit.local_dims(&dims);
                let local = [0.31 * a, 0.83 * b];
                let back = c.exit_from_canonical(&dims, c.exit_to_canonical(&dims, local));
                assert!((back[0] - local[0]).abs() < 1e-12 && (back[1] - local[1]).abs() < 1e-12);
                let [a, b] = entry.local_dims(&dims);
                let local = [0.61 * a, 0.17 * b];
                let back = c.entry_from_canonical(&dims, c.entry_to_canonical(&dims, local));
                assert!((back[0] - local[0]).abs() < 1e-12 && (back[1] - local[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn canonical_exit_coords_stay_in_class_dims() {
        let dims = BoxDims::new(1.3, 0.7, 2.1).unwrap();
        for entry in FaceId::ALL {
            for exit in FaceId::ALL {
                let c = classify_pair(entry, exit);
                let ld = exit.local_dims(&dims);
                let cd = c.class.exit_dims(&dims);
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for local in [[0.0, 0.0], [ld[0], 0.0], [0.0, ld[1]], [ld[0], ld[1]]] {
                    let q = c.exit_to_canonical(&dims, local);
                    for d in 0..2 {
                        lo[d] = lo[d].min(q[d]);
                        hi[d] = hi[d].max(q[d]);
                    }
                }
                for d in 0..2 {
                    assert!(
                        lo[d].abs() < 1e-12 && (hi[d] - cd[d]).abs() < 1e-12,
                        "{}",
                        c.class
                    );
                }
            }
        }
    }

    #[test]
    fn face_index_round_trip() {
        for (n, f) in FaceId::ALL.iter().enumerate() {
            assert_eq!(f.index(), n);
            assert_eq!(FaceId::from_index(n), Some(*f));
        }
        assert_eq!(FaceId::from_index(6), None);
    }
}
