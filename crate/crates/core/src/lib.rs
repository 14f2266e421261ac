//! Probability densities of random straight trajectories through a rectangular
//! box: chord length jointly with the exit position, for lines with a random
//! orientation (Case I) and for lines joining a uniform entry point to a uniform
//! exit point (Case II), together with a reproducible Monte Carlo sampler that
//! validates them.

// `!(a < b)` comparisons also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod density;
pub mod error;
pub mod geometry;
pub mod par;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{
    BoxDims, CanonicalClass, FaceId, FacePairClass, PairKind, PermutationIndices, Side,
};
pub mod case1;
pub mod case2;
pub mod combined;
pub mod compare;
pub mod montecarlo;
