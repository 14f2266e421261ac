//! Grid-sampled densities and the transforms between them.

pub mod grid;
pub mod io;
pub mod transforms;

pub use grid::{
    l1_distance, l1_distance_2d, l1_masses, Axis, GridDensity, GridDensity1D, GridDensity2D,
    GridDensity3D, Layout,
};
pub use transforms::{
    convolve_diff, convolve_on, convolve_sum, narrow_density, product_density, ratio_density,
    reciprocal_density, reflect, sqrt_density, sqrt_density_auto, square_axis, square_density,
    sum_interval_masses, uniform_density, uniform_sum_pdf, CarrierCdf, TransformOptions,
    DEFAULT_NODES_1D,
};
