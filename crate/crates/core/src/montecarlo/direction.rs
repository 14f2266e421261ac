//! Direction draws. Ball rejection keeps cube proposals inside the unit ball and
//! normalizes them (uniform on the sphere); cube components are returned raw, so
//! each component is independently uniform on `[-1, 1]`.

use crate::case1::DirectionModel;
use crate::montecarlo::rng::StreamRng;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DirectionStats {
    /// Cube proposals drawn.
    pub proposals: u64,
    /// Directions returned.
    pub accepted: u64,
}

/// A direction whose component along `inward_axis` has the sign of `inward_sign`.
#[inline]
pub fn sample_direction(
    rng: &mut StreamRng,
    model: DirectionModel,
    inward_axis: usize,
    inward_sign: f64,
    stats: &mut DirectionStats,
) -> [f64; 3] {
    loop {
        let mut c = [rng.symmetric(), rng.symmetric(), rng.symmetric()];
        stats.proposals += 1;
        if c[inward_axis] == 0.0 {
            continue;
        }
        if model == DirectionModel::BallRejection {
            let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            if !(r2 > 0.0 && r2 <= 1.0) {
                continue;
            }
            let inv = 1.0 / r2.sqrt();
            c = c.map(|x| x * inv);
        }
        c[inward_axis] = inward_sign * c[inward_axis].abs();
        stats.accepted += 1;
        return c;
    }
}
