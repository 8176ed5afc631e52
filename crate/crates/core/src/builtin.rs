//! Built-in example systems.

use crate::error::Result;
use crate::group::GroupData;
use crate::linalg::Matrix;
use crate::polymap::TruncatedMap;

/// Generalized binomial coefficient C(a, i) for real a.
fn binom(a: f64, i: u32) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (a - j as f64) / (j + 1) as f64)
}

/// Taylor coefficients of (1+x)^a (1+y)^b − 1 up to total degree `order`.
fn shifted_power(a: f64, b: f64, comp: usize, order: usize, out: &mut TruncatedMap) {
    for d in 1..=order as u32 {
        for i in 0..=d {
            let c = binom(a, i) * binom(b, d - i);
            if c != 0.0 {
                out.add_coeff(comp, &[i, d - i], c);
            }
        }
    }
}

/// The map (x, y) ↦ (x³/y², x²/y) on the open first quadrant, shifted so
/// that its fixed point (1, 1) sits at the origin, truncated at `order`.
/// Reversible under the coordinate swap; it has the line y = x of fixed
/// points.
pub fn quadrant_map(order: usize) -> TruncatedMap {
    let mut m = TruncatedMap::zero(2, order.max(1));
    shifted_power(3.0, -2.0, 0, order.max(1), &mut m);
    shifted_power(2.0, -1.0, 1, order.max(1), &mut m);
    m
}

/// Exact evaluation of the shifted quadrant map.
pub fn quadrant_map_exact(x: &[f64]) -> [f64; 2] {
    let (u, v) = (1.0 + x[0], 1.0 + x[1]);
    [u.powi(3) / (v * v) - 1.0, u * u / v - 1.0]
}

pub fn swap_matrix() -> Matrix {
    Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// {I, R} with R the coordinate swap acting as a reversing symmetry.
pub fn quadrant_group() -> Result<GroupData> {
    GroupData::new(vec![Matrix::identity(2, 2), swap_matrix()], vec![1, -1])
}
