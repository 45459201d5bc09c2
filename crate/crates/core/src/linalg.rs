//! Dense helpers on top of nalgebra.

use crate::C64;
use nalgebra::DMatrix;

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `max_{ij} |(Q* Q − I)_{ij}|`.
pub fn unitarity_defect(q: &DMatrix<C64>) -> f64 {
    let g = q.adjoint() * q;
    let mut worst = 0.0f64;
    for ((i, j), v) in g
        .iter()
        .enumerate()
        .map(|(k, v)| ((k % g.nrows(), k / g.nrows()), v))
    {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - C64::new(target, 0.0)).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(3.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, -4.0),
            ],
        );
        assert!((operator_norm(&m) - 4.0).abs() < 1e-12);
        let id = DMatrix::<C64>::identity(3, 3);
        assert!(unitarity_defect(&id) < 1e-15);
        assert!((unitarity_defect(&(id * C64::new(2.0, 0.0))) - 3.0).abs() < 1e-12);
    }
}
