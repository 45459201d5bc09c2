//! Spectra of finite restrictions and spectral-gap statistics.
//!
//! At `φ = 0` every counterclockwise block is invariant and
//! `(U^{j,k})⁴ = det D^{j,k} · I`, so the spectrum is known in closed form:
//! each block contributes `d^{1/4} · i^m`, `m = 0..3`, with `d` the product of
//! its four phases. Since `d` is uniform on the circle, the probability that
//! no eigenvalue of a box falls into an arc of normalized length `ℓ < 1/4` is
//! `(1 − 4ℓ)^N` for `N` blocks.

use crate::error::{Error, Result};
use crate::lattice::BoxSpec;
use crate::linalg::unitarity_defect;
use crate::mc::{binomial, run_seeded, TrialRunner};
use crate::operator::{sample_disorder, DisorderField, NetworkOperator};
use crate::C64;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{linalg::Schur, DMatrix};
#[allow(unused_imports)] // unused when std is linked and inherent float methods win
use num_traits::Float;

/// Default dimension cap for dense eigen-decompositions.
pub const DENSE_LIMIT: usize = 2048;

/// Unit-modulus tolerance for eigenvalues and eigenvector unitarity.
pub const SPECTRUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Columns are orthonormal eigenvectors, in the dense order of the region.
    pub eigenvectors: Option<DMatrix<C64>>,
    pub geometry: BoxSpec,
    pub phi: f64,
    pub seed: Option<u64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `dist(z, σ)`.
    pub fn distance_to(&self, z: C64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| (l - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn gap_event(&self, z: C64, eta: f64) -> GapEvent {
        GapEvent {
            z,
            eta,
            hit: self.distance_to(z) <= eta,
        }
    }
}

/// Whether the spectrum comes within `eta` of the test point `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEvent {
    pub z: C64,
    pub eta: f64,
    pub hit: bool,
}

/// Dense eigen-decomposition of a finite unitary.
///
/// For a normal matrix the complex Schur form is diagonal, so the Schur vectors
/// are eigenvectors; the size of the strictly upper part of the triangular
/// factor is checked instead of assumed.
pub fn diagonalize(u: &NetworkOperator, dense_limit: usize) -> Result<Spectrum> {
    let dim = u.dim();
    if dim > dense_limit {
        return Err(Error::DenseLimit {
            dim,
            limit: dense_limit,
        });
    }
    let (eigenvalues, vectors) = unitary_eigen(u.matrix().to_dense())?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
        geometry: *u.geometry(),
        phi: u.phi().radians(),
        seed: u.seed(),
    })
}

/// Eigenvalues and eigenvectors of a dense unitary matrix.
pub fn unitary_eigen(m: DMatrix<C64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok((Vec::new(), m));
    }
    let schur = Schur::try_new(m, f64::EPSILON, 1000 * dim).ok_or_else(|| {
        Error::Eigensolver(format!(
            "Schur iteration did not converge (dimension {dim})"
        ))
    })?;
    let (q, t) = schur.unpack();
    let mut off = 0.0f64;
    for j in 0..dim {
        for i in 0..j {
            off = off.max(t[(i, j)].norm());
        }
    }
    if off > SPECTRUM_TOL {
        return Err(Error::Eigensolver(format!(
            "triangular factor not diagonal (max off-diagonal {off:e}); matrix is not normal"
        )));
    }
    let eigenvalues: Vec<C64> = (0..dim).map(|i| t[(i, i)]).collect();
    let modulus = eigenvalues
        .iter()
        .map(|l| (l.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if modulus > SPECTRUM_TOL {
        return Err(Error::Eigensolver(format!(
            "eigenvalue off the unit circle by {modulus:e}"
        )));
    }
    let defect = unitarity_defect(&q);
    if defect > SPECTRUM_TOL {
        return Err(Error::Eigensolver(format!(
            "eigenvector basis not orthonormal (defect {defect:e})"
        )));
    }
    Ok((eigenvalues, q))
}

/// Closed-form spectrum of `U_ω(0)` on `geometry`, block by block.
pub fn phi0_spectrum(disorder: &DisorderField, geometry: &BoxSpec) -> Result<Spectrum> {
    let mut eigenvalues = Vec::with_capacity(geometry.site_count());
    for block in geometry.blocks() {
        let mut d = C64::new(1.0, 0.0);
        for site in block.sites() {
            d *= disorder
                .phase(site)
                .ok_or(crate::Error::MissingPhase(site))?;
        }
        let root = C64::from_polar(1.0, d.arg() / 4.0);
        let mut rot = C64::new(1.0, 0.0);
        for _ in 0..4 {
            eigenvalues.push(root * rot);
            rot *= C64::new(0.0, 1.0);
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: None,
        geometry: *geometry,
        phi: 0.0,
        seed: disorder.seed(),
    })
}

fn angle(z: C64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Largest distance between paired eigenvalues after sorting both lists by
/// angle, minimised over small cyclic alignments (pairs may straddle angle 0).
/// Returns `None` for lists of different length.
pub fn matched_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let sort = |v: &[C64]| {
        let mut v = v.to_vec();
        v.sort_by(|x, y| angle(*x).total_cmp(&angle(*y)));
        v
    };
    let (a, b) = (sort(a), sort(b));
    let n = a.len();
    let best = [0usize, 1, 2, n - 1, n.saturating_sub(2)]
        .iter()
        .map(|&shift| {
            (0..n)
                .map(|i| (a[i] - b[(i + shift) % n]).norm())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Some(best)
}

/// Normalized length `ℓ` of the arc `B_η(z) ∩ T`.
///
/// Requires the disc to reach the circle, `| |z| − 1 | ≤ η`; for `|z| = 1` this
/// is `(2/π)·arcsin(η/2)`.
pub fn arc_measure(z: C64, eta: f64) -> Result<f64> {
    let rho = z.norm();
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    if (rho - 1.0).abs() > eta {
        return Err(Error::Parameter(format!(
            "the disc of radius {eta} around |z| = {rho} misses the unit circle"
        )));
    }
    if rho == 1.0 {
        return Ok(2.0 / PI * (eta / 2.0).asin());
    }
    let c = (1.0 + rho * rho - eta * eta) / (2.0 * rho);
    Ok(c.clamp(-1.0, 1.0).acos() / PI)
}

/// `P(dist(z, σ) > η) = (1 − 4ℓ)^N` for `N` blocks at `φ = 0`.
pub fn exact_miss_probability(z: C64, eta: f64, blocks: usize) -> Result<f64> {
    let ell = arc_measure(z, eta)?;
    if ell >= 0.25 {
        return Err(Error::ArcRegime(ell));
    }
    Ok((1.0 - 4.0 * ell).powi(blocks as i32))
}

/// The cruder lower bound `(1 − 2η)^N` on the miss probability.
pub fn miss_lower_bound(eta: f64, blocks: usize) -> f64 {
    (1.0 - 2.0 * eta).max(0.0).powi(blocks as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapEstimate {
    /// Monte Carlo frequency of `dist(z, σ) ≤ η`.
    pub hit: f64,
    /// Monte Carlo frequency of `dist(z, σ) > η`.
    pub miss: f64,
    /// Binomial standard error (same for both frequencies).
    pub stderr: f64,
    pub trials: usize,
    /// `(1 − 4ℓ)^N`.
    pub exact_miss: f64,
    /// `(1 − 2η)^N`.
    pub lower_bound_miss: f64,
    pub arc: f64,
    pub blocks: usize,
}

/// Monte Carlo estimate of the gap probability of `U_ω(0)` on `geometry`,
/// reported next to the closed form.
pub fn gap_probability_mc<R: TrialRunner + ?Sized>(
    z: C64,
    eta: f64,
    geometry: &BoxSpec,
    trials: u64,
    seed: u64,
    runner: &R,
) -> Result<GapEstimate> {
    if trials < 100 {
        return Err(Error::Parameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let blocks = geometry.block_count();
    let arc = arc_measure(z, eta)?;
    let exact_miss = exact_miss_probability(z, eta, blocks)?;
    let hits = run_seeded(runner, seed, trials, |s| {
        let w = sample_disorder(s, geometry);
        phi0_spectrum(&w, geometry).map(|sp| sp.gap_event(z, eta).hit)
    });
    let mut count = 0usize;
    for h in hits {
        count += usize::from(h?);
    }
    let est = binomial(count, trials as usize);
    Ok(GapEstimate {
        hit: est.mean,
        miss: 1.0 - est.mean,
        stderr: est.stderr,
        trials: trials as usize,
        exact_miss,
        lower_bound_miss: miss_lower_bound(eta, blocks),
        arc,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Sequential;
    use crate::operator::{build_network, PhaseAngle};
    use alloc::vec;

    #[test]
    fn identity_spectrum() {
        let (vals, vecs) = unitary_eigen(DMatrix::identity(5, 5)).unwrap();
        assert!(vals.iter().all(|l| (l - C64::new(1.0, 0.0)).norm() < 1e-14));
        assert!(unitary_eigen(DMatrix::identity(3, 3) * C64::new(2.0, 0.0)).is_err());
        assert_eq!(vecs.nrows(), 5);
    }

    #[test]
    fn single_block_fourth_roots() {
        let b = BoxSpec::boxed(1, 1).unwrap();
        let w = sample_disorder(17, &b);
        let u = build_network(&w, PhaseAngle::new(0.0), &b).unwrap();
        let sp = diagonalize(&u, DENSE_LIMIT).unwrap();
        for blk in b.blocks() {
            let d: C64 = blk.sites().iter().map(|&s| w.phase(s).unwrap()).product();
            let n = sp
                .eigenvalues
                .iter()
                .filter(|l| (l.powi(4) - d).norm() < 1e-10)
                .count();
            assert_eq!(n, 4);
        }
    }

    #[test]
    fn determinant_identity() {
        let b = BoxSpec::boxed(1, 1).unwrap();
        let w = sample_disorder(3, &b);
        let u = build_network(&w, PhaseAngle::new(0.83), &b).unwrap();
        let sp = diagonalize(&u, DENSE_LIMIT).unwrap();
        let prod: C64 = sp.eigenvalues.iter().product();
        let det = u.matrix().to_dense().determinant();
        let det_d: C64 = w.phases().iter().product();
        let s_op =
            crate::operator::build_s(PhaseAngle::new(0.83), &b, crate::Boundary::Walls).unwrap();
        let det_s = s_op.matrix().to_dense().determinant();
        assert!((prod - det).norm() < 1e-8);
        assert!((prod - det_d * det_s).norm() < 1e-8);
    }

    #[test]
    fn unit_phases_give_roots_of_unity() {
        let b = BoxSpec::boxed(1, 1).unwrap();
        let w = DisorderField::from_fn(b, |_| C64::new(1.0, 0.0));
        let sp = phi0_spectrum(&w, &b).unwrap();
        let expected = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ];
        let mut want = Vec::new();
        for _ in 0..4 {
            want.extend_from_slice(&expected);
        }
        assert!(matched_distance(&sp.eigenvalues, &want).unwrap() < 1e-15);
    }

    #[test]
    fn block_spectrum_matches_dense() {
        let b = BoxSpec::boxed(2, 2).unwrap();
        for seed in 0..5 {
            let w = sample_disorder(seed, &b);
            let dense = diagonalize(
                &build_network(&w, PhaseAngle::new(0.0), &b).unwrap(),
                DENSE_LIMIT,
            )
            .unwrap();
            let exact = phi0_spectrum(&w, &b).unwrap();
            assert!(matched_distance(&dense.eigenvalues, &exact.eigenvalues).unwrap() < 1e-10);
        }
    }

    #[test]
    fn dense_limit_refuses() {
        let b = BoxSpec::boxed(2, 2).unwrap();
        let u = build_network(&sample_disorder(0, &b), PhaseAngle::new(0.1), &b).unwrap();
        assert!(matches!(diagonalize(&u, 10), Err(Error::DenseLimit { .. })));
    }

    #[test]
    fn matched_distance_wraps() {
        let a = [C64::from_polar(1.0, -1e-12), C64::from_polar(1.0, 1.0)];
        let b = [C64::from_polar(1.0, 1e-12), C64::from_polar(1.0, 1.0)];
        assert!(matched_distance(&a, &b).unwrap() < 1e-11);
        assert!(matched_distance(&a, &b[..1]).is_none());
    }

    #[test]
    fn arc_measure_cases() {
        let z = C64::new(1.0, 0.0);
        assert!((arc_measure(z, 0.1).unwrap() - 2.0 / PI * 0.05f64.asin()).abs() < 1e-15);
        // off-circle point: brute-force arc length by sampling the circle
        let z = C64::new(0.0, 1.05);
        let eta = 0.2;
        let n = 2_000_000;
        let inside = (0..n)
            .filter(|&k| {
                (C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / n as f64) - z).norm() <= eta
            })
            .count();
        assert!((arc_measure(z, eta).unwrap() - inside as f64 / n as f64).abs() < 1e-5);
        assert!(arc_measure(C64::new(1.5, 0.0), 0.1).is_err());
        assert!(matches!(
            exact_miss_probability(C64::new(1.0, 0.0), 1.9, 4),
            Err(Error::ArcRegime(_))
        ));
    }

    #[test]
    fn gap_monotone_in_eta() {
        let b = BoxSpec::boxed(2, 2).unwrap();
        for seed in 0..20 {
            let sp = phi0_spectrum(&sample_disorder(seed, &b), &b).unwrap();
            let z = C64::from_polar(1.0, 0.3);
            let etas = [0.001, 0.01, 0.05, 0.1, 0.3];
            for w in etas.windows(2) {
                if sp.gap_event(z, w[0]).hit {
                    assert!(sp.gap_event(z, w[1]).hit);
                }
            }
        }
    }

    #[test]
    fn gap_estimate_small_eta() {
        let b = BoxSpec::boxed(1, 1).unwrap();
        let z = C64::new(1.0, 0.0);
        let e = gap_probability_mc(z, 1e-9, &b, 200, 1, &Sequential).unwrap();
        assert_eq!(e.hit, 0.0);
        assert!(gap_probability_mc(z, 0.1, &b, 50, 1, &Sequential).is_err());
    }
}
