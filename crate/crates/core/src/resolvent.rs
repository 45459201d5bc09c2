//! Resolvents `R(z) = (U − z)^{-1}`, their fractional moments, eigenfunction
//! correlators and exponential-decay fits.

use crate::error::{Error, Result};
use crate::lattice::{block_anchor, check_margin, neighborhood, BoxSpec, IndexMap, Mode, Site};
use crate::linalg::unitarity_defect;
use crate::mc::{batch_means, mean_stderr, run_seeded, Estimate, TrialRunner};
use crate::operator::{build_network, sample_disorder, NetworkOperator, PhaseAngle};
use crate::spectral::{diagonalize, Spectrum, SPECTRUM_TOL};
use crate::C64;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, Dyn, LU};
#[allow(unused_imports)] // unused when std is linked and inherent float methods win
use num_traits::Float;
use num_traits::Zero;

/// Residual bound accepted for a resolvent column.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Number of batches for batch-means standard errors.
pub const BATCHES: usize = 20;

/// A point `z ∉ T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    z: C64,
}

impl SpectralParameter {
    pub fn new(z: C64) -> Result<Self> {
        if !z.norm().is_finite() || z.norm() == 1.0 {
            return Err(Error::Parameter(format!("z = {z} lies on the unit circle")));
        }
        Ok(SpectralParameter { z })
    }

    /// `z = ρ e^{iθ}`.
    pub fn polar(rho: f64, theta: f64) -> Result<Self> {
        Self::new(C64::from_polar(rho, theta))
    }

    pub fn z(self) -> C64 {
        self.z
    }

    pub fn rho(self) -> f64 {
        self.z.norm()
    }

    pub fn theta(self) -> f64 {
        self.z.arg()
    }

    /// `| |z| − 1 |`.
    pub fn distance_to_circle(self) -> f64 {
        (self.z.norm() - 1.0).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolventMethod {
    /// Whichever of the two is cheaper for the operator size and `|z|`.
    #[default]
    Auto,
    /// Dense LU factorisation of `U − z`.
    Dense,
    /// Geometric series in `U/z` (`|z| > 1`) or `z U*` (`|z| < 1`).
    Neumann,
}

enum Kind {
    Dense(LU<C64, Dyn, Dyn>),
    Neumann { terms: usize },
}

/// Solves `(U − z) x = e_ν` for any number of `ν`.
pub struct ResolventSolver<'a> {
    op: &'a NetworkOperator,
    z: SpectralParameter,
    kind: Kind,
}

fn neumann_terms(z: SpectralParameter) -> usize {
    let rho = z.rho();
    let q = if rho > 1.0 { 1.0 / rho } else { rho };
    let target = 1e-16 * (1.0 - q);
    (target.ln() / q.ln()).ceil() as usize + 1
}

impl<'a> ResolventSolver<'a> {
    pub fn new(op: &'a NetworkOperator, z: SpectralParameter, method: ResolventMethod) -> Self {
        let dim = op.dim();
        let method = match method {
            ResolventMethod::Auto => {
                let series = neumann_terms(z).saturating_mul(op.matrix().nnz().max(1));
                let dense = dim.saturating_mul(dim).saturating_mul(dim);
                if series < dense {
                    ResolventMethod::Neumann
                } else {
                    ResolventMethod::Dense
                }
            }
            m => m,
        };
        let kind = match method {
            ResolventMethod::Dense => {
                let mut m = op.matrix().to_dense();
                for i in 0..dim {
                    m[(i, i)] -= z.z();
                }
                Kind::Dense(m.lu())
            }
            _ => Kind::Neumann {
                terms: neumann_terms(z),
            },
        };
        ResolventSolver { op, z, kind }
    }

    pub fn method(&self) -> ResolventMethod {
        match self.kind {
            Kind::Dense(_) => ResolventMethod::Dense,
            Kind::Neumann { .. } => ResolventMethod::Neumann,
        }
    }

    /// Column `R e_ν`, in the dense order of the operator's region.
    pub fn column(&self, nu: usize) -> Result<Vec<C64>> {
        let dim = self.op.dim();
        let z = self.z.z();
        let x: Vec<C64> = match &self.kind {
            Kind::Dense(lu) => {
                let mut rhs = DVector::zeros(dim);
                rhs[nu] = C64::new(1.0, 0.0);
                match lu.solve(&rhs) {
                    Some(x) => x.iter().copied().collect(),
                    None => {
                        return Err(Error::NearSingular {
                            residual: f64::INFINITY,
                            gap: self.z.distance_to_circle(),
                        })
                    }
                }
            }
            Kind::Neumann { terms } => {
                let mut x = vec![C64::zero(); dim];
                let mut v = vec![C64::zero(); dim];
                let mut next = vec![C64::zero(); dim];
                v[nu] = C64::new(1.0, 0.0);
                if self.z.rho() > 1.0 {
                    // −Σ U^n e_ν / z^{n+1}
                    let mut c = -z.inv();
                    for _ in 0..*terms {
                        x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi += c * vi);
                        self.op.apply(&v, &mut next);
                        core::mem::swap(&mut v, &mut next);
                        c /= z;
                    }
                } else {
                    // Σ z^n (U*)^{n+1} e_ν
                    let mut c = C64::new(1.0, 0.0);
                    for _ in 0..*terms {
                        self.op.apply_adjoint(&v, &mut next);
                        core::mem::swap(&mut v, &mut next);
                        x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi += c * vi);
                        c *= z;
                    }
                }
                x
            }
        };
        let mut x = x;
        let mut residual = self.residual(&x, nu);
        if let (Kind::Dense(lu), false) = (&self.kind, residual <= RESIDUAL_TOL) {
            // one step of iterative refinement
            let r = self.residual_vector(&x, nu);
            if let Some(dx) = lu.solve(&DVector::from_vec(r)) {
                x.iter_mut().zip(dx.iter()).for_each(|(xi, d)| *xi -= d);
                residual = self.residual(&x, nu);
            }
        }
        if residual.is_nan() || residual > RESIDUAL_TOL {
            return Err(Error::NearSingular {
                residual,
                gap: self.z.distance_to_circle(),
            });
        }
        Ok(x)
    }

    fn residual_vector(&self, x: &[C64], nu: usize) -> Vec<C64> {
        let mut ux = vec![C64::zero(); x.len()];
        self.op.apply(x, &mut ux);
        ux.iter_mut().zip(x).for_each(|(a, b)| *a -= self.z.z() * b);
        ux[nu] -= C64::new(1.0, 0.0);
        ux
    }

    /// `‖(U − z) x − e_ν‖`.
    pub fn residual(&self, x: &[C64], nu: usize) -> f64 {
        self.residual_vector(x, nu)
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `⟨e_μ, (U − z)^{-1} e_ν⟩`.
pub fn resolvent_element(
    op: &NetworkOperator,
    z: SpectralParameter,
    mu: Site,
    nu: Site,
) -> Result<C64> {
    let m = op.map().index_of(mu).ok_or(Error::SiteOutside(mu))?;
    let n = op.map().index_of(nu).ok_or(Error::SiteOutside(nu))?;
    let solver = ResolventSolver::new(op, z, ResolventMethod::Auto);
    Ok(solver.column(n)?[m])
}

/// Monte Carlo estimate of `E |⟨e_μ, R e_ν⟩|^s` for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRecord {
    pub mu: Site,
    pub nu: Site,
    pub s: f64,
    pub z: SpectralParameter,
    pub phi: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Trials that entered the estimate.
    pub trials: usize,
    /// Trials whose solve failed the residual check.
    pub dropped: usize,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!(
            "fractional exponent must lie in (0, 1), got {s}"
        )));
    }
    Ok(())
}

/// Fractional moments of resolvent elements of `U_ω(φ)` on `geometry` (walls for
/// boxes and strips, periodic for tori), averaged over `trials` disorder samples.
#[allow(clippy::too_many_arguments)]
pub fn fractional_moment_mc<R: TrialRunner + ?Sized>(
    phi: PhaseAngle,
    z: SpectralParameter,
    s: f64,
    pairs: &[(Site, Site)],
    geometry: &BoxSpec,
    trials: u64,
    seed: u64,
    runner: &R,
) -> Result<Vec<MomentRecord>> {
    check_s(s)?;
    if trials < 100 {
        return Err(Error::Parameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let map = IndexMap::new(*geometry);
    let mut idx = Vec::with_capacity(pairs.len());
    for &(mu, nu) in pairs {
        let m = map.index_of(mu).ok_or(Error::SiteOutside(mu))?;
        let n = map.index_of(nu).ok_or(Error::SiteOutside(nu))?;
        idx.push((m, n));
    }
    let columns: BTreeSet<usize> = idx.iter().map(|&(_, n)| n).collect();
    let outcomes = run_seeded(runner, seed, trials, |ts| -> Result<Option<Vec<f64>>> {
        let u = build_network(&sample_disorder(ts, geometry), phi, geometry)?;
        let solver = ResolventSolver::new(&u, z, ResolventMethod::Auto);
        let mut cols = BTreeMap::new();
        for &n in &columns {
            match solver.column(n) {
                Ok(c) => {
                    cols.insert(n, c);
                }
                Err(Error::NearSingular { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(
            idx.iter()
                .map(|&(m, n)| cols[&n][m].norm().powf(s))
                .collect(),
        ))
    });
    let mut per_pair: Vec<Vec<f64>> = vec![Vec::with_capacity(trials as usize); pairs.len()];
    let mut dropped = 0usize;
    for o in outcomes {
        match o? {
            Some(vals) => vals
                .into_iter()
                .zip(per_pair.iter_mut())
                .for_each(|(v, acc)| acc.push(v)),
            None => dropped += 1,
        }
    }
    Ok(pairs
        .iter()
        .zip(per_pair)
        .map(|(&(mu, nu), vals)| {
            let e = batch_means(&vals, BATCHES);
            MomentRecord {
                mu,
                nu,
                s,
                z,
                phi: phi.radians(),
                estimate: e.mean,
                stderr: e.stderr,
                trials: e.samples,
                dropped,
            }
        })
        .collect())
}

/// `Q(μ, ν) = Σ_k |⟨e_μ, ψ_k⟩| |⟨ψ_k, e_ν⟩|`.
///
/// For a finite unitary with orthonormal eigenbasis this is
/// `sup_{‖f‖_∞ ≤ 1} |⟨e_μ, f(U) e_ν⟩|`.
pub fn correlator(spectrum: &Spectrum) -> Result<DMatrix<f64>> {
    let vectors = checked_vectors(spectrum)?;
    let a = vectors.map(|v| v.norm());
    Ok(&a * a.transpose())
}

fn checked_vectors(spectrum: &Spectrum) -> Result<&DMatrix<C64>> {
    let vectors = spectrum
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::Parameter("spectrum carries no eigenvectors".into()))?;
    let defect = unitarity_defect(vectors);
    if defect > SPECTRUM_TOL {
        return Err(Error::Eigensolver(format!(
            "eigenbasis not orthonormal (defect {defect:e})"
        )));
    }
    Ok(vectors)
}

/// Single correlator entry from an eigenvector matrix, by dense index.
pub fn correlator_entry(vectors: &DMatrix<C64>, mu: usize, nu: usize) -> f64 {
    (0..vectors.ncols())
        .map(|k| vectors[(mu, k)].norm() * vectors[(nu, k)].norm())
        .sum()
}

/// Per-pair correlator samples over a disorder ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorEnsemble {
    pub pairs: Vec<(Site, Site)>,
    /// Distance of each pair (Euclidean, shortest image on periodic directions).
    pub distances: Vec<f64>,
    /// `values[trial][pair]`.
    pub values: Vec<Vec<f64>>,
    pub dropped: usize,
}

impl CorrelatorEnsemble {
    /// `(distance, value)` for every pair of every retained trial.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .flat_map(|row| self.distances.iter().copied().zip(row.iter().copied()))
            .collect()
    }

    pub fn pair_means(&self) -> Vec<Estimate> {
        (0..self.pairs.len())
            .map(|p| mean_stderr(&self.values.iter().map(|row| row[p]).collect::<Vec<_>>()))
            .collect()
    }
}

/// Eigenfunction correlators of `U_ω(φ)` on `geometry` for the given pairs.
pub fn correlator_mc<R: TrialRunner + ?Sized>(
    phi: PhaseAngle,
    geometry: &BoxSpec,
    pairs: &[(Site, Site)],
    trials: u64,
    seed: u64,
    runner: &R,
) -> Result<CorrelatorEnsemble> {
    let map = IndexMap::new(*geometry);
    let mut idx = Vec::with_capacity(pairs.len());
    for &(mu, nu) in pairs {
        idx.push((
            map.index_of(mu).ok_or(Error::SiteOutside(mu))?,
            map.index_of(nu).ok_or(Error::SiteOutside(nu))?,
        ));
    }
    let outcomes = run_seeded(runner, seed, trials, |ts| -> Result<Option<Vec<f64>>> {
        let u = build_network(&sample_disorder(ts, geometry), phi, geometry)?;
        let sp = match diagonalize(&u, crate::spectral::DENSE_LIMIT) {
            Ok(sp) => sp,
            Err(Error::Eigensolver(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let vectors = checked_vectors(&sp)?;
        Ok(Some(
            idx.iter()
                .map(|&(m, n)| correlator_entry(vectors, m, n))
                .collect(),
        ))
    });
    let mut values = Vec::new();
    let mut dropped = 0;
    for o in outcomes {
        match o? {
            Some(v) => values.push(v),
            None => dropped += 1,
        }
    }
    Ok(CorrelatorEnsemble {
        pairs: pairs.to_vec(),
        distances: pairs
            .iter()
            .map(|&(a, b)| geometry.distance_euclid(a, b))
            .collect(),
        values,
        dropped,
    })
}

/// Sample pairs from `origin` along the axes and diagonals with rounded
/// Euclidean distance in `[d_min, d_max]`.
pub fn axis_diagonal_pairs(
    geometry: &BoxSpec,
    origin: Site,
    d_min: u32,
    d_max: u32,
) -> Vec<(Site, Site)> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let dirs = [
        (1, 0),
        (0, 1),
        (-1, 0),
        (0, -1),
        (1, 1),
        (-1, 1),
        (1, -1),
        (-1, -1),
    ];
    for &(dx, dy) in &dirs {
        for k in 1..=i64::from(d_max) {
            let target = origin.offset(dx * k, dy * k);
            let Some(c) = geometry.canonical(target) else {
                break;
            };
            let d = libm::round(geometry.distance_euclid(origin, c));
            if d < f64::from(d_min) || d > f64::from(d_max) {
                continue;
            }
            if seen.insert(c) {
                out.push((origin, c));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBin {
    pub distance: f64,
    pub mean: f64,
    pub count: usize,
}

/// Least-squares fit of `log(mean) = log c − g · d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// Normal-approximation 95% interval for `rate`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub bins: Vec<DecayBin>,
    /// Bin distances left out for having too few samples or a non-positive mean.
    pub excluded: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub min_bin_samples: usize,
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_bin_samples: 30,
            d_min: 0.0,
            d_max: f64::INFINITY,
        }
    }
}

/// Bins `(distance, value)` samples by rounded distance and fits the bin means.
pub fn fit_decay(samples: &[(f64, f64)], opts: FitOptions) -> Result<DecayFit> {
    let records: Vec<(f64, f64, usize)> = samples.iter().map(|&(d, v)| (d, v, 1)).collect();
    fit_decay_weighted(&records, opts)
}

/// Like [`fit_decay`] for `(distance, mean, count)` records that are already
/// averages over `count` samples; a bin's mean is the count-weighted mean.
pub fn fit_decay_weighted(records: &[(f64, f64, usize)], opts: FitOptions) -> Result<DecayFit> {
    let mut bins: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &(d, v, count) in records {
        if !v.is_finite() {
            return Err(Error::Fit(format!("non-finite sample at distance {d}")));
        }
        let key = libm::round(d) as i64;
        if (key as f64) < opts.d_min || (key as f64) > opts.d_max {
            continue;
        }
        let e = bins.entry(key).or_insert((0.0, 0));
        e.0 += v * count as f64;
        e.1 += count;
    }
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (&k, &(sum, count)) in &bins {
        let mean = sum / count as f64;
        if count < opts.min_bin_samples || mean.is_nan() || mean <= 0.0 {
            excluded.push(k as f64);
        } else {
            used.push(DecayBin {
                distance: k as f64,
                mean,
                count,
            });
        }
    }
    if used.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 distance bins with {} samples and positive mean, got {}",
            opts.min_bin_samples,
            used.len()
        )));
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|b| b.distance).collect();
    let ys: Vec<f64> = used.iter().map(|b| b.mean.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let rate = -slope;
    Ok(DecayFit {
        rate,
        prefactor: intercept.exp(),
        r_squared,
        ci_low: rate - 1.96 * se,
        ci_high: rate + 1.96 * se,
        d_min: xs[0],
        d_max: xs[xs.len() - 1],
        bins: used,
        excluded,
    })
}

/// Empirical check of the one-step contraction
/// `E|R(μ,ν)|^s ≤ q · max_{β ∈ N∂((Λ_L + [μ])^c)} E|R(β,ν)|^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// The maximising `β`.
    pub argmax: Site,
    /// `lhs / rhs`, or `0` when the left side vanishes.
    pub q_hat: f64,
    pub neighborhood: Vec<Site>,
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSetup {
    pub l1: u32,
    pub l2: u32,
    pub ambient: BoxSpec,
    pub mu: Site,
    pub nu: Site,
    pub s: f64,
    pub z: SpectralParameter,
}

impl ContractionSetup {
    pub fn inner(&self) -> Result<BoxSpec> {
        BoxSpec::boxed(self.l1, self.l2)?.with_offset(block_anchor(self.mu))
    }

    /// `N(∂((Λ_L + [μ])^c))` inside the ambient torus, canonicalised.
    pub fn neighborhood(&self) -> Result<Vec<Site>> {
        if self.ambient.mode != Mode::Torus {
            return Err(Error::Geometry(
                "the contraction check needs a torus ambient".into(),
            ));
        }
        let inner = self.inner()?;
        check_margin(&inner, &self.ambient)?;
        let comp = IndexMap::with_hole(self.ambient, inner)?;
        let nu = self
            .ambient
            .canonical(self.nu)
            .ok_or(Error::SiteOutside(self.nu))?;
        if !comp.interior().contains(&nu) {
            return Err(Error::Geometry(format!(
                "ν = {} is not in the interior of the complement",
                self.nu
            )));
        }
        let ring = comp.boundary();
        let set: BTreeSet<Site> = neighborhood(&ring)
            .into_iter()
            .filter_map(|b| self.ambient.canonical(b))
            .collect();
        Ok(set.into_iter().collect())
    }
}

pub fn iteration_contraction_check<R: TrialRunner + ?Sized>(
    phi: PhaseAngle,
    setup: &ContractionSetup,
    trials: u64,
    seed: u64,
    runner: &R,
) -> Result<ContractionReport> {
    check_s(setup.s)?;
    let betas = setup.neighborhood()?;
    let ambient = setup.ambient;
    let map = IndexMap::new(ambient);
    let mu = map.index_of(setup.mu).ok_or(Error::SiteOutside(setup.mu))?;
    let nu = map.index_of(setup.nu).ok_or(Error::SiteOutside(setup.nu))?;
    let beta_idx: Vec<usize> = betas
        .iter()
        .map(|&b| map.index_of(b).expect("canonical site"))
        .collect();
    let s = setup.s;
    let outcomes = run_seeded(
        runner,
        seed,
        trials,
        |ts| -> Result<Option<(f64, Vec<f64>)>> {
            let u = build_network(&sample_disorder(ts, &ambient), phi, &ambient)?;
            let solver = ResolventSolver::new(&u, setup.z, ResolventMethod::Auto);
            let col = match solver.column(nu) {
                Ok(c) => c,
                Err(Error::NearSingular { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            Ok(Some((
                col[mu].norm().powf(s),
                beta_idx.iter().map(|&b| col[b].norm().powf(s)).collect(),
            )))
        },
    );
    let mut lhs_vals = Vec::new();
    let mut beta_vals: Vec<Vec<f64>> = vec![Vec::new(); betas.len()];
    let mut dropped = 0;
    for o in outcomes {
        match o? {
            Some((l, bs)) => {
                lhs_vals.push(l);
                bs.into_iter()
                    .zip(beta_vals.iter_mut())
                    .for_each(|(v, acc)| acc.push(v));
            }
            None => dropped += 1,
        }
    }
    let lhs = batch_means(&lhs_vals, BATCHES);
    let (arg, rhs) = beta_vals
        .iter()
        .enumerate()
        .map(|(i, v)| (i, batch_means(v, BATCHES)))
        .fold(
            (
                0,
                Estimate {
                    mean: f64::NEG_INFINITY,
                    stderr: 0.0,
                    samples: 0,
                },
            ),
            |best, cur| {
                if cur.1.mean > best.1.mean {
                    cur
                } else {
                    best
                }
            },
        );
    let q_hat = if lhs.mean == 0.0 {
        0.0
    } else {
        lhs.mean / rhs.mean
    };
    Ok(ContractionReport {
        lhs,
        rhs,
        argmax: betas[arg],
        q_hat,
        neighborhood: betas,
        dropped,
    })
}
