//! Time evolution `ψ_n = U^n ψ` and position moments `‖|X|^p ψ_n‖`.

use crate::error::{Error, Result};
use crate::lattice::{BoxSpec, IndexMap, Site};
use crate::mc::TrialRunner;
use crate::operator::{build_network, sample_disorder, NetworkOperator, PhaseAngle};
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and inherent float methods win
use num_traits::Float;
use num_traits::Zero;

/// Probability mass near the periodic seam above which a run is flagged.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

/// A state on the region of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    map: IndexMap,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `e_site`.
    pub fn basis(map: &IndexMap, site: Site) -> Result<Self> {
        Self::from_entries(map, &[(site, C64::new(1.0, 0.0))])
    }

    /// A compactly supported state; repeated sites add up.
    pub fn from_entries(map: &IndexMap, entries: &[(Site, C64)]) -> Result<Self> {
        let mut amplitudes = vec![C64::zero(); map.len()];
        for &(site, a) in entries {
            let i = map.index_of(site).ok_or(Error::SiteOutside(site))?;
            amplitudes[i] += a;
        }
        Ok(StateVector {
            map: map.clone(),
            amplitudes,
        })
    }

    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, site: Site) -> C64 {
        self.map
            .index_of(site)
            .map_or(C64::zero(), |i| self.amplitudes[i])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n.is_nan() || n <= 0.0 {
            return Err(Error::Parameter("cannot normalize the zero state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    /// Mass on sites within `band` of a periodic window edge.
    pub fn seam_mass(&self, band: i64) -> f64 {
        let g = self.map.geometry();
        let (x0, x1) = g.x_range();
        let (y0, y1) = g.y_range();
        self.map
            .sites()
            .iter()
            .zip(&self.amplitudes)
            .filter(|(s, _)| {
                (g.periodic_x() && (s.m - x0 < band || x1 - s.m < band))
                    || (g.periodic_y() && (s.n - y0 < band || y1 - s.n < band))
            })
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn check_support(op: &NetworkOperator, psi: &StateVector) -> Result<()> {
    if op.map() != psi.map() {
        return Err(Error::Geometry(format!(
            "state lives on {:?}, operator on {:?}",
            psi.map().geometry(),
            op.geometry()
        )));
    }
    Ok(())
}

/// `U^steps ψ`; negative `steps` apply `U*`.
pub fn evolve(op: &NetworkOperator, psi: &StateVector, steps: i64) -> Result<StateVector> {
    check_support(op, psi)?;
    let mut cur = psi.amplitudes.clone();
    let mut next = vec![C64::zero(); cur.len()];
    for _ in 0..steps.unsigned_abs() {
        if steps > 0 {
            op.apply(&cur, &mut next);
        } else {
            op.apply_adjoint(&cur, &mut next);
        }
        core::mem::swap(&mut cur, &mut next);
    }
    Ok(StateVector {
        map: psi.map.clone(),
        amplitudes: cur,
    })
}

/// `‖|X|^p ψ‖ = (Σ_μ |μ|^{2p} |ψ_μ|²)^{1/2}`, `|μ|` measured from the lattice origin.
pub fn moment(psi: &StateVector, p: f64) -> f64 {
    psi.map
        .sites()
        .iter()
        .zip(&psi.amplitudes)
        .map(|(s, a)| s.norm().powf(2.0 * p) * a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖|X|^p ψ_n‖` for `n = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSeries {
    pub p: f64,
    pub phi: f64,
    pub seed: Option<u64>,
    pub moment_p: Vec<f64>,
    /// Seam mass at each recorded time.
    pub leakage: Vec<f64>,
    /// `max_n | ‖ψ_n‖ − 1 |`.
    pub norm_drift: f64,
}

impl SpreadSeries {
    pub fn horizon(&self) -> usize {
        self.moment_p.len() - 1
    }

    /// Any recorded time where the seam mass exceeded [`LEAKAGE_THRESHOLD`].
    pub fn leaked(&self) -> bool {
        self.leakage.iter().any(|&l| l > LEAKAGE_THRESHOLD)
    }

    /// First time the seam mass exceeded [`LEAKAGE_THRESHOLD`].
    pub fn first_leak(&self) -> Option<usize> {
        self.leakage.iter().position(|&l| l > LEAKAGE_THRESHOLD)
    }

    /// `(max over n ∈ [0, T/2], max over n ∈ [T/2, T])`.
    pub fn early_late_max(&self) -> (f64, f64) {
        let half = self.horizon() / 2;
        let early = self.moment_p[..=half].iter().copied().fold(0.0, f64::max);
        let late = self.moment_p[half..].iter().copied().fold(0.0, f64::max);
        (early, late)
    }

    /// Late maximum over early maximum.
    pub fn plateau_ratio(&self) -> f64 {
        let (early, late) = self.early_late_max();
        late / early
    }

    pub fn final_value(&self) -> f64 {
        *self.moment_p.last().expect("series holds time 0")
    }
}

/// Width (in sites) of the band along the periodic seam watched for leakage.
pub const SEAM_BAND: i64 = 2;

/// Records `‖|X|^p U^n ψ_0‖` and the seam mass for `n = 0..=horizon`.
pub fn spread_run(
    op: &NetworkOperator,
    psi0: &StateVector,
    p: f64,
    horizon: usize,
) -> Result<SpreadSeries> {
    check_support(op, psi0)?;
    if p.is_nan() || p < 0.0 {
        return Err(Error::Parameter(format!(
            "moment order must be nonnegative, got {p}"
        )));
    }
    let norm0 = psi0.norm();
    let mut psi = psi0.clone();
    let mut next = vec![C64::zero(); psi.amplitudes.len()];
    let mut moment_p = Vec::with_capacity(horizon + 1);
    let mut leakage = Vec::with_capacity(horizon + 1);
    let mut drift = 0.0f64;
    for n in 0..=horizon {
        moment_p.push(moment(&psi, p));
        leakage.push(psi.seam_mass(SEAM_BAND));
        drift = drift.max((psi.norm() - norm0).abs());
        if n < horizon {
            op.apply(&psi.amplitudes, &mut next);
            core::mem::swap(&mut psi.amplitudes, &mut next);
        }
    }
    Ok(SpreadSeries {
        p,
        phi: op.phi().radians(),
        seed: op.seed(),
        moment_p,
        leakage,
        norm_drift: drift,
    })
}

/// One spreading series per disorder seed, each started from the normalized
/// state with the given entries (e.g. `[(origin, 1)]`).
pub fn spread_experiment<R: TrialRunner + ?Sized>(
    phi: PhaseAngle,
    geometry: &BoxSpec,
    p: f64,
    horizon: usize,
    seeds: &[u64],
    initial: &[(Site, C64)],
    runner: &R,
) -> Result<Vec<SpreadSeries>> {
    let psi0 = StateVector::from_entries(&IndexMap::new(*geometry), initial)?.normalized()?;
    let out = runner.run(seeds.len() as u64, |i| {
        let u = build_network(&sample_disorder(seeds[i as usize], geometry), phi, geometry)?;
        spread_run(&u, &psi0, p, horizon)
    });
    out.into_iter().collect()
}

/// Median of a slice (mean of the middle two for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
