//! The random unitary `U_ω(φ) = D_ω S(φ)` and its restrictions.
//!
//! `S(φ) = cos φ · S_⟲ + i sin φ · S_⟳`: each column `e_μ` is sent to
//! `cos φ · e_{⟲(μ)} + i sin φ · e_{⟳(μ)}` where `⟲(μ)`, `⟳(μ)` are the cyclic
//! successors of `μ` in its two blocks.
//!
//! Finite restrictions keep unitarity with elastic walls: wherever the
//! clockwise successor of a site leaves the region, the counterclockwise
//! amplitude is raised from `cos φ` to one. For a box this is exactly the
//! boundary operator `T^{Λ_L}(φ)` returned by [`wall_term`]; for complements and
//! strips the same rule is applied through [`transmission_term`].

use crate::error::{Error, Result};
use crate::lattice::{ccw_successor, check_margin, cw_successor, BoxSpec, IndexMap, Mode, Site};
use crate::seed::site_uniform;
use crate::sparse::SparseMatrix;
use crate::C64;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // unused when std is linked and inherent float methods win
use num_traits::Float;
use num_traits::Zero;

/// Scattering angle with `(t, r) = (cos φ, sin φ)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub fn new(phi: f64) -> Self {
        PhaseAngle(phi)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Transmission amplitude `t = cos φ`.
    pub fn t(self) -> f64 {
        self.0.cos()
    }

    /// Reflection amplitude `r = sin φ`.
    pub fn r(self) -> f64 {
        self.0.sin()
    }

    /// The critical angle `π/4`, where `|t| = |r|`.
    pub fn critical() -> Self {
        PhaseAngle(PI / 4.0)
    }
}

/// Angle for an electron at energy distance `epsilon` from the nearest Landau
/// level: `|t| = 1/√(1 + e^ε)`.
pub fn phi_from_energy(epsilon: f64) -> PhaseAngle {
    let t = 1.0 / (1.0 + epsilon.exp()).sqrt();
    PhaseAngle(t.acos())
}

/// i.i.d. uniform phases `ω_μ` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderField {
    seed: Option<u64>,
    map: IndexMap,
    phases: Vec<C64>,
}

impl DisorderField {
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn geometry(&self) -> &BoxSpec {
        self.map.geometry()
    }

    /// Phases in the dense order of the window.
    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    /// `ω_μ`, wrapping periodic directions.
    pub fn phase(&self, site: Site) -> Option<C64> {
        self.map.index_of(site).map(|i| self.phases[i])
    }

    /// Phases set by an arbitrary function of the site (non-random fields for tests
    /// and shifted copies).
    pub fn from_fn(geometry: BoxSpec, f: impl Fn(Site) -> C64) -> Self {
        let map = IndexMap::new(geometry);
        let phases = map.sites().iter().map(|&s| f(s)).collect();
        DisorderField {
            seed: None,
            map,
            phases,
        }
    }

    /// The shifted field `(Θ_ν ω)_μ = ω_{μ+2ν}`.
    pub fn translated(&self, nu: Site) -> Result<Self> {
        let mut phases = Vec::with_capacity(self.phases.len());
        for &s in self.map.sites() {
            let target = s.offset(2 * nu.m, 2 * nu.n);
            phases.push(self.phase(target).ok_or(Error::MissingPhase(target))?);
        }
        Ok(DisorderField {
            seed: None,
            map: self.map.clone(),
            phases,
        })
    }
}

/// Draws `ω_μ = exp(2πi·u_μ)` with `u_μ` uniform on `[0, 1)`, one counter-based
/// stream per site, so a site's phase depends only on `(seed, μ)`.
pub fn sample_disorder(seed: u64, geometry: &BoxSpec) -> DisorderField {
    let map = IndexMap::new(*geometry);
    let phases = map
        .sites()
        .iter()
        .map(|&s| C64::from_polar(1.0, 2.0 * PI * site_uniform(seed, s)))
        .collect();
    DisorderField {
        seed: Some(seed),
        map,
        phases,
    }
}

/// How the operator is cut off at the edge of its region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Periodic in both directions, no walls.
    FullTorus,
    /// Elastic walls on the edges of a box (all four) or strip (top and bottom).
    Walls,
    /// The ambient window minus `inner`, with elastic walls along both the inner
    /// box and any non-periodic outer edge.
    ComplementWalls { inner: BoxSpec },
    /// `U^{Λ} ⊕ U^{Λ^c}` on the ambient window.
    Decoupled { inner: BoxSpec },
}

/// A unitary (or its deterministic part, `D = I`) on a finite region.
#[derive(Debug, Clone)]
pub struct NetworkOperator {
    map: IndexMap,
    phi: PhaseAngle,
    boundary: Boundary,
    matrix: SparseMatrix,
    seed: Option<u64>,
}

impl NetworkOperator {
    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    pub fn geometry(&self) -> &BoxSpec {
        self.map.geometry()
    }

    pub fn phi(&self) -> PhaseAngle {
        self.phi
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `⟨e_α, U e_β⟩`; zero if either site is outside the region.
    pub fn element(&self, alpha: Site, beta: Site) -> C64 {
        match (self.map.index_of(alpha), self.map.index_of(beta)) {
            (Some(a), Some(b)) => self.matrix.get(a, b),
            _ => C64::zero(),
        }
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec(x, y)
    }

    pub fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.adjoint_matvec(x, y)
    }

    /// `‖U*U − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        self.matrix.gram_deviation()
    }

    /// Assembles an operator from parts, e.g. a matrix read back from a file.
    pub fn from_parts(
        map: IndexMap,
        phi: PhaseAngle,
        boundary: Boundary,
        matrix: SparseMatrix,
        seed: Option<u64>,
    ) -> Result<Self> {
        if matrix.dim() != map.len() {
            return Err(Error::Geometry(format!(
                "matrix dimension {} does not match the region size {}",
                matrix.dim(),
                map.len()
            )));
        }
        Ok(NetworkOperator {
            map,
            phi,
            boundary,
            matrix,
            seed,
        })
    }
}

/// `V^{(L)} = U − U^{(L)}`: the part of `U` coupling a box to its complement.
#[derive(Debug, Clone)]
pub struct CouplingOperator {
    pub matrix: SparseMatrix,
    pub inner: BoxSpec,
    pub ambient: BoxSpec,
    map: IndexMap,
}

impl CouplingOperator {
    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    pub fn nonzero_count(&self) -> usize {
        self.matrix.count_nonzero()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Sites carrying a nonzero row or column.
    pub fn support(&self) -> alloc::collections::BTreeSet<Site> {
        self.matrix
            .triplets()
            .filter(|(_, _, v)| !v.is_zero())
            .flat_map(|(r, c, _)| [self.map.site(r), self.map.site(c)])
            .collect()
    }
}

/// `χ S(φ) χ` on the region of `map`.
fn restricted_s(phi: PhaseAngle, map: &IndexMap) -> SparseMatrix {
    let (t, r) = (phi.t(), phi.r());
    let mut triplets = Vec::with_capacity(2 * map.len());
    for (col, &mu) in map.sites().iter().enumerate() {
        if t != 0.0 {
            if let Some(row) = map.index_of(ccw_successor(mu)) {
                triplets.push((row, col, C64::new(t, 0.0)));
            }
        }
        if r != 0.0 {
            if let Some(row) = map.index_of(cw_successor(mu)) {
                triplets.push((row, col, C64::new(0.0, r)));
            }
        }
    }
    SparseMatrix::from_triplets(map.len(), triplets)
}

/// `(1 − cos φ) Σ |⟲(μ)⟩⟨μ|` over the region sites whose clockwise successor
/// lies outside the region.
pub fn transmission_term(phi: PhaseAngle, map: &IndexMap) -> SparseMatrix {
    let coeff = C64::new(1.0 - phi.t(), 0.0);
    let mut triplets = Vec::new();
    if coeff.is_zero() {
        return SparseMatrix::zeros(map.len());
    }
    for (col, &mu) in map.sites().iter().enumerate() {
        if !map.contains(cw_successor(mu)) {
            let row = map
                .index_of(ccw_successor(mu))
                .expect("regions are unions of counterclockwise blocks");
            triplets.push((row, col, coeff));
        }
    }
    SparseMatrix::from_triplets(map.len(), triplets)
}

/// The wall operator `T^{Λ_L}(φ)` written out term by term:
///
/// ```text
/// (1 − cos φ) · ( Σ_j |2j, 2L2+1⟩⟨2j+1, 2L2+1| + |2j+1, −2L2+2⟩⟨2j, −2L2+2|
///               + Σ_k |2L1−1, 2k+1⟩⟨2L1−1, 2k| + |−2L1, 2k⟩⟨−2L1, 2k+1| )
/// ```
///
/// shifted by the box offset. For a strip only the top and bottom rows appear.
pub fn wall_term(phi: PhaseAngle, geometry: &BoxSpec) -> Result<SparseMatrix> {
    let map = IndexMap::new(*geometry);
    let coeff = C64::new(1.0 - phi.t(), 0.0);
    let (x0, x1) = geometry.x_range();
    let (y0, y1) = geometry.y_range();
    let mut pairs: Vec<(Site, Site)> = Vec::new();
    let with_columns = match geometry.mode {
        Mode::Box => true,
        Mode::Strip { .. } => false,
        Mode::Torus => return Err(Error::Geometry("a torus has no walls".into())),
    };
    for x in (x0..x1).step_by(2) {
        pairs.push((Site::new(x, y1), Site::new(x + 1, y1)));
        pairs.push((Site::new(x + 1, y0), Site::new(x, y0)));
    }
    if with_columns {
        for y in (y0..y1).step_by(2) {
            pairs.push((Site::new(x1, y + 1), Site::new(x1, y)));
            pairs.push((Site::new(x0, y), Site::new(x0, y + 1)));
        }
    }
    let triplets = pairs.into_iter().map(|(ket, bra)| {
        let row = map.index_of(ket).expect("wall site inside the box");
        let col = map.index_of(bra).expect("wall site inside the box");
        (row, col, coeff)
    });
    Ok(SparseMatrix::from_triplets(map.len(), triplets))
}

/// Deterministic part `S(φ)` (or its restriction) over `geometry`.
pub fn build_s(phi: PhaseAngle, geometry: &BoxSpec, boundary: Boundary) -> Result<NetworkOperator> {
    let (map, matrix) = match boundary {
        Boundary::FullTorus => {
            if geometry.mode != Mode::Torus {
                return Err(Error::Geometry(format!(
                    "full operator needs a torus, got {:?}",
                    geometry.mode
                )));
            }
            let map = IndexMap::new(*geometry);
            let s = restricted_s(phi, &map);
            (map, s)
        }
        Boundary::Walls => {
            let map = IndexMap::new(*geometry);
            let s = restricted_s(phi, &map).add(&wall_term(phi, geometry)?);
            (map, s)
        }
        Boundary::ComplementWalls { inner } => {
            let map = IndexMap::with_hole(*geometry, inner)?;
            let s = restricted_s(phi, &map).add(&transmission_term(phi, &map));
            (map, s)
        }
        Boundary::Decoupled { inner } => {
            check_margin(&inner, geometry)?;
            let map = IndexMap::new(*geometry);
            let inside = build_s(phi, &inner, Boundary::Walls)?;
            let outside = build_s(phi, geometry, Boundary::ComplementWalls { inner })?;
            let lift = |op: &NetworkOperator| -> Vec<(usize, usize, C64)> {
                op.matrix
                    .triplets()
                    .map(|(r, c, v)| {
                        let row = map.index_of(op.map.site(r)).expect("sub-region site");
                        let col = map.index_of(op.map.site(c)).expect("sub-region site");
                        (row, col, v)
                    })
                    .collect()
            };
            let mut triplets = lift(&inside);
            triplets.extend(lift(&outside));
            let s = SparseMatrix::from_triplets(map.len(), triplets);
            (map, s)
        }
    };
    Ok(NetworkOperator {
        map,
        phi,
        boundary,
        matrix,
        seed: None,
    })
}

/// The boundary mode giving the undecoupled operator on a window.
pub fn natural_boundary(geometry: &BoxSpec) -> Boundary {
    match geometry.mode {
        Mode::Torus => Boundary::FullTorus,
        Mode::Box | Mode::Strip { .. } => Boundary::Walls,
    }
}

/// `U = D_ω S`: row `μ` of `S` multiplied by `ω_μ`.
pub fn build_u(disorder: &DisorderField, s_op: &NetworkOperator) -> Result<NetworkOperator> {
    let mut d = Vec::with_capacity(s_op.dim());
    for &site in s_op.map.sites() {
        d.push(disorder.phase(site).ok_or(Error::MissingPhase(site))?);
    }
    Ok(NetworkOperator {
        map: s_op.map.clone(),
        phi: s_op.phi,
        boundary: s_op.boundary,
        matrix: s_op.matrix.scale_rows(&d),
        seed: disorder.seed(),
    })
}

/// Samples nothing; builds `U_ω(φ)` on `geometry` with its natural boundary.
pub fn build_network(
    disorder: &DisorderField,
    phi: PhaseAngle,
    geometry: &BoxSpec,
) -> Result<NetworkOperator> {
    build_u(
        disorder,
        &build_s(phi, geometry, natural_boundary(geometry))?,
    )
}

/// `U = U^{(L)} + V^{(L)}` on `ambient`, decoupled along the walls of `inner`.
pub fn build_decoupled(
    disorder: &DisorderField,
    phi: PhaseAngle,
    inner: &BoxSpec,
    ambient: &BoxSpec,
) -> Result<(NetworkOperator, CouplingOperator)> {
    check_margin(inner, ambient)?;
    let full = build_network(disorder, phi, ambient)?;
    let decoupled = build_u(
        disorder,
        &build_s(phi, ambient, Boundary::Decoupled { inner: *inner })?,
    )?;
    let coupling = CouplingOperator {
        matrix: full.matrix.sub(&decoupled.matrix).pruned(),
        inner: *inner,
        ambient: *ambient,
        map: full.map.clone(),
    };
    Ok((decoupled, coupling))
}
