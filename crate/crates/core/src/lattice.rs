//! Square-lattice geometry: sites, the two block decompositions, boxes, tori,
//! strips and their boundaries.
//!
//! The counterclockwise block `(j, k)` is the plaquette
//! `(2j,2k) → (2j+1,2k) → (2j+1,2k+1) → (2j,2k+1)`, the clockwise block `(j, k)`
//! is `(2j,2k) → (2j,2k−1) → (2j−1,2k−1) → (2j−1,2k)`; both lists are in the
//! cyclic order in which `S(0)` (resp. `S(π/2)`) moves amplitude around.

use crate::error::{Error, Result};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// A lattice point `(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub m: i64,
    pub n: i64,
}

impl Site {
    pub const fn new(m: i64, n: i64) -> Self {
        Site { m, n }
    }

    pub fn offset(self, dm: i64, dn: i64) -> Self {
        Site::new(self.m + dm, self.n + dn)
    }

    /// Euclidean distance from the lattice origin.
    pub fn norm(self) -> f64 {
        libm::hypot(self.m as f64, self.n as f64)
    }

    /// `(m mod 2, n mod 2)`.
    pub fn parity(self) -> (i64, i64) {
        (self.m.rem_euclid(2), self.n.rem_euclid(2))
    }
}

// Row-major by (n, m), matching the dense index order.
impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.m).cmp(&(other.n, other.m))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chirality {
    Counterclockwise,
    Clockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockCoord {
    pub j: i64,
    pub k: i64,
    pub chirality: Chirality,
}

impl BlockCoord {
    /// The four sites of the block in cyclic order.
    pub fn sites(self) -> [Site; 4] {
        let (x, y) = (2 * self.j, 2 * self.k);
        match self.chirality {
            Chirality::Counterclockwise => [
                Site::new(x, y),
                Site::new(x + 1, y),
                Site::new(x + 1, y + 1),
                Site::new(x, y + 1),
            ],
            Chirality::Clockwise => [
                Site::new(x, y),
                Site::new(x, y - 1),
                Site::new(x - 1, y - 1),
                Site::new(x - 1, y),
            ],
        }
    }
}

/// The block of the given chirality containing `site`.
pub fn block_of(site: Site, chirality: Chirality) -> BlockCoord {
    let (j, k) = match chirality {
        Chirality::Counterclockwise => (site.m.div_euclid(2), site.n.div_euclid(2)),
        Chirality::Clockwise => ((site.m + 1).div_euclid(2), (site.n + 1).div_euclid(2)),
    };
    BlockCoord { j, k, chirality }
}

/// The even-even site of the counterclockwise block containing `site`.
pub fn block_anchor(site: Site) -> Site {
    Site::new(2 * site.m.div_euclid(2), 2 * site.n.div_euclid(2))
}

/// `α ∼ β`: both sites lie in the same counterclockwise block.
pub fn relation_sim(a: Site, b: Site) -> bool {
    block_of(a, Chirality::Counterclockwise) == block_of(b, Chirality::Counterclockwise)
}

/// Image of `site` under the counterclockwise block rotation.
pub fn ccw_successor(site: Site) -> Site {
    match site.parity() {
        (0, 0) => site.offset(1, 0),
        (1, 0) => site.offset(0, 1),
        (1, 1) => site.offset(-1, 0),
        _ => site.offset(0, -1),
    }
}

/// Image of `site` under the clockwise block rotation.
pub fn cw_successor(site: Site) -> Site {
    match site.parity() {
        (0, 0) => site.offset(0, -1),
        (0, 1) => site.offset(-1, 0),
        (1, 1) => site.offset(0, 1),
        _ => site.offset(1, 0),
    }
}

/// The eight ∞-norm-one displacements.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// `N(S)`: all `α + v` with `α ∈ S` and `‖v‖_∞ = 1`.
pub fn neighborhood(sites: &BTreeSet<Site>) -> BTreeSet<Site> {
    sites
        .iter()
        .flat_map(|s| {
            NEIGHBOR_OFFSETS
                .iter()
                .map(move |&(dm, dn)| s.offset(dm, dn))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Finite box with elastic walls on all four sides.
    Box,
    /// Periodic in both directions; the same site window as `Box`.
    Torus,
    /// Finite stand-in for the infinite strip: periodic in x with the given
    /// even length, height `4·M` with `M = l2`.
    Strip { length: u32 },
}

/// A block-aligned rectangular site window.
///
/// For `Box` and `Torus` the window is
/// `[−2·l1, 2·l1 − 1] × [−2·l2 + 2, 2·l2 + 1]` shifted by an even offset; it is
/// the disjoint union of the `4·l1·l2` counterclockwise blocks
/// `j ∈ [−l1, l1 − 1]`, `k ∈ [−l2 + 1, l2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoxSpec {
    pub l1: u32,
    pub l2: u32,
    pub offset: Site,
    pub mode: Mode,
}

impl BoxSpec {
    pub fn new(l1: u32, l2: u32, offset: Site, mode: Mode) -> Result<Self> {
        if l2 == 0 {
            return Err(Error::Geometry(format!("L2 must be positive, got {l2}")));
        }
        match mode {
            Mode::Strip { length } => {
                if length < 4 || length % 2 != 0 {
                    return Err(Error::Geometry(format!(
                        "strip length must be even and at least 4, got {length}"
                    )));
                }
            }
            _ => {
                if l1 == 0 {
                    return Err(Error::Geometry(format!("L1 must be positive, got {l1}")));
                }
            }
        }
        if offset.m % 2 != 0 || offset.n % 2 != 0 {
            return Err(Error::Geometry(format!("offset {offset} is not in (2Z)^2")));
        }
        Ok(BoxSpec {
            l1,
            l2,
            offset,
            mode,
        })
    }

    /// The box `Λ_L` centred as in the model definition.
    pub fn boxed(l1: u32, l2: u32) -> Result<Self> {
        Self::new(l1, l2, Site::new(0, 0), Mode::Box)
    }

    pub fn torus(l1: u32, l2: u32) -> Result<Self> {
        Self::new(l1, l2, Site::new(0, 0), Mode::Torus)
    }

    /// Strip of half-height `m` (y-range `[−2m+2, 2m+1]`) and periodic x-length `length`.
    pub fn strip(m: u32, length: u32) -> Result<Self> {
        Self::new(length / 4, m, Site::new(0, 0), Mode::Strip { length })
    }

    pub fn with_offset(self, offset: Site) -> Result<Self> {
        Self::new(self.l1, self.l2, offset, self.mode)
    }

    pub fn x_range(&self) -> (i64, i64) {
        let (lo, width) = match self.mode {
            Mode::Strip { length } => (-2 * (i64::from(length) / 4), i64::from(length)),
            _ => (-2 * i64::from(self.l1), 4 * i64::from(self.l1)),
        };
        (lo + self.offset.m, lo + width - 1 + self.offset.m)
    }

    pub fn y_range(&self) -> (i64, i64) {
        let l2 = i64::from(self.l2);
        (-2 * l2 + 2 + self.offset.n, 2 * l2 + 1 + self.offset.n)
    }

    pub fn width(&self) -> usize {
        let (lo, hi) = self.x_range();
        (hi - lo + 1) as usize
    }

    pub fn height(&self) -> usize {
        let (lo, hi) = self.y_range();
        (hi - lo + 1) as usize
    }

    pub fn site_count(&self) -> usize {
        self.width() * self.height()
    }

    /// Number of counterclockwise blocks; equals `vol Λ_L = 4·l1·l2` for boxes.
    pub fn block_count(&self) -> usize {
        self.site_count() / 4
    }

    pub fn periodic_x(&self) -> bool {
        matches!(self.mode, Mode::Torus | Mode::Strip { .. })
    }

    pub fn periodic_y(&self) -> bool {
        matches!(self.mode, Mode::Torus)
    }

    /// Representative of `site` inside the window, or `None` if it lies beyond a
    /// non-periodic edge.
    pub fn canonical(&self, site: Site) -> Option<Site> {
        let wrap = |v: i64, (lo, hi): (i64, i64), periodic: bool| -> Option<i64> {
            if periodic {
                Some(lo + (v - lo).rem_euclid(hi - lo + 1))
            } else if (lo..=hi).contains(&v) {
                Some(v)
            } else {
                None
            }
        };
        Some(Site::new(
            wrap(site.m, self.x_range(), self.periodic_x())?,
            wrap(site.n, self.y_range(), self.periodic_y())?,
        ))
    }

    /// Literal membership in the window, without wrapping.
    pub fn contains(&self, site: Site) -> bool {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        (x0..=x1).contains(&site.m) && (y0..=y1).contains(&site.n)
    }

    /// All sites in row-major order by `(n, m)`.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        (y0..=y1).flat_map(move |n| (x0..=x1).map(move |m| Site::new(m, n)))
    }

    /// Counterclockwise blocks tiling the window.
    pub fn blocks(&self) -> impl Iterator<Item = BlockCoord> + '_ {
        self.sites()
            .filter(|s| s.parity() == (0, 0))
            .map(|s| block_of(s, Chirality::Counterclockwise))
    }

    /// Displacement `b − a`, taken as the shortest image along periodic directions.
    pub fn displacement(&self, a: Site, b: Site) -> (i64, i64) {
        let fold = |d: i64, len: usize, periodic: bool| {
            if !periodic {
                return d;
            }
            let len = len as i64;
            let r = d.rem_euclid(len);
            if r > len / 2 {
                r - len
            } else {
                r
            }
        };
        (
            fold(b.m - a.m, self.width(), self.periodic_x()),
            fold(b.n - a.n, self.height(), self.periodic_y()),
        )
    }

    pub fn distance_inf(&self, a: Site, b: Site) -> i64 {
        let (dm, dn) = self.displacement(a, b);
        dm.abs().max(dn.abs())
    }

    pub fn distance_euclid(&self, a: Site, b: Site) -> f64 {
        let (dm, dn) = self.displacement(a, b);
        libm::hypot(dm as f64, dn as f64)
    }
}

/// Sites of a box that have an ∞-norm-one neighbour outside it.
pub fn boundary(bx: &BoxSpec) -> BTreeSet<Site> {
    bx.sites()
        .filter(|s| {
            NEIGHBOR_OFFSETS
                .iter()
                .any(|&(dm, dn)| !bx.contains(s.offset(dm, dn)))
        })
        .collect()
}

/// Sites of a box all of whose ∞-norm-one neighbours are inside it.
pub fn interior(bx: &BoxSpec) -> BTreeSet<Site> {
    let edge = boundary(bx);
    bx.sites().filter(|s| !edge.contains(s)).collect()
}

const VACANT: u32 = u32::MAX;

/// Dense indexing of a region: a window, optionally with a block-aligned box
/// removed (the complement `Λ^c` inside an ambient window).
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    geometry: BoxSpec,
    hole: Option<BoxSpec>,
    sites: Vec<Site>,
    lookup: Vec<u32>,
}

impl IndexMap {
    pub fn new(geometry: BoxSpec) -> Self {
        let sites: Vec<Site> = geometry.sites().collect();
        let lookup = (0..sites.len() as u32).collect();
        IndexMap {
            geometry,
            hole: None,
            sites,
            lookup,
        }
    }

    /// The ambient window minus `hole`. The hole (with a one-block margin) must
    /// lie literally inside the window.
    pub fn with_hole(geometry: BoxSpec, hole: BoxSpec) -> Result<Self> {
        check_margin(&hole, &geometry)?;
        let mut lookup = vec![VACANT; geometry.site_count()];
        let mut sites = Vec::with_capacity(geometry.site_count() - hole.site_count());
        for (raw, site) in geometry.sites().enumerate() {
            if !hole.contains(site) {
                lookup[raw] = sites.len() as u32;
                sites.push(site);
            }
        }
        Ok(IndexMap {
            geometry,
            hole: Some(hole),
            sites,
            lookup,
        })
    }

    pub fn geometry(&self) -> &BoxSpec {
        &self.geometry
    }

    pub fn hole(&self) -> Option<&BoxSpec> {
        self.hole.as_ref()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    /// Dense index of `site` (after periodic wrapping), if it belongs to the region.
    pub fn index_of(&self, site: Site) -> Option<usize> {
        let c = self.geometry.canonical(site)?;
        let (x0, _) = self.geometry.x_range();
        let (y0, _) = self.geometry.y_range();
        let raw = (c.n - y0) as usize * self.geometry.width() + (c.m - x0) as usize;
        match self.lookup[raw] {
            VACANT => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        self.index_of(site).is_some()
    }

    /// Region sites with an ∞-norm-one neighbour outside the region.
    pub fn boundary(&self) -> BTreeSet<Site> {
        self.sites
            .iter()
            .copied()
            .filter(|s| {
                NEIGHBOR_OFFSETS
                    .iter()
                    .any(|&(dm, dn)| !self.contains(s.offset(dm, dn)))
            })
            .collect()
    }

    pub fn interior(&self) -> BTreeSet<Site> {
        let edge = self.boundary();
        self.sites
            .iter()
            .copied()
            .filter(|s| !edge.contains(s))
            .collect()
    }
}

/// `inner` must be a box whose window, widened by one block on every side,
/// lies inside `ambient`.
pub fn check_margin(inner: &BoxSpec, ambient: &BoxSpec) -> Result<()> {
    if inner.mode != Mode::Box {
        return Err(Error::Geometry(format!(
            "inner region must be a box, got {:?}",
            inner.mode
        )));
    }
    let (x0, x1) = inner.x_range();
    let (y0, y1) = inner.y_range();
    if !(ambient.contains(Site::new(x0 - 2, y0 - 2)) && ambient.contains(Site::new(x1 + 2, y1 + 2)))
    {
        return Err(Error::Geometry(format!(
            "box [{x0},{x1}]x[{y0},{y1}] needs a one-block margin inside {:?}x{:?}",
            ambient.x_range(),
            ambient.y_range()
        )));
    }
    Ok(())
}
