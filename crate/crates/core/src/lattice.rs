//! Integer-lattice geometry: sites, L1 balls, dilations and scaled
//! point-set comparisons.
//!
//! All distances in this module are L1. The Hausdorff metric between
//! scaled sets therefore uses the L1 ground metric as well; L2 or Linf
//! would give different numbers for the same sets.

use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hasher};

use thiserror::Error;

/// Maximum supported dimension. The model is dimension-generic but
/// desk-scale validation beyond d = 3 is impractical.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("dimension must be in 1..=3, got {0}")]
    BadDimension(usize),
    #[error("point set must be non-empty")]
    EmptySet,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// A point of `Z^d`. Only the first `dim` coordinates of a run are
/// meaningful; trailing coordinates are kept at zero so `Site` stays
/// `Copy` and cheap to hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub coords: [i32; MAX_DIM],
}

impl Site {
    pub const ORIGIN: Site = Site { coords: [0, 0, 0] };

    pub fn new(coords: [i32; MAX_DIM]) -> Self {
        Site { coords }
    }

    pub fn from_slice(c: &[i32]) -> Self {
        let mut coords = [0i32; MAX_DIM];
        coords[..c.len()].copy_from_slice(c);
        Site { coords }
    }

    pub fn d1(x: i32) -> Self {
        Site { coords: [x, 0, 0] }
    }

    pub fn d2(x: i32, y: i32) -> Self {
        Site { coords: [x, y, 0] }
    }

    pub fn d3(x: i32, y: i32, z: i32) -> Self {
        Site { coords: [x, y, z] }
    }

    /// Sum of absolute coordinates.
    pub fn l1_norm(&self) -> u32 {
        self.coords.iter().map(|c| c.unsigned_abs()).sum()
    }

    pub fn l1_dist(&self, other: &Site) -> u32 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (*a as i64 - *b as i64).unsigned_abs() as u32)
            .sum()
    }

    /// The site one step away along `axis` in direction `sign`.
    pub fn offset(&self, axis: usize, sign: i32) -> Site {
        let mut coords = self.coords;
        coords[axis] += sign;
        Site { coords }
    }

    pub fn add(&self, other: &Site) -> Site {
        let mut coords = self.coords;
        for (c, o) in coords.iter_mut().zip(other.coords.iter()) {
            *c += *o;
        }
        Site { coords }
    }

    /// Renders the first `dim` coordinates as a comma-separated tuple,
    /// the same syntax scenario files use.
    pub fn display(&self, dim: usize) -> String {
        self.coords[..dim]
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// L1 norm of a site; exposed as a free function to mirror the rest of
/// the geometric operations.
pub fn l1_norm(x: &Site) -> u32 {
    x.l1_norm()
}

const MIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit finalizer used everywhere a fast deterministic hash is needed.
/// Splitmix-style: full avalanche, stable across platforms.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn mix_absorb(h: u64, w: u64) -> u64 {
    mix64(h ^ w.wrapping_mul(MIX_GAMMA))
}

/// Deterministic hasher for `Site` keys. Hot path of the engine's site
/// table; must be identical on every platform, so no `RandomState`.
#[derive(Default)]
pub struct SiteHasher {
    state: u64,
}

impl Hasher for SiteHasher {
    fn finish(&self) -> u64 {
        mix64(self.state)
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            self.state = mix_absorb(self.state, u64::from_le_bytes(w));
        }
    }

    #[inline]
    fn write_i32(&mut self, i: i32) {
        self.state = mix_absorb(self.state, i as i64 as u64);
    }

    #[inline]
    fn write_u32(&mut self, i: u32) {
        self.state = mix_absorb(self.state, i as u64);
    }

    #[inline]
    fn write_u64(&mut self, i: u64) {
        self.state = mix_absorb(self.state, i);
    }
}

pub type SiteHashBuilder = BuildHasherDefault<SiteHasher>;

/// A finite set of sites sharing one dimension.
#[derive(Debug, Clone)]
pub struct SiteSet {
    dim: usize,
    set: HashSet<Site, SiteHashBuilder>,
}

impl SiteSet {
    pub fn new(dim: usize) -> Self {
        SiteSet {
            dim,
            set: HashSet::default(),
        }
    }

    pub fn from_sites<I: IntoIterator<Item = Site>>(dim: usize, sites: I) -> Self {
        let mut s = SiteSet::new(dim);
        for x in sites {
            s.insert(x);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, x: Site) -> bool {
        debug_assert!(x.coords[self.dim..].iter().all(|c| *c == 0));
        self.set.insert(x)
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.set.contains(x)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.set.iter()
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.set.iter().all(|x| other.contains(x))
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        let mut s = self.clone();
        for x in other.iter() {
            s.insert(*x);
        }
        s
    }

    /// Members in lexicographic coordinate order. All deterministic
    /// output paths go through this.
    pub fn sorted(&self) -> Vec<Site> {
        let mut v: Vec<Site> = self.set.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn min_l1_dist(&self, x: &Site) -> Option<u32> {
        self.set.iter().map(|y| y.l1_dist(x)).min()
    }
}

impl PartialEq for SiteSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.set == other.set
    }
}

impl Eq for SiteSet {}

/// Number of lattice points of `Z^d` with L1 norm exactly `m`.
pub fn sphere_count(m: u32, dim: usize) -> u64 {
    if m == 0 {
        return 1;
    }
    let m = m as u64;
    match dim {
        1 => 2,
        2 => 4 * m,
        3 => 4 * m * m + 2,
        _ => panic!("dimension out of range"),
    }
}

/// Number of lattice points of `Z^d` with L1 norm at most `r`.
pub fn ball_count(r: u32, dim: usize) -> u64 {
    (0..=r).map(|m| sphere_count(m, dim)).sum()
}

/// The lattice restriction of the L1 ball of radius `r`: all x in Z^d
/// with |x|_1 <= r.
pub fn l1_ball(r: f64, dim: usize) -> Result<SiteSet, LatticeError> {
    if !(r >= 0.0) {
        return Err(LatticeError::NegativeRadius(r));
    }
    if dim == 0 || dim > MAX_DIM {
        return Err(LatticeError::BadDimension(dim));
    }
    let ri = r.floor() as i64;
    let ri = i32::try_from(ri).unwrap_or(i32::MAX);
    let mut out = SiteSet::new(dim);
    match dim {
        1 => {
            for x in -ri..=ri {
                out.insert(Site::d1(x));
            }
        }
        2 => {
            for x in -ri..=ri {
                let rest = ri - x.abs();
                for y in -rest..=rest {
                    out.insert(Site::d2(x, y));
                }
            }
        }
        3 => {
            for x in -ri..=ri {
                let r2 = ri - x.abs();
                for y in -r2..=r2 {
                    let r3 = r2 - y.abs();
                    for z in -r3..=r3 {
                        out.insert(Site::d3(x, y, z));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Minkowski sum of `s` with the L1 ball of integer radius `r`.
pub fn dilate(s: &SiteSet, r: u32) -> SiteSet {
    if r == 0 {
        return s.clone();
    }
    let ball = l1_ball(r as f64, s.dim()).expect("radius is nonnegative");
    let mut out = SiteSet::new(s.dim());
    for x in s.iter() {
        for y in ball.iter() {
            out.insert(x.add(y));
        }
    }
    out
}

/// A finite point set of the form `{x / scale : x in sites}`. The
/// unscaled sites are kept exact; division happens only at comparison
/// boundaries so no rounding accumulates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSet {
    dim: usize,
    scale: u32,
    sites: Vec<Site>,
}

impl ScaledSet {
    pub fn new(sites: &SiteSet, scale: u32) -> Self {
        assert!(scale >= 1, "scale must be positive");
        ScaledSet {
            dim: sites.dim(),
            scale,
            sites: sites.sorted(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> u32 {
        self.scale
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

    /// Applies a signed coordinate permutation to every member. Group
    /// elements act on the unscaled sites, so the image is exact.
    pub fn transform(&self, perm: &[usize], signs: &[i32]) -> ScaledSet {
        let mut sites: Vec<Site> = self
            .sites
            .iter()
            .map(|x| {
                let mut c = [0i32; MAX_DIM];
                for i in 0..self.dim {
                    c[i] = signs[i] * x.coords[perm[i]];
                }
                Site::new(c)
            })
            .collect();
        sites.sort_unstable();
        ScaledSet {
            dim: self.dim,
            scale: self.scale,
            sites,
        }
    }
}

// Above this many cells the grid distance transform is not worth its
// memory and the quadratic scan is used instead.
const GRID_CELL_LIMIT: u64 = 20_000_000;

/// Symmetric Hausdorff distance between two scaled sets under the L1
/// ground metric.
pub fn hausdorff(a: &ScaledSet, b: &ScaledSet) -> Result<f64, LatticeError> {
    if a.is_empty() || b.is_empty() {
        return Err(LatticeError::EmptySet);
    }
    if a.dim() != b.dim() {
        return Err(LatticeError::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.scale == b.scale {
        if let Some(h) = hausdorff_grid(a, b) {
            return Ok(h as f64 / a.scale as f64);
        }
    }
    Ok(hausdorff_naive(a, b))
}

fn hausdorff_naive(a: &ScaledSet, b: &ScaledSet) -> f64 {
    let d = directed_naive(a, b);
    let e = directed_naive(b, a);
    d.max(e)
}

fn directed_naive(a: &ScaledSet, b: &ScaledSet) -> f64 {
    let sa = a.scale as f64;
    let sb = b.scale as f64;
    let mut worst = 0.0f64;
    for x in &a.sites {
        let mut best = f64::INFINITY;
        for y in &b.sites {
            let mut d = 0.0;
            for i in 0..a.dim {
                d += (x.coords[i] as f64 / sa - y.coords[i] as f64 / sb).abs();
            }
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst
}

struct GridBox {
    lo: [i32; MAX_DIM],
    extent: [usize; MAX_DIM],
    dim: usize,
}

impl GridBox {
    fn around(a: &ScaledSet, b: &ScaledSet) -> Option<GridBox> {
        let dim = a.dim();
        let mut lo = [i32::MAX; MAX_DIM];
        let mut hi = [i32::MIN; MAX_DIM];
        for s in a.sites.iter().chain(b.sites.iter()) {
            for i in 0..dim {
                lo[i] = lo[i].min(s.coords[i]);
                hi[i] = hi[i].max(s.coords[i]);
            }
        }
        let mut extent = [1usize; MAX_DIM];
        let mut cells: u64 = 1;
        for i in 0..dim {
            extent[i] = (hi[i] - lo[i]) as usize + 1;
            cells = cells.checked_mul(extent[i] as u64)?;
            if cells > GRID_CELL_LIMIT {
                return None;
            }
        }
        Some(GridBox { lo, extent, dim })
    }

    fn cells(&self) -> usize {
        self.extent[..self.dim].iter().product()
    }

    fn index(&self, s: &Site) -> usize {
        let mut idx = 0usize;
        for i in (0..self.dim).rev() {
            idx = idx * self.extent[i] + (s.coords[i] - self.lo[i]) as usize;
        }
        idx
    }
}

/// Exact integer Hausdorff via an L1 distance transform on the joint
/// bounding box. An L1 geodesic between two points is a monotone
/// staircase inside their common bounding box, so restricting the
/// transform there loses nothing. Returns None when the box is too
/// large; the caller falls back to the quadratic scan.
fn hausdorff_grid(a: &ScaledSet, b: &ScaledSet) -> Option<u32> {
    let gb = GridBox::around(a, b)?;
    let d_ab = directed_grid(&gb, a, b);
    let d_ba = directed_grid(&gb, b, a);
    Some(d_ab.max(d_ba))
}

const DT_INF: u32 = u32::MAX / 2;

fn directed_grid(gb: &GridBox, from: &ScaledSet, to: &ScaledSet) -> u32 {
    let cells = gb.cells();
    let mut dist = vec![DT_INF; cells];
    for y in &to.sites {
        dist[gb.index(y)] = 0;
    }
    // Separable Manhattan distance transform: one forward and one
    // backward relaxation sweep per axis.
    let mut stride = 1usize;
    for ax in 0..gb.dim {
        let extent = gb.extent[ax];
        if extent > 1 {
            for i in 0..cells {
                if (i / stride) % extent > 0 {
                    let relaxed = dist[i - stride] + 1;
                    if relaxed < dist[i] {
                        dist[i] = relaxed;
                    }
                }
            }
            for i in (0..cells).rev() {
                if (i / stride) % extent < extent - 1 {
                    let relaxed = dist[i + stride] + 1;
                    if relaxed < dist[i] {
                        dist[i] = relaxed;
                    }
                }
            }
        }
        stride *= extent;
    }
    from.sites
        .iter()
        .map(|x| dist[gb.index(x)])
        .max()
        .expect("caller guarantees non-empty sets")
}

fn permutations(dim: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    permute(&mut idx, 0, &mut out);
    out
}

fn permute(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == idx.len() {
        out.push(idx.clone());
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, out);
        idx.swap(k, i);
    }
}

/// All 2^d * d! signed permutation maps of `Z^d` as (perm, signs) pairs.
pub fn signed_permutations(dim: usize) -> Vec<(Vec<usize>, Vec<i32>)> {
    let mut out = Vec::new();
    for perm in permutations(dim) {
        for mask in 0..(1u32 << dim) {
            let signs: Vec<i32> = (0..dim)
                .map(|i| if mask & (1 << i) != 0 { -1 } else { 1 })
                .collect();
            out.push((perm.clone(), signs));
        }
    }
    out
}

/// Deviation of `s` from full hyperoctahedral symmetry: the worst
/// Hausdorff distance between `s` and any of its signed-permutation
/// images.
pub fn symmetry_defect(s: &ScaledSet) -> Result<f64, LatticeError> {
    if s.is_empty() {
        return Err(LatticeError::EmptySet);
    }
    let mut worst = 0.0f64;
    for (perm, signs) in signed_permutations(s.dim()) {
        let image = s.transform(&perm, &signs);
        let h = hausdorff(s, &image)?;
        if h > worst {
            worst = h;
        }
    }
    Ok(worst)
}
