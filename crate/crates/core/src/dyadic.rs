//! Dyadic geometry in `ℝⁿ`: cubes, grid-resolved open sets, the covering
//! of an open set by maximal dyadic cubes, and the k-dilated constants
//! `A_{1,k}` / `RH_{∞,k}`.
//!
//! Everything on a grid is exact: sets are unions of depth-`d` cells, weights
//! are constant on cells, and measures are integer cell counts (half-cell
//! units for k-dilations, which may end mid-cell). Open sets are therefore
//! only resolved down to the grid; reports say so.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{estimate_sup, ConstantEstimate, SearchFamily, Status};
use crate::distributional::NUDGE;
use crate::error::{Error, Result};
use crate::weights::{Interval, Weight};

/// Largest supported `n · depth` (cell indices stay within `u32`).
pub const MAX_BITS: u32 = 30;
/// Resolution note attached to every grid report.
pub const GRID_NOTE: &str = "open sets and weights resolved to depth-d dyadic cells";

/// Axis-parallel cube `corner + [0, side]ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(corner: Vec<f64>, side: f64) -> Result<Self> {
        if corner.is_empty() || corner.iter().any(|c| !c.is_finite()) || !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid cube {corner:?} with side {side}")));
        }
        Ok(Cube { corner, side })
    }

    pub fn unit(n: usize) -> Self {
        Cube {
            corner: vec![0.0; n],
            side: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn center(&self) -> Vec<f64> {
        self.corner.iter().map(|c| c + self.side / 2.0).collect()
    }

    /// Concentric cube with side `k · side`.
    pub fn dilate(&self, k: f64) -> Cube {
        let shift = (k - 1.0) * self.side / 2.0;
        Cube {
            corner: self.corner.iter().map(|c| c - shift).collect(),
            side: k * self.side,
        }
    }

    /// The `2ⁿ` dyadic children; bit `a` of the position selects the upper
    /// half along axis `a`.
    pub fn children(&self) -> Vec<Cube> {
        let h = self.side / 2.0;
        (0..1usize << self.dim())
            .map(|bits| Cube {
                corner: self
                    .corner
                    .iter()
                    .enumerate()
                    .map(|(a, c)| if bits >> a & 1 == 1 { c + h } else { *c })
                    .collect(),
                side: h,
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.corner).all(|(x, c)| *c <= *x && *x <= c + self.side)
    }
}

/// A dyadic subcube of the root: level `ℓ` has `2^ℓ` cubes per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub coords: Vec<usize>,
}

/// Root cube subdivided into `2^depth` cells per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicGrid {
    root: Cube,
    depth: u32,
}

fn decode(mut idx: usize, base: usize, out: &mut [usize]) {
    for c in out.iter_mut() {
        *c = idx % base;
        idx /= base;
    }
}

fn encode(coords: &[usize], base: usize) -> usize {
    coords.iter().rev().fold(0, |acc, &c| acc * base + c)
}

/// Calls `f` on every coordinate vector of the box `[lo, hi)`.
fn for_each_in_box(lo: &[usize], hi: &[usize], mut f: impl FnMut(&[usize])) {
    if lo.iter().zip(hi).any(|(l, h)| l >= h) {
        return;
    }
    let mut c = lo.to_vec();
    loop {
        f(&c);
        let mut a = 0;
        loop {
            if a == c.len() {
                return;
            }
            c[a] += 1;
            if c[a] < hi[a] {
                break;
            }
            c[a] = lo[a];
            a += 1;
        }
    }
}

impl DyadicGrid {
    pub fn new(root: Cube, depth: u32) -> Result<Self> {
        if root.dim() as u32 * depth > MAX_BITS || root.dim() > 8 {
            return Err(Error::InvalidParameter(format!(
                "n = {} with depth {depth} exceeds {MAX_BITS} index bits",
                root.dim()
            )));
        }
        Ok(DyadicGrid { root, depth })
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Cells per axis, `2^depth`.
    pub fn per_axis(&self) -> usize {
        1 << self.depth
    }

    pub fn cell_count(&self) -> usize {
        self.per_axis().pow(self.dim() as u32)
    }

    pub fn cell_side(&self) -> f64 {
        self.root.side / self.per_axis() as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_side().powi(self.dim() as i32)
    }

    /// Cell coordinates of a linear index `Σ i_a · (2^d)^a`.
    pub fn coords(&self, idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim()];
        decode(idx, self.per_axis(), &mut c);
        c
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        encode(coords, self.per_axis())
    }

    /// Cells per axis of a level-`ℓ` cube.
    fn span(&self, level: u32) -> usize {
        1 << (self.depth - level)
    }

    pub fn cube(&self, q: &DyadicCube) -> Cube {
        let s = self.span(q.level) as f64 * self.cell_side();
        Cube {
            corner: q
                .coords
                .iter()
                .zip(&self.root.corner)
                .map(|(&i, c)| c + i as f64 * s)
                .collect(),
            side: s,
        }
    }

    /// `[lo, hi)` along `axis` of cell `i`, in root coordinates.
    pub fn cell_interval(&self, axis: usize, i: usize) -> (f64, f64) {
        let h = self.cell_side();
        let c = self.root.corner[axis];
        (c + i as f64 * h, c + (i + 1) as f64 * h)
    }

    /// Every dyadic cube, level by level, in linear order.
    pub fn all_cubes(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        let mut out = Vec::new();
        for level in 0..=self.depth {
            let base = 1usize << level;
            for idx in 0..base.pow(n as u32) {
                let mut coords = vec![0; n];
                decode(idx, base, &mut coords);
                out.push(DyadicCube { level, coords });
            }
        }
        out
    }

    /// Cell box `[lo, hi)` met in positive measure by `kQ ∩ root`.
    fn dilated_cell_box(&self, q: &DyadicCube, k: u32) -> (Vec<usize>, Vec<usize>) {
        let m = self.per_axis() as i64;
        let (lo_h, hi_h) = self.dilated_half_bounds(q, k);
        let lo = lo_h.iter().map(|&l| (l.max(0) / 2) as usize).collect();
        let hi = hi_h.iter().map(|&h| ((h.min(2 * m) + 1) / 2) as usize).collect();
        (lo, hi)
    }

    /// Unclipped bounds of `kQ` per axis in half-cell units.
    fn dilated_half_bounds(&self, q: &DyadicCube, k: u32) -> (Vec<i64>, Vec<i64>) {
        let s = self.span(q.level) as i64;
        let k = k as i64;
        let lo: Vec<i64> = q.coords.iter().map(|&c| 2 * c as i64 * s - (k - 1) * s).collect();
        let hi = lo.iter().map(|l| l + 2 * k * s).collect();
        (lo, hi)
    }
}

/// Per-level counts (or sums) over dyadic cubes, built bottom-up.
struct Pyramid<T> {
    levels: Vec<Vec<T>>,
}

impl<T: Copy + Default + std::ops::AddAssign> Pyramid<T> {
    fn build(grid: &DyadicGrid, cells: Vec<T>) -> Self {
        let n = grid.dim();
        let d = grid.depth as usize;
        let mut levels: Vec<Vec<T>> = vec![Vec::new(); d + 1];
        levels[d] = cells;
        let mut coords = vec![0; n];
        for l in (0..d).rev() {
            let base = 1usize << l;
            let mut cur = vec![T::default(); base.pow(n as u32)];
            for (idx, &v) in levels[l + 1].iter().enumerate() {
                decode(idx, base * 2, &mut coords);
                coords.iter_mut().for_each(|c| *c /= 2);
                cur[encode(&coords, base)] += v;
            }
            levels[l] = cur;
        }
        Pyramid { levels }
    }

    fn get(&self, q: &DyadicCube) -> T {
        self.levels[q.level as usize][encode(&q.coords, 1 << q.level)]
    }
}

/// n-D prefix sums of a cell indicator, for exact box counts.
struct PrefixSums {
    base: usize,
    n: usize,
    sums: Vec<u64>,
}

impl PrefixSums {
    fn build(grid: &DyadicGrid, cells: &[bool]) -> Self {
        let n = grid.dim();
        let base = grid.per_axis() + 1;
        let mut sums = vec![0u64; base.pow(n as u32)];
        let mut c = vec![0; n];
        for (idx, &on) in cells.iter().enumerate() {
            if on {
                decode(idx, grid.per_axis(), &mut c);
                c.iter_mut().for_each(|x| *x += 1);
                sums[encode(&c, base)] = 1;
            }
        }
        let mut stride = 1;
        for _ in 0..n {
            for idx in 0..sums.len() {
                if (idx / stride) % base > 0 {
                    sums[idx] += sums[idx - stride];
                }
            }
            stride *= base;
        }
        PrefixSums { base, n, sums }
    }

    /// Number of marked cells in `[lo, hi)`.
    fn count(&self, lo: &[usize], hi: &[usize]) -> u64 {
        if lo.iter().zip(hi).any(|(l, h)| l >= h) {
            return 0;
        }
        let mut total: i64 = 0;
        let mut c = vec![0; self.n];
        for bits in 0..1usize << self.n {
            let mut neg = false;
            for a in 0..self.n {
                if bits >> a & 1 == 1 {
                    c[a] = lo[a];
                    neg = !neg;
                } else {
                    c[a] = hi[a];
                }
            }
            let v = self.sums[encode(&c, self.base)] as i64;
            total += if neg { -v } else { v };
        }
        total as u64
    }
}

/// A union of depth-`d` cells of the root cube, standing for an open set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    grid: DyadicGrid,
    cells: Vec<bool>,
}

const MAGIC: &[u8; 4] = b"GSET";
const VERSION: u8 = 1;

impl GridSet {
    pub fn empty(grid: DyadicGrid) -> Self {
        let cells = vec![false; grid.cell_count()];
        GridSet { grid, cells }
    }

    pub fn from_cells(grid: DyadicGrid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "{} cells given, grid has {}",
                cells.len(),
                grid.cell_count()
            )));
        }
        Ok(GridSet { grid, cells })
    }

    pub fn from_predicate(grid: DyadicGrid, f: impl Fn(&[usize]) -> bool) -> Self {
        let cells = (0..grid.cell_count()).map(|i| f(&grid.coords(i))).collect();
        GridSet { grid, cells }
    }

    /// Union of 1 to 6 random boxes of cells, each at most half the root per
    /// axis; a union that happens to fill the root loses one random cell.
    pub fn random(grid: DyadicGrid, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = grid.per_axis();
        let n = grid.dim();
        let mut set = GridSet::empty(grid);
        for _ in 0..rng.gen_range(1..=6) {
            let lo: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
            let hi: Vec<usize> = lo.iter().map(|&l| (l + rng.gen_range(1..=m.div_ceil(2))).min(m)).collect();
            let grid = &set.grid;
            let mut hits = Vec::new();
            for_each_in_box(&lo, &hi, |c| hits.push(grid.index(c)));
            for i in hits {
                set.cells[i] = true;
            }
        }
        if set.count() == set.cells.len() {
            let i = rng.gen_range(0..set.cells.len());
            set.cells[i] = false;
        }
        set
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.cells[idx]
    }

    pub fn insert(&mut self, idx: usize) {
        self.cells[idx] = true;
    }

    pub fn remove(&mut self, idx: usize) {
        self.cells[idx] = false;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn complement(&self) -> GridSet {
        GridSet {
            grid: self.grid.clone(),
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    pub fn intersect(&self, other: &GridSet) -> Result<GridSet> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("grid sets live on different grids".into()));
        }
        Ok(GridSet {
            grid: self.grid.clone(),
            cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a && *b).collect(),
        })
    }

    /// Cells of the set inside dyadic cube `q`.
    pub fn restrict(&self, q: &DyadicCube) -> GridSet {
        let s = self.grid.span(q.level);
        GridSet::from_predicate(self.grid.clone(), |c| {
            c.iter().zip(&q.coords).all(|(&i, &j)| i / s == j) && self.cells[self.grid.index(c)]
        })
    }

    /// Run-length encoding, all integers and floats little-endian:
    ///
    /// ```text
    /// "GSET" | version u8 = 1 | n u8 | depth u8 | reserved u8 = 0
    /// corner f64 × n | side f64 | run count u32 | runs u32 × count
    /// ```
    ///
    /// Runs alternate absent/present cells in linear index order, starting
    /// with an absent run (possibly of length 0).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[VERSION, self.grid.dim() as u8, self.grid.depth as u8, 0]);
        for c in &self.grid.root.corner {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.grid.root.side.to_le_bytes());
        let mut runs: Vec<u32> = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &c in &self.cells {
            if c != current {
                runs.push(len);
                current = c;
                len = 0;
            }
            len += 1;
        }
        runs.push(len);
        out.extend_from_slice(&(runs.len() as u32).to_le_bytes());
        for r in runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Decode("bad magic, expected GSET".into()));
        }
        let head = r.take(4)?;
        if head[0] != VERSION {
            return Err(Error::Decode(format!("unsupported version {}", head[0])));
        }
        if head[3] != 0 {
            return Err(Error::Decode("reserved byte is not zero".into()));
        }
        let (n, depth) = (head[1] as usize, head[2] as u32);
        if n == 0 {
            return Err(Error::Decode("dimension 0".into()));
        }
        let corner = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let side = r.f64()?;
        let root = Cube::new(corner, side).map_err(|e| Error::Decode(e.to_string()))?;
        let grid = DyadicGrid::new(root, depth).map_err(|e| Error::Decode(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut cells = Vec::with_capacity(grid.cell_count());
        let mut on = false;
        for _ in 0..count {
            let len = r.u32()? as usize;
            if cells.len() + len > grid.cell_count() {
                return Err(Error::Decode("runs overflow the grid".into()));
            }
            cells.resize(cells.len() + len, on);
            on = !on;
        }
        if cells.len() != grid.cell_count() {
            return Err(Error::Decode(format!(
                "runs cover {} cells, grid has {}",
                cells.len(),
                grid.cell_count()
            )));
        }
        if r.pos != bytes.len() {
            return Err(Error::Decode("trailing bytes".into()));
        }
        Ok(GridSet { grid, cells })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Decode("unexpected end of input".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Evidence for one cover cube `Q_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverEntry {
    pub cube: DyadicCube,
    pub geometry: Cube,
    /// `|Q_j ∖ G|` in cells.
    pub outside_cells: u64,
    /// `|kQ_j ∖ G|` in half-cell units (`2⁻ⁿ` cells); the part of `kQ_j`
    /// beyond the root counts as outside `G`.
    pub dilated_outside_half_cells: u64,
    /// `|kQ_j ∖ G|` in root units.
    pub dilated_outside_measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `|G| < |Q|`: the cover below applies.
    Covered,
    /// `|G| = |Q|`: no cover is needed; the root is returned as is.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub k: u32,
    pub branch: Branch,
    pub entries: Vec<CoverEntry>,
    pub set_cells: u64,
    pub cover_cells: u64,
    pub non_overlapping: bool,
    pub covers_set: bool,
    /// Every `|Q_j ∖ G| = 0`.
    pub inside: bool,
    /// Every `|kQ_j ∖ G| > 0`.
    pub escapes: bool,
    pub note: String,
}

impl CoverCertificate {
    pub fn is_valid(&self) -> bool {
        self.branch == Branch::Full || (self.non_overlapping && self.covers_set && self.inside && self.escapes)
    }
}

/// Maximal dyadic cubes contained in `G` (the children, along each cell's
/// ancestor chain, of the first ancestor meeting the complement), with the
/// certificate recomputed exactly from cell counts.
pub fn dyadic_cover(g: &GridSet, k: u32) -> Result<CoverCertificate> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!("covering needs k >= 3, got {k}")));
    }
    let grid = &g.grid;
    let n = grid.dim();
    let counts = Pyramid::build(grid, g.cells.iter().map(|&c| c as u64).collect());
    let full = |q: &DyadicCube| counts.get(q) == (grid.span(q.level) as u64).pow(n as u32);
    let set_cells = g.count() as u64;
    let root = DyadicCube {
        level: 0,
        coords: vec![0; n],
    };
    if full(&root) {
        return Ok(CoverCertificate {
            k,
            branch: Branch::Full,
            entries: Vec::new(),
            set_cells,
            cover_cells: set_cells,
            non_overlapping: true,
            covers_set: true,
            inside: true,
            escapes: true,
            note: GRID_NOTE.into(),
        });
    }

    let mut selected = Vec::new();
    let mut stack = vec![root];
    while let Some(q) = stack.pop() {
        if counts.get(&q) == 0 {
            continue;
        }
        if full(&q) {
            selected.push(q);
            continue;
        }
        for bits in (0..1usize << n).rev() {
            stack.push(DyadicCube {
                level: q.level + 1,
                coords: q.coords.iter().enumerate().map(|(a, &c)| 2 * c + (bits >> a & 1)).collect(),
            });
        }
    }
    selected.sort();

    let prefix = PrefixSums::build(grid, &g.cells);
    let m2 = 2 * grid.per_axis() as i64;
    let half_volume = grid.cell_volume() / (1u64 << n) as f64;
    let entries: Vec<CoverEntry> = selected
        .par_iter()
        .map(|q| {
            let s = grid.span(q.level);
            let lo: Vec<usize> = q.coords.iter().map(|c| c * s).collect();
            let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
            let outside_cells = (s as u64).pow(n as u32) - prefix.count(&lo, &hi);

            // split each axis of kQ ∩ root into a partial low cell, whole
            // cells and a partial high cell, weighted in half-cell units
            let (lo_h, hi_h) = grid.dilated_half_bounds(q, k);
            let segments: Vec<Vec<(usize, usize, u64)>> = (0..n)
                .map(|a| {
                    let (l, h) = (lo_h[a].max(0), hi_h[a].min(m2));
                    let mut seg = Vec::new();
                    let (first, last) = ((l + 1) / 2, h / 2);
                    if l % 2 == 1 {
                        seg.push(((l / 2) as usize, (l / 2 + 1) as usize, 1));
                    }
                    if first < last {
                        seg.push((first as usize, last as usize, 2));
                    }
                    if h % 2 == 1 {
                        seg.push(((h / 2) as usize, (h / 2 + 1) as usize, 1));
                    }
                    seg
                })
                .collect();
            let mut inside_half = 0u64;
            let mut pick = vec![0usize; n];
            'outer: loop {
                let mut w = 1u64;
                let mut blo = vec![0; n];
                let mut bhi = vec![0; n];
                for a in 0..n {
                    if segments[a].is_empty() {
                        break 'outer;
                    }
                    let (x, y, wt) = segments[a][pick[a]];
                    blo[a] = x;
                    bhi[a] = y;
                    w *= wt;
                }
                inside_half += w * prefix.count(&blo, &bhi);
                let mut a = 0;
                loop {
                    if a == n {
                        break 'outer;
                    }
                    pick[a] += 1;
                    if pick[a] < segments[a].len() {
                        break;
                    }
                    pick[a] = 0;
                    a += 1;
                }
            }
            let total_half = (2 * k as u64 * s as u64).pow(n as u32);
            let dilated = total_half - inside_half;
            CoverEntry {
                cube: q.clone(),
                geometry: grid.cube(q),
                outside_cells,
                dilated_outside_half_cells: dilated,
                dilated_outside_measure: dilated as f64 * half_volume,
            }
        })
        .collect();

    // overlap and coverage from an explicit per-cell tally
    let mut tally = vec![0u8; grid.cell_count()];
    for q in &selected {
        let s = grid.span(q.level);
        let lo: Vec<usize> = q.coords.iter().map(|c| c * s).collect();
        let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
        for_each_in_box(&lo, &hi, |c| {
            let t = &mut tally[grid.index(c)];
            *t = t.saturating_add(1);
        });
    }
    let non_overlapping = tally.iter().all(|&t| t <= 1);
    let covers_set = g.cells.iter().zip(&tally).all(|(&c, &t)| !c || t > 0);
    let cover_cells = tally.iter().filter(|&&t| t > 0).count() as u64;
    Ok(CoverCertificate {
        k,
        branch: Branch::Covered,
        inside: entries.iter().all(|e| e.outside_cells == 0),
        escapes: entries.iter().all(|e| e.dilated_outside_half_cells > 0),
        entries,
        set_cells,
        cover_cells,
        non_overlapping,
        covers_set,
        note: GRID_NOTE.into(),
    })
}

/// A positive weight constant on each depth-`d` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWeight {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl GridWeight {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "{} values given, grid has {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWeight(format!("cell {i} has value {}", values[i])));
        }
        Ok(GridWeight { grid, values })
    }

    pub fn from_fn(grid: DyadicGrid, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let values = (0..grid.cell_count()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: DyadicGrid, c: f64) -> Result<Self> {
        let values = vec![c; grid.cell_count()];
        Self::new(grid, values)
    }

    /// `w(x) = Π_a w_a(x_a)`, each cell valued by its exact average.
    pub fn tensor(grid: DyadicGrid, factors: &[Weight]) -> Result<Self> {
        if factors.len() != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} factors for a {}-dimensional grid",
                factors.len(),
                grid.dim()
            )));
        }
        let per_axis: Vec<Vec<f64>> = factors
            .iter()
            .enumerate()
            .map(|(a, w)| {
                (0..grid.per_axis())
                    .map(|i| {
                        let (lo, hi) = grid.cell_interval(a, i);
                        let iv = Interval::new(lo, hi)?;
                        w.average_power(1.0, &iv)?
                            .value()
                            .ok_or_else(|| Error::InvalidWeight(format!("factor {w} is not integrable on {iv}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_fn(grid, |c| c.iter().enumerate().map(|(a, &i)| per_axis[a][i]).product())
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `{w > λ}`.
    pub fn super_level(&self, lambda: f64) -> GridSet {
        GridSet {
            grid: self.grid.clone(),
            cells: self.values.iter().map(|&v| v > lambda).collect(),
        }
    }

    fn box_extremes(&self, lo: &[usize], hi: &[usize]) -> (f64, f64) {
        let mut mn = f64::INFINITY;
        let mut mx = 0.0f64;
        for_each_in_box(lo, hi, |c| {
            let v = self.values[self.grid.index(c)];
            mn = mn.min(v);
            mx = mx.max(v);
        });
        (mn, mx)
    }
}

/// Supremum over the dyadic cubes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeEstimate {
    pub value: f64,
    pub status: Status,
    pub k: u32,
    pub witness: DyadicCube,
    pub witness_geometry: Cube,
    pub cubes_evaluated: usize,
    pub note: String,
}

fn grid_sup(w: &GridWeight, k: u32, ratio: impl Fn(f64, f64, f64) -> f64 + Sync) -> Result<CubeEstimate> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let grid = &w.grid;
    let sums = Pyramid::build(grid, w.values.clone());
    let cubes = grid.all_cubes();
    let n = grid.dim() as u32;
    let values: Vec<f64> = cubes
        .par_iter()
        .map(|q| {
            let avg = sums.get(q) / (grid.span(q.level) as f64).powi(n as i32);
            let (lo, hi) = grid.dilated_cell_box(q, k);
            let (mn, mx) = w.box_extremes(&lo, &hi);
            ratio(avg, mn, mx)
        })
        .collect();
    let (best, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(CubeEstimate {
        value: value.max(1.0),
        status: Status::Converged,
        k,
        witness: cubes[best].clone(),
        witness_geometry: grid.cube(&cubes[best]),
        cubes_evaluated: cubes.len(),
        note: GRID_NOTE.into(),
    })
}

/// `sup_Q avg_Q w / inf_{kQ ∩ root} w` over every dyadic cube of the grid.
pub fn grid_a1k_constant(w: &GridWeight, k: u32) -> Result<CubeEstimate> {
    grid_sup(w, k, |avg, mn, _| avg / mn)
}

/// `sup_Q sup_{kQ ∩ root} w / avg_Q w` over every dyadic cube of the grid.
pub fn grid_rhinfk_constant(w: &GridWeight, k: u32) -> Result<CubeEstimate> {
    grid_sup(w, k, |avg, _, mx| mx / avg)
}

fn dilated_in_domain(w: &Weight, k: u32, i: &Interval) -> Result<Interval> {
    let (lo, hi) = w.domain();
    i.dilate(k as f64)
        .clip(lo, hi)
        .ok_or_else(|| Error::IntervalOutsideDomain {
            a: i.a(),
            b: i.b(),
            lo,
            hi,
        })
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(())
}

/// `avg_I w / inf_{kI ∩ domain} w`.
pub fn a1k_ratio(w: &Weight, k: u32, i: &Interval) -> Result<f64> {
    let avg = w.average_power(1.0, i)?.value().unwrap_or(f64::INFINITY);
    let inf = w.ess_inf(&dilated_in_domain(w, k, i)?)?;
    Ok(if inf == 0.0 || avg.is_infinite() { f64::INFINITY } else { avg / inf })
}

/// `sup_{kI ∩ domain} w / avg_I w`.
pub fn rhinfk_ratio(w: &Weight, k: u32, i: &Interval) -> Result<f64> {
    let avg = w.average_power(1.0, i)?.value().unwrap_or(f64::INFINITY);
    let sup = w.ess_sup(&dilated_in_domain(w, k, i)?)?;
    Ok(if sup.is_infinite() || avg.is_infinite() { f64::INFINITY } else { sup / avg })
}

/// `A_{1,k}` constant of a one-dimensional weight; `k = 1` is `A_1`.
pub fn a1k_constant(w: &Weight, k: u32, family: &SearchFamily) -> Result<ConstantEstimate> {
    check_k(k)?;
    estimate_sup(w, family, |i| a1k_ratio(w, k, i))
}

/// `RH_{∞,k}` constant of a one-dimensional weight; `k = 1` is `RH_∞`.
pub fn rhinfk_constant(w: &Weight, k: u32, family: &SearchFamily) -> Result<ConstantEstimate> {
    check_k(k)?;
    estimate_sup(w, family, |i| rhinfk_ratio(w, k, i))
}

/// One λ of [`check_nd_super_level`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdLevelRecord {
    pub lambda: f64,
    pub measure: f64,
    pub integral: f64,
    /// `∫_{w>λ} w / (λ |{w>λ}|)`.
    pub ratio: f64,
    pub cover_cubes: usize,
    /// `max_j avg_{Q_j} w / λ` over the cover.
    pub cover_ratio: f64,
    /// Every `inf_{kQ_j ∩ root} w ≤ λ`.
    pub escape_holds: bool,
    pub certificate_valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdLevelScan {
    pub k: u32,
    pub records: Vec<NdLevelRecord>,
    pub worst_ratio: f64,
    pub worst_lambda: f64,
    pub all_certified: bool,
    pub note: String,
}

/// Super-level inequality on the root cube over `n` log-spaced
/// `λ ∈ [min w, max w)`, each level set covered by [`dyadic_cover`].
pub fn check_nd_super_level(w: &GridWeight, k: u32, n: usize) -> Result<NdLevelScan> {
    let cell = w.grid.cell_volume();
    let (mn, mx) = (w.min(), w.max());
    let mut records = Vec::new();
    if mn == mx {
        let total = w.values.iter().sum::<f64>() * cell;
        let measure = w.grid.root.volume();
        records.push(NdLevelRecord {
            lambda: mn,
            measure,
            integral: total,
            ratio: total / (mn * measure),
            cover_cubes: 1,
            cover_ratio: total / (mn * measure),
            escape_holds: true,
            certificate_valid: true,
        });
    } else {
        let (lo, hi) = (mn * (1.0 + NUDGE), mx * (1.0 - NUDGE));
        for j in 0..n.max(1) {
            let t = if n > 1 { j as f64 / (n - 1) as f64 } else { 0.0 };
            let lambda = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
            let g = w.super_level(lambda);
            let count = g.count();
            if count == 0 {
                continue;
            }
            let integral: f64 = w.values.iter().zip(&g.cells).filter(|(_, &c)| c).map(|(v, _)| v).sum::<f64>() * cell;
            let measure = count as f64 * cell;
            let cert = dyadic_cover(&g, k.max(3))?;
            let mut cover_ratio = 0.0f64;
            let mut escape_holds = true;
            for e in &cert.entries {
                let q = &e.cube;
                let s = w.grid.span(q.level);
                let lo: Vec<usize> = q.coords.iter().map(|c| c * s).collect();
                let hi: Vec<usize> = lo.iter().map(|l| l + s).collect();
                let mut sum = 0.0;
                for_each_in_box(&lo, &hi, |c| sum += w.values[w.grid.index(c)]);
                let avg = sum / (s as f64).powi(w.grid.dim() as i32);
                cover_ratio = cover_ratio.max(avg / lambda);
                let (blo, bhi) = w.grid.dilated_cell_box(q, k.max(3));
                escape_holds &= w.box_extremes(&blo, &bhi).0 <= lambda;
            }
            records.push(NdLevelRecord {
                lambda,
                measure,
                integral,
                ratio: integral / (lambda * measure),
                cover_cubes: cert.entries.len(),
                cover_ratio,
                escape_holds,
                certificate_valid: cert.is_valid(),
            });
        }
    }
    let (worst_ratio, worst_lambda) = records
        .iter()
        .fold((f64::NEG_INFINITY, f64::NAN), |(r, l), x| if x.ratio > r { (x.ratio, x.lambda) } else { (r, l) });
    Ok(NdLevelScan {
        k,
        all_certified: records.iter().all(|r| r.certificate_valid && r.escape_holds),
        records,
        worst_ratio,
        worst_lambda,
        note: GRID_NOTE.into(),
    })
}
