use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported `dim * depth`; grids hold at most `2^26` cells.
pub const MAX_LOG2_CELLS: u32 = 26;

/// A finite dyadic tree over the root cube `[-2^(J-1), 2^(J-1))^dim`.
///
/// Level `0` is the root; level `depth` holds the finest cells of side
/// `2^(J - depth)`. The root is centered at the origin so that power weights
/// `|x|^alpha` have their singularity on a grid vertex.
///
/// Cell values are stored row-major over index vectors (last component
/// fastest). Internally many algorithms use the Morton (Z-order) layout, in
/// which every dyadic cube occupies a contiguous range of positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    dim: u32,
    root_exponent: i32,
    depth: u32,
}

/// A dyadic cube addressed by its level and index vector.
///
/// For one-dimensional grids the second index component is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [u32; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeGeometry {
    pub side: f64,
    pub volume: f64,
    pub center: Vec<f64>,
    pub lower_corner: Vec<f64>,
}

impl DyadicGrid {
    pub fn new(dim: u32, root_exponent: i32, depth: u32) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if depth == 0 {
            return Err(Error::Invalid("grid depth must be at least 1".into()));
        }
        let log2_cells = u64::from(dim) * u64::from(depth);
        if log2_cells > u64::from(MAX_LOG2_CELLS) {
            return Err(Error::Resource { log2_cells, cap: MAX_LOG2_CELLS });
        }
        Ok(DyadicGrid { dim, root_exponent, depth })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn root_exponent(&self) -> i32 {
        self.root_exponent
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of finest cells, `2^(dim * depth)`.
    pub fn cell_count(&self) -> usize {
        1usize << (self.dim * self.depth)
    }

    /// Finest cells along one axis, `2^depth`.
    pub fn cells_per_axis(&self) -> usize {
        1usize << self.depth
    }

    pub fn root_side(&self) -> f64 {
        pow2(self.root_exponent)
    }

    pub fn cell_side(&self) -> f64 {
        pow2(self.root_exponent - self.depth as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_side().powi(self.dim as i32)
    }

    /// Number of children of every non-finest cube, `2^dim`.
    pub fn branching(&self) -> usize {
        1usize << self.dim
    }

    pub fn root(&self) -> DyadicCube {
        DyadicCube { level: 0, index: [0, 0] }
    }

    pub fn cube(&self, level: u32, index: [u32; 2]) -> Result<DyadicCube> {
        let cube = DyadicCube { level, index };
        if self.is_valid(&cube) {
            Ok(cube)
        } else {
            Err(Error::Invalid(format!("cube {cube:?} is not on grid {self:?}")))
        }
    }

    pub fn is_valid(&self, cube: &DyadicCube) -> bool {
        if cube.level > self.depth {
            return false;
        }
        let bound = 1u64 << cube.level;
        let ok0 = u64::from(cube.index[0]) < bound;
        let ok1 = if self.dim == 1 { cube.index[1] == 0 } else { u64::from(cube.index[1]) < bound };
        ok0 && ok1
    }

    /// Number of cubes at `level`.
    pub fn cube_count(&self, level: u32) -> usize {
        1usize << (self.dim * level)
    }

    /// Cubes of one level in Morton order.
    pub fn cubes_at(&self, level: u32) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..self.cube_count(level)).map(move |m| self.cube_from_morton(level, m))
    }

    /// Every cube of the grid, coarse to fine.
    pub fn cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..=self.depth).flat_map(move |level| self.cubes_at(level))
    }

    /// All cubes of `D(q)`: `q` and its dyadic descendants.
    pub fn subcubes(&self, q: DyadicCube) -> impl Iterator<Item = DyadicCube> + '_ {
        let base = self.morton(&q);
        (q.level..=self.depth).flat_map(move |level| {
            let shift = self.dim * (level - q.level);
            let start = base << shift;
            let end = (base + 1) << shift;
            (start..end).map(move |m| self.cube_from_morton(level, m))
        })
    }

    /// Morton index of a cube within its level.
    pub fn morton(&self, cube: &DyadicCube) -> usize {
        if self.dim == 1 {
            cube.index[0] as usize
        } else {
            interleave(cube.index[0], cube.index[1]) as usize
        }
    }

    pub fn cube_from_morton(&self, level: u32, m: usize) -> DyadicCube {
        if self.dim == 1 {
            DyadicCube { level, index: [m as u32, 0] }
        } else {
            let (i0, i1) = deinterleave(m as u64);
            DyadicCube { level, index: [i0, i1] }
        }
    }

    /// Contiguous range of Morton cell positions covered by `cube`.
    pub fn morton_range(&self, cube: &DyadicCube) -> Range<usize> {
        let shift = self.dim * (self.depth - cube.level);
        let m = self.morton(cube);
        (m << shift)..((m + 1) << shift)
    }

    /// Row-major cell id of the cell at Morton position `pos`.
    pub fn morton_to_cell(&self, pos: usize) -> usize {
        if self.dim == 1 {
            pos
        } else {
            let (i0, i1) = deinterleave(pos as u64);
            ((i0 as usize) << self.depth) | i1 as usize
        }
    }

    /// Morton position of the row-major cell id `cell`.
    pub fn cell_to_morton(&self, cell: usize) -> usize {
        if self.dim == 1 {
            cell
        } else {
            let i0 = (cell >> self.depth) as u32;
            let i1 = (cell & (self.cells_per_axis() - 1)) as u32;
            interleave(i0, i1) as usize
        }
    }

    /// Reorders row-major cell values into Morton layout.
    pub fn to_morton(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.cell_count());
        if self.dim == 1 {
            return values.to_vec();
        }
        (0..self.cell_count()).map(|pos| values[self.morton_to_cell(pos)]).collect()
    }

    /// Inverse of [`DyadicGrid::to_morton`].
    pub fn from_morton(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.cell_count());
        if self.dim == 1 {
            return values.to_vec();
        }
        let mut out = vec![0.0; values.len()];
        for (pos, &v) in values.iter().enumerate() {
            out[self.morton_to_cell(pos)] = v;
        }
        out
    }

    /// The finest cube holding a row-major cell id.
    pub fn cell_cube(&self, cell: usize) -> DyadicCube {
        self.cube_from_morton(self.depth, self.cell_to_morton(cell))
    }

    /// Row-major ids of the cells inside `cube`, in Morton order.
    pub fn cells(&self, cube: &DyadicCube) -> impl Iterator<Item = usize> + '_ {
        self.morton_range(cube).map(move |pos| self.morton_to_cell(pos))
    }

    pub fn side(&self, cube: &DyadicCube) -> f64 {
        pow2(self.root_exponent - cube.level as i32)
    }

    pub fn volume(&self, cube: &DyadicCube) -> f64 {
        self.side(cube).powi(self.dim as i32)
    }

    pub fn lower_corner(&self, cube: &DyadicCube) -> Vec<f64> {
        let side = self.side(cube);
        let origin = -0.5 * self.root_side();
        (0..self.dim as usize).map(|k| origin + f64::from(cube.index[k]) * side).collect()
    }

    pub fn center(&self, cube: &DyadicCube) -> Vec<f64> {
        let half = 0.5 * self.side(cube);
        self.lower_corner(cube).into_iter().map(|c| c + half).collect()
    }

    pub fn geometry(&self, cube: &DyadicCube) -> CubeGeometry {
        CubeGeometry {
            side: self.side(cube),
            volume: self.volume(cube),
            center: self.center(cube),
            lower_corner: self.lower_corner(cube),
        }
    }

    /// Midpoint of a finest cell, padded with zero in 1D.
    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let h = self.cell_side();
        let origin = -0.5 * self.root_side();
        if self.dim == 1 {
            [origin + (cell as f64 + 0.5) * h, 0.0]
        } else {
            let i0 = cell >> self.depth;
            let i1 = cell & (self.cells_per_axis() - 1);
            [origin + (i0 as f64 + 0.5) * h, origin + (i1 as f64 + 0.5) * h]
        }
    }

    /// Row-major cell id from an axis index vector of the finest level.
    pub fn cell_id(&self, index: [usize; 2]) -> usize {
        if self.dim == 1 {
            index[0]
        } else {
            (index[0] << self.depth) | index[1]
        }
    }

    /// Axis index vector of a row-major cell id.
    pub fn cell_index(&self, cell: usize) -> [usize; 2] {
        if self.dim == 1 {
            [cell, 0]
        } else {
            [cell >> self.depth, cell & (self.cells_per_axis() - 1)]
        }
    }

    /// Cells whose union is the concentric double `2Q` (same center, twice
    /// the side).
    ///
    /// `2Q` is realized only when its faces fall on finest-cell boundaries,
    /// i.e. when `Q` is not a finest cell, and only when it stays inside the
    /// root; both failures are reported as [`Error::OutOfRange`].
    pub fn concentric_double(&self, cube: &DyadicCube) -> Result<CellSet> {
        if !self.is_valid(cube) {
            return Err(Error::Invalid(format!("cube {cube:?} is not on grid {self:?}")));
        }
        if cube.level >= self.depth {
            return Err(Error::OutOfRange(format!(
                "2Q of the finest cell {cube:?} is not aligned to the grid"
            )));
        }
        // Work in units of finest cells along each axis.
        let span = 1usize << (self.depth - cube.level);
        let half = span / 2;
        let n = self.cells_per_axis();
        let mut ranges = [(0usize, 1usize); 2];
        for k in 0..self.dim as usize {
            let lo = cube.index[k] as usize * span;
            if lo < half || lo + span + half > n {
                return Err(Error::OutOfRange(format!("2Q of {cube:?} leaves the root cube")));
            }
            ranges[k] = (lo - half, lo + span + half);
        }
        let mut set = CellSet::empty(*self);
        for i0 in ranges[0].0..ranges[0].1 {
            for i1 in ranges[1].0..ranges[1].1 {
                set.insert(self.cell_id([i0, i1]));
            }
        }
        Ok(set)
    }
}

impl DyadicCube {
    pub fn parent(&self) -> Option<DyadicCube> {
        self.ancestor(1)
    }

    /// The `m`-th dyadic ancestor, defined iff `m <= level`.
    pub fn ancestor(&self, m: u32) -> Option<DyadicCube> {
        if m > self.level {
            return None;
        }
        Some(DyadicCube { level: self.level - m, index: [self.index[0] >> m, self.index[1] >> m] })
    }

    /// Children in Morton order. The caller is responsible for not asking
    /// for children of finest cells.
    pub fn children(&self, dim: u32) -> impl Iterator<Item = DyadicCube> {
        let me = *self;
        let count = 1u32 << dim;
        (0..count).map(move |c| {
            let (b0, b1) = if dim == 1 { (c, 0) } else { (c >> 1, c & 1) };
            DyadicCube {
                level: me.level + 1,
                index: [2 * me.index[0] + b0, if dim == 1 { 0 } else { 2 * me.index[1] + b1 }],
            }
        })
    }

    /// Whether `other` is a (non-strict) dyadic descendant of `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.level >= self.level && other.ancestor(other.level - self.level) == Some(*self)
    }
}

/// A subset of the finest cells, indexed by row-major cell id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    grid: DyadicGrid,
    members: Vec<bool>,
}

impl CellSet {
    pub fn empty(grid: DyadicGrid) -> Self {
        CellSet { grid, members: vec![false; grid.cell_count()] }
    }

    pub fn full(grid: DyadicGrid) -> Self {
        CellSet { grid, members: vec![true; grid.cell_count()] }
    }

    pub fn from_cells(grid: DyadicGrid, cells: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = CellSet::empty(grid);
        for c in cells {
            if c >= grid.cell_count() {
                return Err(Error::Invalid(format!("cell {c} outside the grid")));
            }
            set.members[c] = true;
        }
        Ok(set)
    }

    pub fn from_cube(grid: DyadicGrid, cube: &DyadicCube) -> Self {
        let mut set = CellSet::empty(grid);
        for c in grid.cells(cube) {
            set.members[c] = true;
        }
        set
    }

    pub fn from_mask(grid: DyadicGrid, members: Vec<bool>) -> Result<Self> {
        if members.len() != grid.cell_count() {
            return Err(Error::Invalid(format!(
                "mask has {} entries, grid has {} cells",
                members.len(),
                grid.cell_count()
            )));
        }
        Ok(CellSet { grid, members })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn insert(&mut self, cell: usize) {
        self.members[cell] = true;
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.members[cell]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Lebesgue measure of the set.
    pub fn measure(&self) -> f64 {
        self.len() as f64 * self.grid.cell_volume()
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let members = self.members.iter().zip(&other.members).map(|(a, b)| *a || *b).collect();
        CellSet { grid: self.grid, members }
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let members = self.members.iter().zip(&other.members).map(|(a, b)| *a && *b).collect();
        CellSet { grid: self.grid, members }
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let members = self.members.iter().zip(&other.members).map(|(a, b)| *a && !*b).collect();
        CellSet { grid: self.grid, members }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| !*a || *b)
    }
}

/// Per-level sums of a cell quantity, stored in Morton order.
///
/// `level(l)[m]` is the sum over the cube with Morton index `m` at level `l`;
/// every entry is the sum of its children's entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    dim: u32,
    levels: Vec<Vec<f64>>,
}

impl Pyramid {
    /// Builds the pyramid from Morton-ordered finest-cell values.
    pub fn from_morton(grid: &DyadicGrid, leaves: Vec<f64>) -> Self {
        assert_eq!(leaves.len(), grid.cell_count());
        let b = grid.branching();
        let mut levels = Vec::with_capacity(grid.depth() as usize + 1);
        levels.push(leaves);
        for _ in 0..grid.depth() {
            let finer = levels.last().expect("non-empty");
            let coarser: Vec<f64> = finer.chunks_exact(b).map(|c| c.iter().sum()).collect();
            levels.push(coarser);
        }
        levels.reverse();
        Pyramid { dim: grid.dim(), levels }
    }

    /// Builds the pyramid from row-major finest-cell values.
    pub fn from_cells(grid: &DyadicGrid, values: &[f64]) -> Self {
        Self::from_morton(grid, grid.to_morton(values))
    }

    pub fn level(&self, level: u32) -> &[f64] {
        &self.levels[level as usize]
    }

    pub fn get(&self, grid: &DyadicGrid, cube: &DyadicCube) -> f64 {
        self.levels[cube.level as usize][grid.morton(cube)]
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn spread(x: u32) -> u64 {
    let mut v = u64::from(x);
    v = (v | (v << 16)) & 0x0000_FFFF_0000_FFFF;
    v = (v | (v << 8)) & 0x00FF_00FF_00FF_00FF;
    v = (v | (v << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    v = (v | (v << 1)) & 0x5555_5555_5555_5555;
    v
}

fn compact(mut v: u64) -> u32 {
    v &= 0x5555_5555_5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    v = (v | (v >> 4)) & 0x00FF_00FF_00FF_00FF;
    v = (v | (v >> 8)) & 0x0000_FFFF_0000_FFFF;
    v = (v | (v >> 16)) & 0x0000_0000_FFFF_FFFF;
    v as u32
}

/// Morton code with the first coordinate in the higher bit of each pair.
fn interleave(i0: u32, i1: u32) -> u64 {
    (spread(i0) << 1) | spread(i1)
}

fn deinterleave(m: u64) -> (u32, u32) {
    (compact(m >> 1), compact(m))
}
