//! Dense row-major grids and cell addressing for the wildfire map.
//!
//! The default map is 100x100 cells of 2x2 m (a 200x200 m, roughly ten acre
//! square). Coordinates follow screen convention: `col` grows east, `row`
//! grows south, so row 0 is the northern edge. Metric positions use the
//! same orientation with `x` east and `y` south, in meters from the
//! north-west corner.

use serde::{Deserialize, Serialize};

/// Side length of the default wildfire grid, in cells.
pub const GRID_SIZE: usize = 100;
/// Edge length of one wildfire cell in meters.
pub const CELL_METERS: f64 = 2.0;

/// Grid shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
}

impl Dims {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn square(n: usize) -> Self {
        Self { rows: n, cols: n }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Checked cell constructor.
    pub fn cell(&self, row: i64, col: i64) -> Option<CellIndex> {
        if row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols {
            Some(CellIndex::new(row as usize, col as usize))
        } else {
            None
        }
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        (cell.row as usize) < self.rows && (cell.col as usize) < self.cols
    }

    pub fn index_of(&self, cell: CellIndex) -> usize {
        debug_assert!(self.contains(cell), "{cell:?} outside {self:?}");
        cell.row as usize * self.cols + cell.col as usize
    }

    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index / self.cols, index % self.cols)
    }

    pub fn is_boundary(&self, cell: CellIndex) -> bool {
        cell.row == 0
            || cell.col == 0
            || cell.row as usize + 1 == self.rows
            || cell.col as usize + 1 == self.cols
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(move |i| self.cell_at(i))
    }

    /// The Moore (8-adjacent) neighbors of `cell` that lie inside the grid.
    pub fn moore_neighbors(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        MOORE_OFFSETS
            .iter()
            .filter_map(move |&(dr, dc)| self.cell(cell.row as i64 + dr, cell.col as i64 + dc))
    }

    /// Metric extent of the grid, `(width_m, height_m)`.
    pub fn extent_m(&self) -> (f64, f64) {
        (self.cols as f64 * CELL_METERS, self.rows as f64 * CELL_METERS)
    }
}

impl Default for Dims {
    fn default() -> Self {
        Self::square(GRID_SIZE)
    }
}

/// The eight Moore-neighborhood offsets `(drow, dcol)`, clockwise from north.
pub const MOORE_OFFSETS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Address of one wildfire cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: u16,
    pub col: u16,
}

impl CellIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self {
            row: row as u16,
            col: col as u16,
        }
    }

    /// Center of the cell in meters.
    pub fn center_m(&self) -> Point2 {
        Point2::new(
            (self.col as f64 + 0.5) * CELL_METERS,
            (self.row as f64 + 0.5) * CELL_METERS,
        )
    }

    pub fn chebyshev(&self, other: CellIndex) -> usize {
        let dr = (self.row as i64 - other.row as i64).unsigned_abs();
        let dc = (self.col as i64 - other.col as i64).unsigned_abs();
        dr.max(dc) as usize
    }

    /// Euclidean distance between cell centers in meters.
    pub fn distance_m(&self, other: CellIndex) -> f64 {
        self.center_m().distance(other.center_m())
    }

    pub fn offset(&self, drow: i64, dcol: i64) -> (i64, i64) {
        (self.row as i64 + drow, self.col as i64 + dcol)
    }
}

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// A 2-D point or vector in meters (`x` east, `y` south).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        self.sub(other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 1e-12).then(|| self.scale(1.0 / n))
    }
}

/// Dense row-major grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    dims: Dims,
    data: Vec<T>,
}

pub type BoolGrid = Grid<bool>;
pub type FuelGrid = Grid<u32>;
pub type RealGrid = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(dims: Dims, value: T) -> Self {
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }
}

impl<T> Grid<T> {
    /// Wraps row-major data. Panics if the length does not match `dims`.
    pub fn from_vec(dims: Dims, data: Vec<T>) -> Self {
        assert_eq!(data.len(), dims.len(), "grid data length mismatch");
        Self { dims, data }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(CellIndex) -> T) -> Self {
        let data = (0..dims.len()).map(|i| f(dims.cell_at(i))).collect();
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, &T)> + '_ {
        let dims = self.dims;
        self.data.iter().enumerate().map(move |(i, v)| (dims.cell_at(i), v))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            dims: self.dims,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn get_rc(&self, row: i64, col: i64) -> Option<&T> {
        self.dims.cell(row, col).map(|c| &self[c])
    }
}

impl<T> std::ops::Index<CellIndex> for Grid<T> {
    type Output = T;

    fn index(&self, cell: CellIndex) -> &T {
        &self.data[self.dims.index_of(cell)]
    }
}

impl<T> std::ops::IndexMut<CellIndex> for Grid<T> {
    fn index_mut(&mut self, cell: CellIndex) -> &mut T {
        let i = self.dims.index_of(cell);
        &mut self.data[i]
    }
}

impl BoolGrid {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Cells set to `true`, row-major.
    pub fn true_cells(&self) -> Vec<CellIndex> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.dims.cell_at(i))
            .collect()
    }

    /// Inclusive bounding box `(r0, c0, r1, c1)` of the set cells.
    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let cols = self.dims.cols;
        let mut bb: Option<BoundingBox> = None;
        for (r, row) in self.data.chunks_exact(cols).enumerate() {
            // Branch-free reduction first; most rows hold no fire.
            if !row.iter().fold(false, |a, &b| a | b) {
                continue;
            }
            let c0 = row.iter().position(|&b| b).expect("row has a true cell");
            let c1 = row.iter().rposition(|&b| b).expect("row has a true cell");
            bb = Some(match bb {
                None => BoundingBox { r0: r, c0, r1: r, c1 },
                Some(b) => BoundingBox {
                    r0: b.r0,
                    c0: b.c0.min(c0),
                    r1: r,
                    c1: b.c1.max(c1),
                },
            });
        }
        bb
    }
}

/// Inclusive rectangular cell range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundingBox {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

impl BoundingBox {
    pub fn point(r: usize, c: usize) -> Self {
        Self { r0: r, c0: c, r1: r, c1: c }
    }

    pub fn include(self, r: usize, c: usize) -> Self {
        Self {
            r0: self.r0.min(r),
            c0: self.c0.min(c),
            r1: self.r1.max(r),
            c1: self.c1.max(c),
        }
    }

    pub fn union(self, other: BoundingBox) -> Self {
        self.include(other.r0, other.c0).include(other.r1, other.c1)
    }

    /// Grows the box by `margin` cells on every side, clipped to `dims`.
    pub fn expand(self, margin: usize, dims: Dims) -> Self {
        Self {
            r0: self.r0.saturating_sub(margin),
            c0: self.c0.saturating_sub(margin),
            r1: (self.r1 + margin).min(dims.rows - 1),
            c1: (self.c1 + margin).min(dims.cols - 1),
        }
    }
}
