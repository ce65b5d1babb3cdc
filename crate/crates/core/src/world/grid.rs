use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::{heading_vector, Point};

/// Edge length of one occupancy cell in meters. One forward action covers
/// exactly one cell.
pub const CELL: f64 = 0.25;

// Integer move costs keep path lengths order-independent, which makes
// geodesic distances exactly symmetric.
const STRAIGHT_COST: u64 = 1_000_000;
const DIAGONAL_COST: u64 = 1_414_214;

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

pub type Cell = (i64, i64);

/// Boolean occupancy grid anchored at the world origin. Cells outside the
/// grid count as occupied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn filled(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            occupied: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn index(&self, (cx, cy): Cell) -> Option<usize> {
        if cx < 0 || cy < 0 || cx as usize >= self.width || cy as usize >= self.height {
            None
        } else {
            Some(cy as usize * self.width + cx as usize)
        }
    }

    fn cell_at(&self, idx: usize) -> Cell {
        ((idx % self.width) as i64, (idx / self.width) as i64)
    }

    pub fn set_free(&mut self, cell: Cell) {
        if let Some(i) = self.index(cell) {
            self.occupied[i] = false;
        }
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.index(cell).is_none_or(|i| self.occupied[i])
    }

    pub fn cell_of(p: &Point) -> Cell {
        ((p.x / CELL).floor() as i64, (p.y / CELL).floor() as i64)
    }

    pub fn cell_center((cx, cy): Cell) -> Point {
        Point::new((cx as f64 + 0.5) * CELL, (cy as f64 + 0.5) * CELL)
    }

    pub fn is_free_point(&self, p: &Point) -> bool {
        p.x.is_finite() && p.y.is_finite() && !self.is_occupied(Self::cell_of(p))
    }

    /// Distance from `p` to the nearest occupied cell, searched out to
    /// `radius`; returns `radius` when nothing is closer.
    pub fn clearance(&self, p: &Point, radius: f64) -> f64 {
        let (cx, cy) = Self::cell_of(p);
        let reach = (radius / CELL).ceil() as i64 + 1;
        let mut best = radius;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let cell = (cx + dx, cy + dy);
                if !self.is_occupied(cell) {
                    continue;
                }
                let x0 = cell.0 as f64 * CELL;
                let y0 = cell.1 as f64 * CELL;
                let ex = (x0 - p.x).max(0.0).max(p.x - (x0 + CELL));
                let ey = (y0 - p.y).max(0.0).max(p.y - (y0 + CELL));
                best = best.min(ex.hypot(ey));
            }
        }
        best
    }

    /// Free travel distance from `origin` along `heading`, capped at `max`.
    /// Exact cell traversal; returns 0 when `origin` is itself occupied.
    pub fn free_distance(&self, origin: &Point, heading: f64, max: f64) -> f64 {
        let (dx, dy) = heading_vector(heading);
        let mut cell = Self::cell_of(origin);
        if self.is_occupied(cell) {
            return 0.0;
        }
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        let boundary = |c: i64, step: i64| {
            if step > 0 {
                (c + 1) as f64 * CELL
            } else {
                c as f64 * CELL
            }
        };
        let mut t_max_x = if dx.abs() < 1e-12 {
            f64::INFINITY
        } else {
            (boundary(cell.0, step_x) - origin.x) / dx
        };
        let mut t_max_y = if dy.abs() < 1e-12 {
            f64::INFINITY
        } else {
            (boundary(cell.1, step_y) - origin.y) / dy
        };
        let t_delta_x = if dx.abs() < 1e-12 {
            f64::INFINITY
        } else {
            CELL / dx.abs()
        };
        let t_delta_y = if dy.abs() < 1e-12 {
            f64::INFINITY
        } else {
            CELL / dy.abs()
        };

        loop {
            let t = t_max_x.min(t_max_y).max(0.0);
            if t >= max {
                return max;
            }
            if (t_max_x - t_max_y).abs() < 1e-12 {
                // passing exactly through a corner: both side cells block
                let side_x = (cell.0 + step_x, cell.1);
                let side_y = (cell.0, cell.1 + step_y);
                cell = (cell.0 + step_x, cell.1 + step_y);
                if self.is_occupied(side_x) || self.is_occupied(side_y) || self.is_occupied(cell) {
                    return t;
                }
                t_max_x += t_delta_x;
                t_max_y += t_delta_y;
            } else if t_max_x < t_max_y {
                cell.0 += step_x;
                t_max_x += t_delta_x;
                if self.is_occupied(cell) {
                    return t;
                }
            } else {
                cell.1 += step_y;
                t_max_y += t_delta_y;
                if self.is_occupied(cell) {
                    return t;
                }
            }
        }
    }

    /// Samples the segment every `spacing` meters (endpoint included) and
    /// reports whether every sample lies in a free cell.
    pub fn segment_free_sampled(&self, a: &Point, b: &Point, spacing: f64) -> bool {
        let len = a.distance(b);
        let n = (len / spacing).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let s = (i as f64 * spacing).min(len) / len.max(f64::MIN_POSITIVE);
            let p = Point::new(a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s);
            self.is_free_point(&p)
        })
    }

    /// Free cell nearest to `p` (the containing cell when it is free).
    pub fn nearest_free_cell(&self, p: &Point) -> Option<Cell> {
        let start = Self::cell_of(p);
        if !self.is_occupied(start) {
            return Some(start);
        }
        let limit = self.width.max(self.height) as i64;
        for r in 1..=limit {
            let mut best: Option<(f64, Cell)> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let c = (start.0 + dx, start.1 + dy);
                    if self.is_occupied(c) {
                        continue;
                    }
                    let d = Self::cell_center(c).distance(p);
                    if best.is_none_or(|(bd, bc)| d < bd || (d == bd && c < bc)) {
                        best = Some((d, c));
                    }
                }
            }
            if let Some((_, c)) = best {
                return Some(c);
            }
        }
        None
    }

    fn neighbors(&self, cell: Cell) -> impl Iterator<Item = (Cell, u64, bool)> + '_ {
        NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
            let next = (cell.0 + dx, cell.1 + dy);
            if self.is_occupied(next) {
                return None;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && (self.is_occupied((cell.0 + dx, cell.1)) || self.is_occupied((cell.0, cell.1 + dy))) {
                return None;
            }
            Some((next, if diagonal { DIAGONAL_COST } else { STRAIGHT_COST }, diagonal))
        })
    }

    /// Single-source shortest paths over the 8-connected free cells.
    /// Diagonal moves may not cut past an occupied corner.
    pub fn distance_field(&self, source: Cell) -> DistanceField {
        let n = self.width * self.height;
        let mut cost = vec![u64::MAX; n];
        let mut moves = vec![(0u32, 0u32); n];
        let mut heap = BinaryHeap::new();
        if let Some(s) = self.index(source).filter(|&i| !self.occupied[i]) {
            cost[s] = 0;
            heap.push(Reverse((0u64, s)));
        }
        while let Some(Reverse((c, i))) = heap.pop() {
            if c > cost[i] {
                continue;
            }
            let cell = self.cell_at(i);
            for (next, step, diagonal) in self.neighbors(cell) {
                let j = self.index(next).expect("neighbor inside grid");
                let nc = c + step;
                if nc < cost[j] {
                    cost[j] = nc;
                    let (s, d) = moves[i];
                    moves[j] = if diagonal { (s, d + 1) } else { (s + 1, d) };
                    heap.push(Reverse((nc, j)));
                }
            }
        }
        DistanceField {
            width: self.width,
            height: self.height,
            source,
            cost,
            moves,
        }
    }
}

/// Shortest-path costs from one source cell to every free cell.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: usize,
    height: usize,
    source: Cell,
    cost: Vec<u64>,
    moves: Vec<(u32, u32)>,
}

impl DistanceField {
    pub fn source(&self) -> Cell {
        self.source
    }

    fn index(&self, (cx, cy): Cell) -> Option<usize> {
        if cx < 0 || cy < 0 || cx as usize >= self.width || cy as usize >= self.height {
            None
        } else {
            Some(cy as usize * self.width + cx as usize)
        }
    }

    /// Path length in meters from the source to `cell`, if reachable.
    pub fn meters(&self, cell: Cell) -> Option<f64> {
        let i = self.index(cell)?;
        if self.cost[i] == u64::MAX {
            return None;
        }
        let (s, d) = self.moves[i];
        Some(s as f64 * CELL + d as f64 * CELL * std::f64::consts::SQRT_2)
    }

    /// Cell sequence from `from` back to the source, following strictly
    /// decreasing cost. Ties resolve to the first neighbor in a fixed order.
    pub fn descend(&self, grid: &OccupancyGrid, from: Cell) -> Option<Vec<Cell>> {
        let mut i = self.index(from)?;
        if self.cost[i] == u64::MAX {
            return None;
        }
        let mut path = vec![from];
        let mut cell = from;
        while cell != self.source {
            let (next, _) = grid
                .neighbors(cell)
                .filter_map(|(n, step, _)| {
                    let j = self.index(n)?;
                    (self.cost[j] != u64::MAX && self.cost[j] + step == self.cost[i]).then_some((n, j))
                })
                .next()?;
            cell = next;
            i = self.index(cell)?;
            path.push(cell);
        }
        Some(path)
    }
}
