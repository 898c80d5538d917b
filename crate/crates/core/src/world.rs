//! Occupancy-grid world: map text I/O, footprint collision, lidar raycasts and
//! an obstacle-aware distance field used by the planner heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kinematics::{RobotState, VehicleParams};

/// Sentinel stored in a [`DistanceField`] for cells that cannot reach the goal.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Binary occupancy grid. Cell `(ix, iy)` covers
/// `[origin_x + ix*res, origin_x + (ix+1)*res) x [origin_y + iy*res, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin_x: f64, origin_y: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("grid dimensions must be positive".into()));
        }
        if !(resolution > 0.0) || !resolution.is_finite() || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::InvalidInput("grid resolution/origin invalid".into()));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin_x,
            origin_y,
            cells: vec![false; width * height],
        })
    }

    /// An empty grid covering `size_x` by `size_y` meters from the origin.
    pub fn empty(size_x: f64, size_y: f64, resolution: f64) -> Result<Self> {
        let w = (size_x / resolution).round() as usize;
        let h = (size_y / resolution).round() as usize;
        Self::new(w, h, resolution, 0.0, 0.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    pub fn size_m(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    pub fn diagonal(&self) -> f64 {
        let (w, h) = self.size_m();
        w.hypot(h)
    }

    #[inline]
    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    #[inline]
    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.cells[self.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        let i = self.index(ix, iy);
        self.cells[i] = occupied;
    }

    /// Marks every cell whose center lies inside the axis-aligned box.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, occupied: bool) {
        let (lo_x, hi_x) = (x0.min(x1), x0.max(x1));
        let (lo_y, hi_y) = (y0.min(y1), y0.max(y1));
        for iy in 0..self.height {
            for ix in 0..self.width {
                let (cx, cy) = self.cell_center(ix, iy);
                if cx >= lo_x && cx <= hi_x && cy >= lo_y && cy <= hi_y {
                    self.set(ix, iy, occupied);
                }
            }
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_x + (ix as f64 + 0.5) * self.resolution,
            self.origin_y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Fractional cell coordinates of a world point (may be out of range).
    #[inline]
    fn to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.origin_x) / self.resolution, (y - self.origin_y) / self.resolution)
    }

    /// Cell containing a world point, if it lies inside the map.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (gx, gy) = self.to_grid(x, y);
        if gx < 0.0 || gy < 0.0 {
            return None;
        }
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    /// Inclusive on all four edges.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (w, h) = self.size_m();
        x >= self.origin_x && x <= self.origin_x + w && y >= self.origin_y && y <= self.origin_y + h
    }

    /// True if the point is outside the map or inside an occupied cell.
    pub fn point_blocked(&self, x: f64, y: f64) -> bool {
        match self.world_to_cell(x, y) {
            Some((ix, iy)) => self.is_occupied(ix, iy),
            None => true,
        }
    }

    /// Parses the text map format: a `GRID w h res ox oy` header followed by
    /// `h` rows of `w` characters (`.` free, `#` occupied), minimum-y row
    /// first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::ParseError {
            line: 1,
            msg: "empty map file".into(),
        })?;
        let perr = |line: usize, msg: &str| Error::ParseError { line, msg: msg.into() };
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 6 || toks[0] != "GRID" {
            return Err(perr(1, "expected `GRID <w> <h> <res> <ox> <oy>`"));
        }
        let width: usize = toks[1].parse().map_err(|_| perr(1, "bad width"))?;
        let height: usize = toks[2].parse().map_err(|_| perr(1, "bad height"))?;
        let res: f64 = toks[3].parse().map_err(|_| perr(1, "bad resolution"))?;
        let ox: f64 = toks[4].parse().map_err(|_| perr(1, "bad origin x"))?;
        let oy: f64 = toks[5].parse().map_err(|_| perr(1, "bad origin y"))?;
        let mut grid = Self::new(width, height, res, ox, oy).map_err(|e| perr(1, &e.to_string()))?;
        let mut rows = 0;
        for (i, line) in lines {
            let lineno = i + 1;
            if rows == height {
                if line.is_empty() {
                    continue;
                }
                return Err(perr(lineno, "more rows than declared height"));
            }
            let bytes = line.as_bytes();
            if bytes.len() != width {
                return Err(perr(
                    lineno,
                    &format!("row has {} cells, expected {width}", bytes.len()),
                ));
            }
            for (ix, &b) in bytes.iter().enumerate() {
                match b {
                    b'.' => {}
                    b'#' => grid.set(ix, rows, true),
                    _ => return Err(perr(lineno, &format!("unexpected character {:?}", b as char))),
                }
            }
            rows += 1;
        }
        if rows != height {
            return Err(perr(rows + 2, &format!("expected {height} rows, found {rows}")));
        }
        Ok(grid)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * (self.height + 1) + 48);
        let _ = writeln!(
            s,
            "GRID {} {} {} {} {}",
            self.width, self.height, self.resolution, self.origin_x, self.origin_y
        );
        for iy in 0..self.height {
            for ix in 0..self.width {
                s.push(if self.is_occupied(ix, iy) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }

    /// Footprint corners in world coordinates, counter-clockwise from rear-right.
    pub fn footprint_corners(state: &RobotState, vehicle: &VehicleParams) -> [(f64, f64); 4] {
        let (s, c) = state.theta.sin_cos();
        let rear = -vehicle.rear_axle_offset;
        let front = vehicle.footprint_length - vehicle.rear_axle_offset;
        let hw = vehicle.footprint_width / 2.0;
        let tf = |a: f64, l: f64| (state.x + a * c - l * s, state.y + a * s + l * c);
        [tf(rear, -hw), tf(front, -hw), tf(front, hw), tf(rear, hw)]
    }

    /// True iff an occupied cell center lies inside the rotated footprint or
    /// any footprint corner leaves the map.
    pub fn footprint_collides(&self, state: &RobotState, vehicle: &VehicleParams) -> bool {
        let corners = Self::footprint_corners(state, vehicle);
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &corners {
            if !self.contains_point(x, y) {
                return true;
            }
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let (gx0, gy0) = self.to_grid(min_x, min_y);
        let (gx1, gy1) = self.to_grid(max_x, max_y);
        let ix0 = (gx0 - 0.5).ceil().max(0.0) as usize;
        let iy0 = (gy0 - 0.5).ceil().max(0.0) as usize;
        let ix1 = ((gx1 - 0.5).floor() as isize).min(self.width as isize - 1);
        let iy1 = ((gy1 - 0.5).floor() as isize).min(self.height as isize - 1);
        if ix1 < ix0 as isize || iy1 < iy0 as isize {
            return false;
        }
        let (s, c) = state.theta.sin_cos();
        let rear = -vehicle.rear_axle_offset;
        let front = vehicle.footprint_length - vehicle.rear_axle_offset;
        let hw = vehicle.footprint_width / 2.0;
        for iy in iy0..=iy1 as usize {
            let row = iy * self.width;
            for ix in ix0..=ix1 as usize {
                if !self.cells[row + ix] {
                    continue;
                }
                let (cx, cy) = self.cell_center(ix, iy);
                let dx = cx - state.x;
                let dy = cy - state.y;
                let along = dx * c + dy * s;
                let lat = -dx * s + dy * c;
                if along >= rear && along <= front && lat.abs() <= hw {
                    return true;
                }
            }
        }
        false
    }

    /// Distance from `origin` along `angle` to the boundary of the first
    /// occupied cell, or `max_range` if none is hit before the ray leaves the
    /// map or exceeds the range.
    pub fn raycast(&self, origin: (f64, f64), angle: f64, max_range: f64) -> Result<f64> {
        if !(max_range > 0.0) {
            return Err(Error::InvalidInput("max_range must be positive".into()));
        }
        if !self.contains_point(origin.0, origin.1) {
            return Err(Error::InvalidInput(format!("ray origin {origin:?} outside the map")));
        }
        let (gx, gy) = self.to_grid(origin.0, origin.1);
        let mut ix = (gx.floor() as isize).min(self.width as isize - 1);
        let mut iy = (gy.floor() as isize).min(self.height as isize - 1);
        if self.is_occupied(ix as usize, iy as usize) {
            return Ok(0.0);
        }
        let (dy, dx) = angle.sin_cos();
        let res = self.resolution;
        let step_x: isize = if dx > 0.0 { 1 } else { -1 };
        let step_y: isize = if dy > 0.0 { 1 } else { -1 };
        // Ray parameter (meters) at which the next vertical / horizontal cell
        // boundary is crossed.
        let mut t_max_x = if dx > 0.0 {
            ((ix + 1) as f64 - gx) * res / dx
        } else if dx < 0.0 {
            (gx - ix as f64) * res / -dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy > 0.0 {
            ((iy + 1) as f64 - gy) * res / dy
        } else if dy < 0.0 {
            (gy - iy as f64) * res / -dy
        } else {
            f64::INFINITY
        };
        let t_dx = if dx != 0.0 { res / dx.abs() } else { f64::INFINITY };
        let t_dy = if dy != 0.0 { res / dy.abs() } else { f64::INFINITY };
        loop {
            let t = if t_max_x < t_max_y {
                ix += step_x;
                let t = t_max_x;
                t_max_x += t_dx;
                t
            } else {
                iy += step_y;
                let t = t_max_y;
                t_max_y += t_dy;
                t
            };
            if t >= max_range {
                return Ok(max_range);
            }
            if ix < 0 || iy < 0 || ix >= self.width as isize || iy >= self.height as isize {
                return Ok(max_range);
            }
            if self.is_occupied(ix as usize, iy as usize) {
                return Ok(t.max(0.0));
            }
        }
    }

    /// Cells whose centers lie within `radius` of an occupied cell center.
    pub fn inflated(&self, radius: f64) -> Vec<bool> {
        let r = (radius / self.resolution).floor() as isize;
        let r2 = (radius / self.resolution).powi(2) + 1e-9;
        let mut offsets = Vec::new();
        for oy in -r..=r {
            for ox in -r..=r {
                if (ox * ox + oy * oy) as f64 <= r2 {
                    offsets.push((ox, oy));
                }
            }
        }
        let mut out = self.cells.clone();
        let (w, h) = (self.width as isize, self.height as isize);
        for iy in 0..h {
            for ix in 0..w {
                if !self.cells[(iy * w + ix) as usize] {
                    continue;
                }
                for &(ox, oy) in &offsets {
                    let (nx, ny) = (ix + ox, iy + oy);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h {
                        out[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        out
    }

    /// 8-connected shortest-path distances (meters) from every cell center to
    /// the goal cell, through cells left free after inflating obstacles by
    /// `inflation`.
    pub fn distance_field(&self, goal: (f64, f64), inflation: f64) -> Result<DistanceField> {
        let (gx, gy) = self
            .world_to_cell(goal.0, goal.1)
            .ok_or_else(|| Error::InvalidInput(format!("goal {goal:?} outside the map")))?;
        let blocked = self.inflated(inflation.max(0.0));
        let w = self.width;
        if blocked[gy * w + gx] {
            return Err(Error::GoalOccupied);
        }
        let res = self.resolution;
        let diag = res * std::f64::consts::SQRT_2;
        let mut values = vec![UNREACHABLE; w * self.height];
        let mut heap = BinaryHeap::new();
        values[gy * w + gx] = 0.0;
        heap.push(HeapItem { cost: 0.0, index: gy * w + gx });
        while let Some(HeapItem { cost, index }) = heap.pop() {
            if cost > values[index] {
                continue;
            }
            let (ix, iy) = ((index % w) as isize, (index / w) as isize);
            for (ox, oy) in NEIGHBORS_8 {
                let (nx, ny) = (ix + ox, iy + oy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= self.height as isize {
                    continue;
                }
                let ni = ny as usize * w + nx as usize;
                if blocked[ni] {
                    continue;
                }
                let nc = cost + if ox != 0 && oy != 0 { diag } else { res };
                if nc < values[ni] {
                    values[ni] = nc;
                    heap.push(HeapItem { cost: nc, index: ni });
                }
            }
        }
        Ok(DistanceField {
            width: w,
            height: self.height,
            resolution: res,
            origin_x: self.origin_x,
            origin_y: self.origin_y,
            goal_cell: (gx, gy),
            values,
        })
    }
}

pub(crate) const NEIGHBORS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    index: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-cell shortest-path distance to a goal cell; see
/// [`OccupancyGrid::distance_field`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    goal_cell: (usize, usize),
    values: Vec<f64>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal_cell(&self) -> (usize, usize) {
        self.goal_cell
    }

    /// Raw value, [`UNREACHABLE`] for cells that cannot reach the goal.
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.width + ix]
    }

    /// Value of the cell containing a world point; `None` outside the map.
    pub fn at(&self, x: f64, y: f64) -> Option<f64> {
        let gx = (x - self.origin_x) / self.resolution;
        let gy = (y - self.origin_y) / self.resolution;
        if gx < 0.0 || gy < 0.0 {
            return None;
        }
        let (ix, iy) = (gx as usize, gy as usize);
        (ix < self.width && iy < self.height).then(|| self.get(ix, iy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn parse_empty_and_single_cell() {
        let g = OccupancyGrid::parse("GRID 3 2 0.1 0 0\n...\n...\n").unwrap();
        assert_eq!(g.occupied_count(), 0);
        let g = OccupancyGrid::parse("GRID 3 2 0.1 0 0\n..#\n...\n").unwrap();
        assert_eq!(g.occupied_count(), 1);
        assert!(g.is_occupied(2, 0));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = OccupancyGrid::parse("GRID 3 2 0.1 0 0\n...\n....\n").unwrap_err();
        assert_eq!(e, Error::ParseError { line: 3, msg: "row has 4 cells, expected 3".into() });
        assert!(matches!(OccupancyGrid::parse("GRID 3 x 0.1 0 0\n"), Err(Error::ParseError { line: 1, .. })));
        assert!(matches!(OccupancyGrid::parse("GRD 3 2 0.1 0 0\n"), Err(Error::ParseError { line: 1, .. })));
        assert!(matches!(
            OccupancyGrid::parse("GRID 3 2 0.1 0 0\n..x\n...\n"),
            Err(Error::ParseError { line: 2, .. })
        ));
        assert!(matches!(OccupancyGrid::parse("GRID 3 2 0.1 0 0\n...\n"), Err(Error::ParseError { .. })));
        assert!(matches!(OccupancyGrid::parse(""), Err(Error::ParseError { line: 1, .. })));
    }

    #[test]
    fn save_roundtrip_is_byte_identical() {
        let text = "GRID 4 3 0.25 -1.5 2\n.#..\n....\n##.#\n";
        let g = OccupancyGrid::parse(text).unwrap();
        assert_eq!(g.to_text(), text);
    }

    #[test]
    fn footprint_empty_and_bounds() {
        let g = OccupancyGrid::empty(5.0, 5.0, 0.1).unwrap();
        let v = VehicleParams::default();
        assert!(!g.footprint_collides(&RobotState::new(2.5, 2.5, 0.7), &v));
        assert!(g.footprint_collides(&RobotState::new(4.7, 2.5, 0.0), &v));
        assert!(g.footprint_collides(&RobotState::new(0.1, 2.5, PI / 2.0), &v));
    }

    #[test]
    fn footprint_hits_single_cell() {
        let mut g = OccupancyGrid::empty(3.0, 3.0, 0.1).unwrap();
        // cell 11 spans [1.1, 1.2); its center is (1.15, 1.15). Use a grid
        // shifted by half a cell so the center lands on (1.1, 1.1).
        g = OccupancyGrid::new(g.width(), g.height(), 0.1, -0.05, -0.05).unwrap();
        g.set(11, 11, true);
        let (cx, cy) = g.cell_center(11, 11);
        assert_abs_diff_eq!(cx, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(cy, 1.1, epsilon = 1e-12);
        let v = VehicleParams::default();
        assert!(g.footprint_collides(&RobotState::new(1.0, 1.0, PI / 4.0), &v));
        // Pointing away: the cell is behind the rear edge.
        assert!(!g.footprint_collides(&RobotState::new(1.0, 1.0, -3.0 * PI / 4.0), &v));
    }

    fn wall_grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::empty(4.0, 2.0, 0.1).unwrap();
        for iy in 0..g.height() {
            g.set(20, iy, true);
        }
        g
    }

    /// Fine-step march; independent of the cell-stepping implementation.
    fn march(g: &OccupancyGrid, o: (f64, f64), a: f64, max: f64) -> f64 {
        let h = 1e-4;
        let mut t = 0.0;
        while t < max {
            let (x, y) = (o.0 + t * a.cos(), o.1 + t * a.sin());
            match g.world_to_cell(x, y) {
                Some((ix, iy)) if g.is_occupied(ix, iy) => return t,
                Some(_) => {}
                None => return max,
            }
            t += h;
        }
        max
    }

    #[test]
    fn raycast_examples() {
        let e = OccupancyGrid::empty(4.0, 4.0, 0.1).unwrap();
        assert_eq!(e.raycast((1.0, 1.0), 0.3, 2.5).unwrap(), 2.5);
        let g = wall_grid();
        let d = g.raycast((0.0, 0.0), 0.0, 10.0).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 0.05);
        assert_abs_diff_eq!(d, march(&g, (0.0, 0.0), 0.0, 10.0), epsilon = 2e-4);
        assert_eq!(g.raycast((2.05, 1.0), 1.0, 3.0).unwrap(), 0.0);
        assert!(g.raycast((-1.0, 0.0), 0.0, 1.0).is_err());
        assert!(g.raycast((1.0, 1.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn raycast_matches_fine_march() {
        let mut g = OccupancyGrid::empty(3.0, 3.0, 0.1).unwrap();
        g.fill_rect(1.5, 0.4, 1.9, 0.9, true);
        g.fill_rect(0.2, 2.0, 2.5, 2.2, true);
        g.fill_rect(0.3, 0.3, 0.5, 1.5, true);
        for k in 0..64 {
            let a = k as f64 * 2.0 * PI / 64.0 + 0.013;
            let d = g.raycast((1.23, 1.37), a, 4.0).unwrap();
            let m = march(&g, (1.23, 1.37), a, 4.0);
            assert!((d - m).abs() < 2e-4, "angle {a}: dda {d} march {m}");
        }
    }

    #[test]
    fn distance_field_basics() {
        let g = OccupancyGrid::empty(2.0, 2.0, 0.1).unwrap();
        let df = g.distance_field((1.05, 1.05), 0.0).unwrap();
        assert_eq!(df.get(10, 10), 0.0);
        assert_abs_diff_eq!(df.get(11, 10), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(df.get(11, 11), 0.1 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn distance_field_goal_occupied() {
        let mut g = OccupancyGrid::empty(2.0, 2.0, 0.1).unwrap();
        g.set(5, 5, true);
        assert_eq!(g.distance_field((0.75, 0.55), 0.25), Err(Error::GoalOccupied));
        assert!(g.distance_field((0.75, 0.55), 0.05).is_ok());
    }

    /// Plain Bellman-Ford relaxation over the 8-connected graph; the oracle for
    /// the Dijkstra implementation.
    fn relax_oracle(blocked: &[bool], w: usize, h: usize, goal: usize, res: f64) -> Vec<f64> {
        let mut d = vec![f64::INFINITY; w * h];
        d[goal] = 0.0;
        loop {
            let mut changed = false;
            for i in 0..w * h {
                if blocked[i] {
                    continue;
                }
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                for (ox, oy) in NEIGHBORS_8 {
                    let (nx, ny) = (x + ox, y + oy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let n = ny as usize * w + nx as usize;
                    let c = if ox != 0 && oy != 0 { res * 2f64.sqrt() } else { res };
                    if d[n] + c < d[i] - 1e-15 {
                        d[i] = d[n] + c;
                        changed = true;
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }

    #[test]
    fn distance_field_gap_detour_matches_oracle() {
        // 7x7 grid, full wall on column 3 except a gap at row 6.
        let mut g = OccupancyGrid::empty(0.7, 0.7, 0.1).unwrap();
        for iy in 0..6 {
            g.set(3, iy, true);
        }
        let df = g.distance_field((0.45, 0.15), 0.0).unwrap();
        let blocked = g.inflated(0.0);
        let oracle = relax_oracle(&blocked, 7, 7, 7 + 4, 0.1);
        for iy in 0..7 {
            for ix in 0..7 {
                let (a, b) = (df.get(ix, iy), oracle[iy * 7 + ix]);
                assert!(a == b || (a - b).abs() < 1e-12, "cell ({ix},{iy}): {a} vs {b}");
            }
        }
        // (2, 1) sits just across the wall from the goal; the only way round
        // is through the gap at row 6.
        assert!(df.get(2, 1) > 0.9);
        assert_abs_diff_eq!(df.get(2, 1), oracle[7 + 2], epsilon = 1e-12);
    }

    #[test]
    fn distance_field_unreachable_cells() {
        let mut g = OccupancyGrid::empty(1.0, 1.0, 0.1).unwrap();
        for i in 0..10 {
            g.set(5, i, true);
        }
        let df = g.distance_field((0.15, 0.15), 0.0).unwrap();
        assert_eq!(df.get(8, 8), UNREACHABLE);
        assert!(df.at(0.85, 0.85).unwrap().is_infinite());
        assert!(df.at(2.0, 0.5).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_grid(bits: &[bool]) -> OccupancyGrid {
            let mut g = OccupancyGrid::empty(1.2, 1.2, 0.1).unwrap();
            for (i, &b) in bits.iter().enumerate() {
                if b {
                    g.set(i % 12, i / 12, true);
                }
            }
            g
        }

        proptest! {
            #[test]
            fn distance_field_is_consistent(bits in proptest::collection::vec(proptest::bool::weighted(0.25), 144)) {
                let mut g = random_grid(&bits);
                g.set(6, 6, false);
                let df = g.distance_field((0.65, 0.65), 0.0).unwrap();
                for iy in 0..12usize {
                    for ix in 0..12usize {
                        let d = df.get(ix, iy);
                        if !d.is_finite() || d == 0.0 { continue; }
                        let ok = NEIGHBORS_8.iter().any(|&(ox, oy)| {
                            let (nx, ny) = (ix as isize + ox, iy as isize + oy);
                            if nx < 0 || ny < 0 || nx >= 12 || ny >= 12 { return false; }
                            let c = if ox != 0 && oy != 0 { 0.1 * 2f64.sqrt() } else { 0.1 };
                            (df.get(nx as usize, ny as usize) + c - d).abs() < 1e-9
                        });
                        prop_assert!(ok);
                    }
                }
            }

            #[test]
            fn footprint_monotone_in_size(
                bits in proptest::collection::vec(proptest::bool::weighted(0.1), 144),
                x in 0.3..0.9f64, y in 0.3..0.9f64, th in -PI..PI, grow in 0.0..0.2f64,
            ) {
                let g = random_grid(&bits);
                let small = VehicleParams { footprint_length: 0.3, footprint_width: 0.2, rear_axle_offset: 0.05, ..VehicleParams::default() };
                let big = VehicleParams { footprint_length: 0.3 + grow, footprint_width: 0.2 + grow, rear_axle_offset: 0.05 + grow / 2.0, ..small };
                let s = RobotState::new(x, y, th);
                if g.footprint_collides(&s, &small) {
                    prop_assert!(g.footprint_collides(&s, &big));
                }
            }

            #[test]
            fn raycast_symmetric_on_free_segments(
                bits in proptest::collection::vec(proptest::bool::weighted(0.15), 144),
                ax in 0.01..1.19f64, ay in 0.01..1.19f64, bx in 0.01..1.19f64, by in 0.01..1.19f64,
            ) {
                let g = random_grid(&bits);
                let len = (bx - ax).hypot(by - ay);
                prop_assume!(len > 1e-3);
                let ang = (by - ay).atan2(bx - ax);
                let ab = g.raycast((ax, ay), ang, len).unwrap();
                let ba = g.raycast((bx, by), ang + PI, len).unwrap();
                // Segment free iff neither endpoint cell nor any crossed cell is occupied.
                prop_assert_eq!(ab >= len, ba >= len);
            }

            #[test]
            fn raycast_in_range(x in 0.0..1.2f64, y in 0.0..1.2f64, a in -PI..PI, r in 0.01..3.0f64,
                bits in proptest::collection::vec(proptest::bool::weighted(0.2), 144)) {
                let g = random_grid(&bits);
                let d = g.raycast((x, y), a, r).unwrap();
                prop_assert!(d >= 0.0 && d <= r);
            }
        }
    }
}
