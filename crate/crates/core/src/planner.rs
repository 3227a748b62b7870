//! Demonstration-control planning: admissibility grid, all-sources
//! Dijkstra path tables, path simplification and Pure Pursuit tracking.
//!
//! Paths are precomputed once per scene geometry: for every target
//! candidate, a Dijkstra pass rooted at the target's connected cell
//! yields a shortest path from every admissible cell. Stored paths are
//! simplified by dropping interior points on straight or 45-degree
//! diagonal runs. At episode time the expert looks up the path from the
//! grid point nearest the robot and tracks it with Pure Pursuit.

use crate::scene::{admissible, Pose, RobotFootprint, Scene, Twist, VelocityLimits};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path as FsPath;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("no admissible grid cell in the scene")]
    EmptyGrid,
    #[error("target {index} at ({x:.2}, {y:.2}) has no admissible cell within {radius} m")]
    NoTargetCell {
        index: usize,
        x: f64,
        y: f64,
        radius: f64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlannerConfig {
    /// Grid cell size in meters.
    pub resolution: f64,
    /// Pure Pursuit lookahead distance.
    pub lookahead: f64,
    /// Tracking speed.
    pub cruise_speed: f64,
    /// Distance at which the final waypoint counts as reached.
    pub arrival_tolerance: f64,
    /// Targets connect to the nearest admissible cell within this radius.
    pub connection_radius: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            resolution: 0.25,
            // Tracking with larger lookaheads cuts corners at path bends,
            // which hug the obstacles that caused them; 0.35 keeps the
            // pursuit chord inside the grid clearance.
            lookahead: 0.35,
            cruise_speed: 0.5,
            arrival_tolerance: 0.15,
            connection_radius: 1.5,
        }
    }
}

/// Pure Pursuit parameters (a view into [`PlannerConfig`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurePursuitConfig {
    pub lookahead: f64,
    pub cruise_speed: f64,
    pub arrival_tolerance: f64,
}

impl From<&PlannerConfig> for PurePursuitConfig {
    fn from(cfg: &PlannerConfig) -> Self {
        PurePursuitConfig {
            lookahead: cfg.lookahead,
            cruise_speed: cfg.cruise_speed,
            arrival_tolerance: cfg.arrival_tolerance,
        }
    }
}

/// Discretized admissible-position set: a boolean mask over cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub resolution: f64,
    /// World position of the center of cell (0, 0); rows advance along
    /// +y, columns along +x.
    pub origin: [f64; 2],
    pub rows: usize,
    pub cols: usize,
    cells: Vec<bool>,
}

impl GridMap {
    pub fn from_mask(
        resolution: f64,
        origin: [f64; 2],
        rows: usize,
        cols: usize,
        cells: Vec<bool>,
    ) -> Self {
        assert!(resolution > 0.0);
        assert_eq!(cells.len(), rows * cols);
        GridMap {
            resolution,
            origin,
            rows,
            cols,
            cells,
        }
    }

    #[inline]
    pub fn index(&self, cell: (usize, usize)) -> usize {
        cell.0 * self.cols + cell.1
    }

    #[inline]
    pub fn is_admissible(&self, cell: (usize, usize)) -> bool {
        cell.0 < self.rows && cell.1 < self.cols && self.cells[self.index(cell)]
    }

    pub fn cell_center(&self, cell: (usize, usize)) -> [f64; 2] {
        [
            self.origin[0] + cell.1 as f64 * self.resolution,
            self.origin[1] + cell.0 as f64 * self.resolution,
        ]
    }

    pub fn admissible_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn admissible_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows)
            .flat_map(move |r| (0..self.cols).map(move |c| (r, c)))
            .filter(move |cell| self.is_admissible(*cell))
    }
}

/// Builds the admissibility grid for a scene: a cell is admissible iff
/// the pose at its center is admissible for the given footprint.
pub fn build_grid(
    scene: &Scene,
    footprint: &RobotFootprint,
    resolution: f64,
) -> Result<GridMap, PlannerError> {
    assert!(resolution > 0.0, "resolution must be positive");
    let b = &scene.bounds;
    let cols = ((b.width() / resolution).floor() as usize).max(1);
    let rows = ((b.height() / resolution).floor() as usize).max(1);
    let origin = [
        b.min[0] + resolution / 2.0,
        b.min[1] + resolution / 2.0,
    ];
    let mut cells = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let center = [
                origin[0] + c as f64 * resolution,
                origin[1] + r as f64 * resolution,
            ];
            cells[r * cols + c] =
                admissible(&Pose::new(center[0], center[1], 0.0), footprint, scene);
        }
    }
    if !cells.iter().any(|c| *c) {
        return Err(PlannerError::EmptyGrid);
    }
    Ok(GridMap::from_mask(resolution, origin, rows, cols, cells))
}

/// Admissible cell minimizing Euclidean distance to the pose; ties break
/// toward the lexicographically smallest (row, col).
pub fn nearest_grid_point(pose: &Pose, grid: &GridMap) -> (usize, usize) {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for cell in grid.admissible_cells() {
        let center = grid.cell_center(cell);
        let d = pose.distance_to(center);
        if d < best_d {
            best_d = d;
            best = Some(cell);
        }
    }
    best.expect("nearest_grid_point requires a nonempty grid")
}

const ORTHO_COST: f64 = 1.0;
const DIAG_COST: f64 = std::f64::consts::SQRT_2;

/// 8-connected neighbors with costs. Diagonal steps additionally require
/// both adjacent orthogonal cells to be admissible, so tracked paths
/// never cut corners around blocked cells.
fn neighbors(grid: &GridMap, cell: (usize, usize)) -> Vec<((usize, usize), f64)> {
    let (r, c) = (cell.0 as isize, cell.1 as isize);
    let mut out = Vec::with_capacity(8);
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 {
                continue;
            }
            let n = (nr as usize, nc as usize);
            if !grid.is_admissible(n) {
                continue;
            }
            if dr != 0 && dc != 0 {
                let side_a = ((r + dr) as usize, c as usize);
                let side_b = (r as usize, (c + dc) as usize);
                if !grid.is_admissible(side_a) || !grid.is_admissible(side_b) {
                    continue;
                }
                out.push((n, DIAG_COST));
            } else {
                out.push((n, ORTHO_COST));
            }
        }
    }
    out
}

/// Single-source Dijkstra over the admissible grid. Returns per-cell
/// cost and predecessor (toward the source).
pub fn dijkstra_from(
    grid: &GridMap,
    source: (usize, usize),
) -> (Vec<Option<f64>>, Vec<Option<(usize, usize)>>) {
    let n = grid.rows * grid.cols;
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut heap: BinaryHeap<(Reverse<u64>, (usize, usize))> = BinaryHeap::new();
    // Costs are sums of 1 and sqrt(2); order them via their bit pattern
    // (all values are non-negative finite, so the ordering matches).
    let key = |d: f64| Reverse(d.to_bits());
    dist[grid.index(source)] = Some(0.0);
    heap.push((key(0.0), source));
    while let Some((Reverse(bits), cell)) = heap.pop() {
        let d = f64::from_bits(bits);
        match dist[grid.index(cell)] {
            Some(best) if best < d => continue,
            _ => {}
        }
        for (next, step) in neighbors(grid, cell) {
            let nd = d + step;
            let slot = &mut dist[grid.index(next)];
            if slot.map_or(true, |old| nd < old) {
                *slot = Some(nd);
                parent[grid.index(next)] = Some(cell);
                heap.push((key(nd), next));
            }
        }
    }
    (dist, parent)
}

/// Precomputed shortest paths from every admissible cell to every target.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    pub resolution: f64,
    /// Ground positions of the targets the table was built for.
    pub targets: Vec<[f64; 2]>,
    /// Connected grid cell per target.
    pub target_cells: Vec<(usize, usize)>,
    /// paths[target][cell_index]: simplified waypoints from the cell
    /// center to the target cell center; `None` when unreachable.
    paths: Vec<Vec<Option<Vec<[f64; 2]>>>>,
    /// Grid path cost per (target, cell); `None` when unreachable.
    costs: Vec<Vec<Option<f64>>>,
}

impl PathTable {
    pub fn path(&self, cell: (usize, usize), target: usize, grid: &GridMap) -> Option<&[[f64; 2]]> {
        self.paths[target][grid.index(cell)].as_deref()
    }

    pub fn cost(&self, cell: (usize, usize), target: usize, grid: &GridMap) -> Option<f64> {
        self.costs[target][grid.index(cell)]
    }

    /// Path for the grid point nearest to the pose.
    pub fn path_from_pose<'a>(
        &'a self,
        pose: &Pose,
        target: usize,
        grid: &GridMap,
    ) -> Option<&'a [[f64; 2]]> {
        self.path(nearest_grid_point(pose, grid), target, grid)
    }

    pub fn stored_path_count(&self) -> usize {
        self.paths
            .iter()
            .map(|per_cell| per_cell.iter().filter(|p| p.is_some()).count())
            .sum()
    }
}

/// Connects each target to its nearest admissible cell within
/// `connection_radius`, then runs one Dijkstra pass per target and
/// stores a simplified path from every reachable cell.
pub fn dijkstra_all(
    grid: &GridMap,
    targets: &[[f64; 2]],
    connection_radius: f64,
) -> Result<PathTable, PlannerError> {
    if grid.admissible_count() == 0 {
        return Err(PlannerError::EmptyGrid);
    }
    let mut target_cells = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let cell = nearest_grid_point(&Pose::new(t[0], t[1], 0.0), grid);
        let center = grid.cell_center(cell);
        let d = (center[0] - t[0]).hypot(center[1] - t[1]);
        if d > connection_radius {
            return Err(PlannerError::NoTargetCell {
                index: i,
                x: t[0],
                y: t[1],
                radius: connection_radius,
            });
        }
        target_cells.push(cell);
    }
    let n = grid.rows * grid.cols;
    let mut paths = Vec::with_capacity(targets.len());
    let mut costs = Vec::with_capacity(targets.len());
    for &tc in &target_cells {
        let (dist, parent) = dijkstra_from(grid, tc);
        let mut per_cell: Vec<Option<Vec<[f64; 2]>>> = vec![None; n];
        for cell in grid.admissible_cells() {
            let idx = grid.index(cell);
            if dist[idx].is_none() {
                continue;
            }
            let mut waypoints = Vec::new();
            let mut cur = cell;
            loop {
                waypoints.push(grid.cell_center(cur));
                if cur == tc {
                    break;
                }
                cur = parent[grid.index(cur)].expect("finite cost implies a parent chain");
            }
            per_cell[idx] = Some(simplify_path(&waypoints));
        }
        paths.push(per_cell);
        costs.push(dist);
    }
    Ok(PathTable {
        resolution: grid.resolution,
        targets: targets.to_vec(),
        target_cells,
        paths,
        costs,
    })
}

/// Direction class of a step: axis-aligned or exact 45-degree diagonal,
/// reduced to its sign pair. Anything else is unclassified and never
/// merged.
fn dir_class(a: [f64; 2], b: [f64; 2]) -> Option<(i8, i8)> {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let eps = 1e-9;
    let sx = if dx > eps {
        1
    } else if dx < -eps {
        -1
    } else {
        0
    };
    let sy = if dy > eps {
        1
    } else if dy < -eps {
        -1
    } else {
        0
    };
    match (sx, sy) {
        (0, 0) => None,
        (0, _) | (_, 0) => Some((sx, sy)),
        _ => {
            if (dx.abs() - dy.abs()).abs() <= eps * dx.abs().max(dy.abs()).max(1.0) {
                Some((sx, sy))
            } else {
                None
            }
        }
    }
}

/// Removes interior waypoints that lie on a straight or 45-degree
/// diagonal run between their neighbors. Endpoints are preserved and
/// the output is a subsequence of the input.
pub fn simplify_path(waypoints: &[[f64; 2]]) -> Vec<[f64; 2]> {
    assert!(!waypoints.is_empty(), "simplify_path requires >= 1 waypoint");
    if waypoints.len() <= 2 {
        return waypoints.to_vec();
    }
    let mut out = vec![waypoints[0]];
    for i in 1..waypoints.len() - 1 {
        let incoming = dir_class(*out.last().unwrap(), waypoints[i]);
        let outgoing = dir_class(waypoints[i], waypoints[i + 1]);
        match (incoming, outgoing) {
            (Some(a), Some(b)) if a == b => {} // drop: continues the run
            _ => out.push(waypoints[i]),
        }
    }
    out.push(waypoints[waypoints.len() - 1]);
    out
}

/// The point Pure Pursuit steers toward: walking the polyline forward
/// from the robot's closest path point, the first point at distance
/// >= `lookahead` from the robot (the lookahead-circle crossing when the
/// walk starts inside it); the final waypoint when the path ends first.
///
/// Working on the polyline rather than the waypoint list matters after
/// simplification: waypoints are corner points only, and jumping to the
/// next waypoint would cut entire bends.
pub fn lookahead_point(pose: &Pose, path: &[[f64; 2]], lookahead: f64) -> [f64; 2] {
    let last = *path.last().expect("path must be nonempty");
    if path.len() == 1 {
        return last;
    }
    let p = [pose.x, pose.y];
    // Closest point on the polyline: (segment index, parameter).
    let mut best = (0usize, 0.0f64);
    let mut best_d = f64::INFINITY;
    for i in 0..path.len() - 1 {
        let a = path[i];
        let b = path[i + 1];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
        let d = (q[0] - p[0]).hypot(q[1] - p[1]);
        if d < best_d {
            best_d = d;
            best = (i, t);
        }
    }
    let (seg0, t0) = best;
    for i in seg0..path.len() - 1 {
        let a = path[i];
        let b = path[i + 1];
        let t_start = if i == seg0 { t0 } else { 0.0 };
        let ab = [b[0] - a[0], b[1] - a[1]];
        let start = [a[0] + t_start * ab[0], a[1] + t_start * ab[1]];
        if (start[0] - p[0]).hypot(start[1] - p[1]) >= lookahead {
            return start;
        }
        // Start is inside the lookahead circle: find the exit crossing.
        let ap = [a[0] - p[0], a[1] - p[1]];
        let qa = ab[0] * ab[0] + ab[1] * ab[1];
        if qa == 0.0 {
            continue;
        }
        let qb = 2.0 * (ap[0] * ab[0] + ap[1] * ab[1]);
        let qc = ap[0] * ap[0] + ap[1] * ap[1] - lookahead * lookahead;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let t_exit = (-qb + disc.sqrt()) / (2.0 * qa);
        if t_exit >= t_start - 1e-12 && t_exit <= 1.0 {
            return [a[0] + t_exit * ab[0], a[1] + t_exit * ab[1]];
        }
    }
    last
}

/// One Pure Pursuit control step toward a path.
///
/// Picks the first waypoint at least `lookahead` away, starting from the
/// waypoint closest to the robot (falling back to the final waypoint),
/// transforms it into the robot frame and commands curvature
/// `kappa = 2 * y_l / L^2`. Returns a zero twist on arrival.
pub fn pure_pursuit_step(
    pose: &Pose,
    path: &[[f64; 2]],
    cfg: &PurePursuitConfig,
    limits: &VelocityLimits,
) -> Twist {
    let Some(&last) = path.last() else {
        return Twist::ZERO;
    };
    if pose.distance_to(last) <= cfg.arrival_tolerance {
        return Twist::ZERO;
    }
    let target = lookahead_point(pose, path, cfg.lookahead);
    let dx = target[0] - pose.x;
    let dy = target[1] - pose.y;
    let dist_sq = dx * dx + dy * dy;
    if dist_sq < 1e-18 {
        return Twist::ZERO;
    }
    let (sin_t, cos_t) = pose.theta.sin_cos();
    let y_l = -sin_t * dx + cos_t * dy;
    let curvature = 2.0 * y_l / dist_sq;
    Twist::new(cfg.cruise_speed, cfg.cruise_speed * curvature).clamped(limits)
}

// ---------------------------------------------------------------------
// Binary cache: grid + path table keyed by scene geometry hash and the
// planner parameters, so repeated runs skip recomputation.

const CACHE_MAGIC: &[u8; 4] = b"GNPT";
const CACHE_VERSION: u32 = 1;

/// Cache key: scene geometry plus every parameter that shapes the table.
pub fn cache_key(scene: &Scene, footprint: &RobotFootprint, cfg: &PlannerConfig) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(scene.content_hash());
    h.update(footprint.radius.to_le_bytes());
    h.update(cfg.resolution.to_le_bytes());
    h.update(cfg.connection_radius.to_le_bytes());
    let digest = h.finalize();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

fn w_u64<W: Write>(w: &mut W, x: u64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn w_f64<W: Write>(w: &mut W, x: f64) -> std::io::Result<()> {
    w.write_all(&x.to_le_bytes())
}

fn r_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn r_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn save_cache(
    path: &FsPath,
    key: &[u8; 32],
    grid: &GridMap,
    table: &PathTable,
) -> Result<(), PlannerError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(key)?;
    w_f64(&mut w, grid.resolution)?;
    w_f64(&mut w, grid.origin[0])?;
    w_f64(&mut w, grid.origin[1])?;
    w_u64(&mut w, grid.rows as u64)?;
    w_u64(&mut w, grid.cols as u64)?;
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            w.write_all(&[u8::from(grid.is_admissible((r, c)))])?;
        }
    }
    w_u64(&mut w, table.targets.len() as u64)?;
    for (t, pos) in table.targets.iter().enumerate() {
        w_f64(&mut w, pos[0])?;
        w_f64(&mut w, pos[1])?;
        w_u64(&mut w, table.target_cells[t].0 as u64)?;
        w_u64(&mut w, table.target_cells[t].1 as u64)?;
        for idx in 0..grid.rows * grid.cols {
            match (&table.paths[t][idx], table.costs[t][idx]) {
                (Some(wp), Some(cost)) => {
                    w.write_all(&[1])?;
                    w_f64(&mut w, cost)?;
                    w_u64(&mut w, wp.len() as u64)?;
                    for p in wp {
                        w_f64(&mut w, p[0])?;
                        w_f64(&mut w, p[1])?;
                    }
                }
                _ => w.write_all(&[0])?,
            }
        }
    }
    Ok(())
}

/// Loads a cache file; returns `Ok(None)` when the file is missing or
/// its key does not match (stale cache).
pub fn load_cache(
    path: &FsPath,
    key: &[u8; 32],
) -> Result<Option<(GridMap, PathTable)>, PlannerError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Ok(None);
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if u32::from_le_bytes(ver) != CACHE_VERSION {
        return Ok(None);
    }
    let mut stored_key = [0u8; 32];
    r.read_exact(&mut stored_key)?;
    if &stored_key != key {
        return Ok(None);
    }
    let resolution = r_f64(&mut r)?;
    let origin = [r_f64(&mut r)?, r_f64(&mut r)?];
    let rows = r_u64(&mut r)? as usize;
    let cols = r_u64(&mut r)? as usize;
    let mut cells = vec![false; rows * cols];
    for cell in cells.iter_mut() {
        let mut b = [0u8; 1];
        r.read_exact(&mut b)?;
        *cell = b[0] != 0;
    }
    let grid = GridMap::from_mask(resolution, origin, rows, cols, cells);
    let n_targets = r_u64(&mut r)? as usize;
    let mut targets = Vec::with_capacity(n_targets);
    let mut target_cells = Vec::with_capacity(n_targets);
    let mut paths = Vec::with_capacity(n_targets);
    let mut costs = Vec::with_capacity(n_targets);
    for _ in 0..n_targets {
        targets.push([r_f64(&mut r)?, r_f64(&mut r)?]);
        target_cells.push((r_u64(&mut r)? as usize, r_u64(&mut r)? as usize));
        let mut per_cell_paths: Vec<Option<Vec<[f64; 2]>>> = Vec::with_capacity(rows * cols);
        let mut per_cell_costs: Vec<Option<f64>> = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let mut flag = [0u8; 1];
            r.read_exact(&mut flag)?;
            if flag[0] == 1 {
                let cost = r_f64(&mut r)?;
                let len = r_u64(&mut r)? as usize;
                let mut wp = Vec::with_capacity(len);
                for _ in 0..len {
                    wp.push([r_f64(&mut r)?, r_f64(&mut r)?]);
                }
                per_cell_paths.push(Some(wp));
                per_cell_costs.push(Some(cost));
            } else {
                per_cell_paths.push(None);
                per_cell_costs.push(None);
            }
        }
        paths.push(per_cell_paths);
        costs.push(per_cell_costs);
    }
    let table = PathTable {
        resolution,
        targets,
        target_cells,
        paths,
        costs,
    };
    Ok(Some((grid, table)))
}
