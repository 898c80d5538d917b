//! Map families and the one-way versus two-way comparison harness.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{RobotState, VehicleParams};
use crate::par::Exec;
use crate::planner::{path_cost, plan_oneway, plan_twoway, PlanResult, PlannerParams};
use crate::world::OccupancyGrid;

const MAX_ATTEMPTS: usize = 100;
const RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapFamily {
    DeadEndCorridor,
    RandomClutter,
}

impl MapFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeadEndCorridor => "deadend",
            Self::RandomClutter => "clutter",
        }
    }
}

impl std::str::FromStr for MapFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deadend" => Ok(Self::DeadEndCorridor),
            "clutter" => Ok(Self::RandomClutter),
            other => Err(Error::InvalidInput(format!("unknown map family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFamilySpec {
    pub family: MapFamily,
    /// Side length of the square map in meters.
    pub size: f64,
    pub obstacle_density: f64,
    pub corridor_depth_ratio: f64,
    pub seed: u64,
}

impl MapFamilySpec {
    pub fn deadend(seed: u64) -> Self {
        Self {
            family: MapFamily::DeadEndCorridor,
            size: 20.0,
            obstacle_density: 0.0,
            corridor_depth_ratio: 5.0,
            seed,
        }
    }

    pub fn clutter(seed: u64) -> Self {
        Self {
            family: MapFamily::RandomClutter,
            size: 10.0,
            obstacle_density: 0.1,
            corridor_depth_ratio: 0.0,
            seed,
        }
    }

    pub fn map_id(&self) -> String {
        format!("{}-{}", self.family.name(), self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.size >= 5.0) || !self.size.is_finite() {
            return Err(Error::InvalidInput("map size must be at least 5 m".into()));
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return Err(Error::InvalidInput("obstacle_density must be in [0, 1)".into()));
        }
        if self.family == MapFamily::DeadEndCorridor && !(self.corridor_depth_ratio >= 1.0) {
            return Err(Error::InvalidInput("corridor_depth_ratio must be at least 1".into()));
        }
        Ok(())
    }
}

/// Builds a map with a start and goal pose, deterministic in `spec.seed`.
pub fn generate_map(spec: &MapFamilySpec, vehicle: &VehicleParams) -> Result<(OccupancyGrid, RobotState, RobotState)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_ATTEMPTS {
        let candidate = match spec.family {
            MapFamily::DeadEndCorridor => deadend(spec, &mut rng)?,
            MapFamily::RandomClutter => clutter(spec, &mut rng)?,
        };
        if accept(&candidate, vehicle) {
            return Ok(candidate);
        }
    }
    Err(Error::GenerationFailed(MAX_ATTEMPTS))
}

fn accept((grid, start, goal): &(OccupancyGrid, RobotState, RobotState), vehicle: &VehicleParams) -> bool {
    if grid.footprint_collides(start, vehicle) || grid.footprint_collides(goal, vehicle) {
        return false;
    }
    // Connectivity with the vehicle's full width, so an accepted pair is not
    // separated by a gap only a point could pass.
    match grid.distance_field((goal.x, goal.y), vehicle.footprint_width / 2.0) {
        Ok(df) => df.at(start.x, start.y).is_some_and(f64::is_finite),
        Err(_) => false,
    }
}

/// A long dead-end corridor leading away from a small start bay, with the
/// goal parked in a narrow side pocket near the corridor's walled far end.
/// Everything outside the bay, corridor and pocket is wall.
fn deadend(spec: &MapFamilySpec, rng: &mut ChaCha8Rng) -> Result<(OccupancyGrid, RobotState, RobotState)> {
    let size = spec.size;
    let mut g = OccupancyGrid::empty(size, size, RESOLUTION)?;
    g.fill_rect(0.0, 0.0, size, size, true);
    let width = rng.random_range(1.6..2.0);
    let depth = (spec.corridor_depth_ratio * width).min(size - 3.0);
    let (bay_x, mouth) = (0.3, 2.0);
    let cy = size / 2.0 + rng.random_range(-0.2..0.2) * size;
    g.fill_rect(bay_x, cy - 3.0, mouth, cy + 3.0, false);
    g.fill_rect(mouth - 0.01, cy - width / 2.0, mouth + depth, cy + width / 2.0, false);
    let pocket_w = rng.random_range(0.6..0.7);
    let pocket_d = rng.random_range(1.2..1.8);
    let px = mouth + depth - rng.random_range(0.8..2.5);
    let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let (y0, y1) = (cy, cy + side * (width / 2.0 + pocket_d));
    g.fill_rect(px - pocket_w / 2.0, y0.min(y1), px + pocket_w / 2.0, y0.max(y1), false);
    let start = RobotState::new(1.0, cy + rng.random_range(-0.4..0.4), rng.random_range(-0.3..0.3));
    let goal = RobotState::new(px, y1 - side * 0.5, side * std::f64::consts::FRAC_PI_2);
    Ok((g, start, goal))
}

fn clutter(spec: &MapFamilySpec, rng: &mut ChaCha8Rng) -> Result<(OccupancyGrid, RobotState, RobotState)> {
    let size = spec.size;
    let mut g = OccupancyGrid::empty(size, size, RESOLUTION)?;
    let margin = 1.0;
    let start = RobotState::new(margin, rng.random_range(margin..size - margin), rng.random_range(-0.5..0.5));
    let goal = RobotState::new(
        size - margin,
        rng.random_range(margin..size - margin),
        rng.random_range(-0.5..0.5),
    );
    let target = (spec.obstacle_density * (g.width() * g.height()) as f64).round() as usize;
    let keep_clear = |x: f64, y: f64| {
        [start, goal]
            .iter()
            .any(|p| (p.x - x).abs() < 0.8 && (p.y - y).abs() < 0.8)
    };
    let mut tries = 0;
    while g.occupied_count() < target && tries < 10_000 {
        tries += 1;
        let (w, h) = (rng.random_range(0.2..1.2), rng.random_range(0.2..1.2));
        let (x, y) = (rng.random_range(0.0..size - w), rng.random_range(0.0..size - h));
        let hits_pose = [(x, y), (x + w, y), (x, y + h), (x + w, y + h), (x + w / 2.0, y + h / 2.0)]
            .iter()
            .any(|&(px, py)| keep_clear(px, py))
            || [start, goal]
                .iter()
                .any(|p| p.x > x - 0.8 && p.x < x + w + 0.8 && p.y > y - 0.8 && p.y < y + h + 0.8);
        if !hits_pose {
            g.fill_rect(x, y, x + w, y + h, true);
        }
    }
    Ok((g, start, goal))
}

/// A generated benchmark instance.
pub type MapInstance = (OccupancyGrid, RobotState, RobotState);

/// Generates every map of `specs`, in order.
pub fn generate_maps(specs: &[MapFamilySpec], vehicle: &VehicleParams, exec: Exec) -> Vec<Result<MapInstance>> {
    exec.map(specs.len(), |i| generate_map(&specs[i], vehicle))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlannerKind {
    OneWay,
    TwoWay,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::OneWay => "oneway",
            Self::TwoWay => "twoway",
        }
    }

    pub fn plan(
        self,
        grid: &OccupancyGrid,
        start: RobotState,
        goal: RobotState,
        vehicle: &VehicleParams,
        params: &PlannerParams,
    ) -> Result<PlanResult> {
        match self {
            Self::OneWay => plan_oneway(grid, start, goal, vehicle, params),
            Self::TwoWay => plan_twoway(grid, start, goal, vehicle, params),
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oneway" => Ok(Self::OneWay),
            "twoway" => Ok(Self::TwoWay),
            other => Err(Error::InvalidInput(format!("unknown planner mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub map_id: String,
    pub planner: PlannerKind,
    pub expansions: usize,
    pub elapsed_ms: f64,
    /// Cost of the best path; present iff `succeeded`.
    pub path_cost: Option<f64>,
    pub succeeded: bool,
}

pub const CSV_HEADER: &str = "map_id,planner,expansions,elapsed_ms,path_cost,succeeded";

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:.3},{},{}",
            self.map_id,
            self.planner.name(),
            self.expansions,
            self.elapsed_ms,
            self.path_cost.map(|c| format!("{c:.6}")).unwrap_or_default(),
            self.succeeded
        )
    }
}

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv_line());
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: MapFamily,
    pub maps: usize,
    pub oneway_succeeded: usize,
    pub twoway_succeeded: usize,
    /// Median over maps of one-way expansions over two-way expansions.
    pub median_expansion_ratio: f64,
    pub median_time_ratio: f64,
    /// Maps where both planners succeeded and two-way expanded more.
    pub twoway_worse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<FamilySummary>,
}

impl BenchReport {
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for f in &self.summary {
            let _ = writeln!(
                s,
                "{}: {} maps, one-way ok {}, two-way ok {}, median expansion ratio {:.2}, median time ratio {:.2}, two-way worse on {}",
                f.family.name(),
                f.maps,
                f.oneway_succeeded,
                f.twoway_succeeded,
                f.median_expansion_ratio,
                f.median_time_ratio,
                f.twoway_worse
            );
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Ratio of two counts with start == goal style zeros mapped to 1.
fn ratio(a: f64, b: f64) -> f64 {
    if a <= 0.0 && b <= 0.0 {
        1.0
    } else {
        a / b.max(f64::MIN_POSITIVE)
    }
}

fn run_row(
    map_id: &str,
    kind: PlannerKind,
    instance: &Result<MapInstance>,
    vehicle: &VehicleParams,
    params: &PlannerParams,
    repetitions: usize,
) -> BenchRow {
    let mut times = Vec::with_capacity(repetitions);
    let mut outcome = (0, None);
    for _ in 0..repetitions {
        let (expansions, cost) = match instance {
            Ok((grid, start, goal)) => {
                let t0 = Instant::now();
                let res = kind.plan(grid, *start, *goal, vehicle, params);
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                match res {
                    Ok(r) => (r.expansions, r.best.as_ref().map(|p| path_cost(p, params))),
                    Err(Error::NoPath { expansions, .. }) => (expansions, None),
                    Err(_) => (0, None),
                }
            }
            Err(_) => {
                times.push(0.0);
                (0, None)
            }
        };
        outcome = (expansions, cost);
    }
    BenchRow {
        map_id: map_id.to_string(),
        planner: kind,
        expansions: outcome.0,
        elapsed_ms: median(times),
        path_cost: outcome.1,
        succeeded: outcome.1.is_some(),
    }
}

/// Runs both planners on every map with identical inputs. Rows come out in
/// map order, one-way first, and are timed one at a time on the calling
/// thread. Map generation may use `exec`.
pub fn bench_compare(
    maps: &[MapFamilySpec],
    vehicle: &VehicleParams,
    params: &PlannerParams,
    repetitions: usize,
    exec: Exec,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be at least 1".into()));
    }
    let instances = generate_maps(maps, vehicle, exec);
    let mut rows = Vec::with_capacity(2 * maps.len());
    for (spec, inst) in maps.iter().zip(&instances) {
        let id = spec.map_id();
        for kind in [PlannerKind::OneWay, PlannerKind::TwoWay] {
            rows.push(run_row(&id, kind, inst, vehicle, params, repetitions));
        }
    }
    let mut summary = Vec::new();
    for family in [MapFamily::DeadEndCorridor, MapFamily::RandomClutter] {
        let pairs: Vec<(&BenchRow, &BenchRow)> = maps
            .iter()
            .zip(rows.chunks_exact(2))
            .filter(|(s, _)| s.family == family)
            .map(|(_, r)| (&r[0], &r[1]))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        summary.push(FamilySummary {
            family,
            maps: pairs.len(),
            oneway_succeeded: pairs.iter().filter(|(o, _)| o.succeeded).count(),
            twoway_succeeded: pairs.iter().filter(|(_, t)| t.succeeded).count(),
            median_expansion_ratio: median(
                pairs.iter().map(|(o, t)| ratio(o.expansions as f64, t.expansions as f64)).collect(),
            ),
            median_time_ratio: median(pairs.iter().map(|(o, t)| ratio(o.elapsed_ms, t.elapsed_ms)).collect()),
            twoway_worse: pairs
                .iter()
                .filter(|(o, t)| o.succeeded && t.succeeded && t.expansions > o.expansions)
                .count(),
        });
    }
    Ok(BenchReport { rows, summary })
}
