use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::kinematics::{
    angle_diff, max_curvature, normalize_angle, step_inverse, step_unchecked, Control, RobotState, VehicleParams,
};
use crate::world::{DistanceField, OccupancyGrid};

use super::curves::{dubins_shortest, reeds_shepp_shortest, Curve, Turn};
use super::path::{path_cost, score_path, Path};
use super::{Direction, PlanResult, PlannerParams, TerminatedBy};

/// Heuristic value used for cells the distance field cannot reach.
const UNREACHABLE_PENALTY: f64 = 1.0e6;
/// Longest stretch of the opposite tree a two-way join will bridge with a
/// curve before giving up on that meeting.
const MAX_BRIDGE: f64 = 3.0;

/// A search-tree node. `control` held for `duration` (in `n_sub` Euler
/// steps) drives from the parent's state to this one for forward nodes, and
/// from this state to the parent's for backward nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub state: RobotState,
    pub g: f64,
    pub f: f64,
    pub parent: Option<usize>,
    pub control: Control,
    pub duration: f64,
    pub n_sub: usize,
    pub direction: Direction,
}

impl PlanNode {
    pub fn root(state: RobotState, direction: Direction) -> Self {
        Self {
            state,
            g: 0.0,
            f: 0.0,
            parent: None,
            control: Control::default(),
            duration: 0.0,
            n_sub: 0,
            direction,
        }
    }
}

/// Resolved search settings shared by every routine of one plan call.
struct Ctx<'a> {
    grid: &'a OccupancyGrid,
    vehicle: &'a VehicleParams,
    params: &'a PlannerParams,
    arc: f64,
    n_sub: usize,
    fine_step: f64,
    steering: Vec<f64>,
    xy_tol: f64,
    th_tol: f64,
    radius: f64,
}

impl<'a> Ctx<'a> {
    fn new(grid: &'a OccupancyGrid, vehicle: &'a VehicleParams, params: &'a PlannerParams) -> Result<Self> {
        params.validate()?;
        vehicle.validate()?;
        let res = grid.resolution();
        let arc = params.arc_length_for(res);
        let n = params.steering_samples;
        let steering = (0..n)
            .map(|i| -vehicle.delta_max + 2.0 * vehicle.delta_max * i as f64 / (n - 1) as f64)
            .collect();
        Ok(Self {
            grid,
            vehicle,
            params,
            arc,
            n_sub: (arc / (res / 2.0)).ceil().max(1.0) as usize,
            fine_step: res / 10.0,
            steering,
            xy_tol: params.xy_tol_for(res),
            th_tol: params.theta_tol(),
            radius: 1.0 / max_curvature(vehicle),
        })
    }

    fn within_goal(&self, s: &RobotState, goal: &RobotState) -> bool {
        s.distance_to(goal) <= self.xy_tol && angle_diff(s.theta, goal.theta) <= self.th_tol
    }

    fn bins(&self) -> usize {
        self.params.theta_bins
    }

    fn heading_bin(&self, theta: f64) -> usize {
        let b = self.bins();
        let w = 2.0 * std::f64::consts::PI / b as f64;
        (((normalize_angle(theta) + std::f64::consts::PI) / w).floor() as usize).min(b - 1)
    }

    fn key(&self, s: &RobotState) -> Option<usize> {
        let (ix, iy) = self.grid.world_to_cell(s.x, s.y)?;
        Some((iy * self.grid.width() + ix) * self.bins() + self.heading_bin(s.theta))
    }

    fn lattice_size(&self) -> usize {
        self.grid.width() * self.grid.height() * self.bins()
    }

    fn curve(&self, from: &RobotState, to: &RobotState) -> Option<Curve> {
        if self.params.allow_reverse {
            reeds_shepp_shortest(from, to, self.radius)
        } else {
            dubins_shortest(from, to, self.radius)
        }
    }

    /// Appends a curve to `path` in fine Euler steps; false on collision.
    fn append_curve(&self, path: &mut Path, curve: &Curve) -> bool {
        let v = self.vehicle;
        for seg in &curve.segments {
            let delta = match seg.turn {
                Turn::Left => v.delta_max,
                Turn::Straight => 0.0,
                Turn::Right => -v.delta_max,
            };
            let len = seg.length.abs();
            let control = Control::new(seg.length.signum() * v.v_max, delta);
            let n = (len / self.fine_step).ceil().max(1.0) as usize;
            let added = path.push_segment(control, len / v.v_max, n, v);
            if added.iter().any(|s| self.grid.footprint_collides(s, v)) {
                return false;
            }
        }
        true
    }

    fn finish(&self, mut path: Path) -> Path {
        path.cost = path_cost(&path, self.params);
        path.score = score_path(&path, self.grid, self.vehicle, self.params);
        path
    }

    /// Heuristic between `from` (driving forward in time) and `to`.
    fn heuristic_between(&self, from: &RobotState, to: &RobotState, field_value: Option<f64>) -> f64 {
        let euclid = from.distance_to(to);
        let field = match field_value {
            Some(d) if d.is_finite() => d,
            _ => return UNREACHABLE_PENALTY,
        };
        let curve = self.curve(from, to).map_or(0.0, |c| c.length());
        euclid.max(field).max(curve)
    }
}

/// Lower-bound estimate of the remaining cost from `state` to `goal`: the
/// largest of the straight-line distance, the obstacle-aware distance field
/// value at the state's cell, and the obstacle-free Dubins length at the
/// vehicle's minimum turning radius.
pub fn heuristic(state: &RobotState, goal: &RobotState, dfield: &DistanceField, vehicle: &VehicleParams) -> f64 {
    let euclid = state.distance_to(goal);
    let field = match dfield.at(state.x, state.y) {
        Some(d) if d.is_finite() => d,
        _ => return UNREACHABLE_PENALTY,
    };
    let dubins = dubins_shortest(state, goal, 1.0 / max_curvature(vehicle)).map_or(0.0, |c| c.length());
    euclid.max(field).max(dubins)
}

/// Closed-form connection from `state` to `goal`: a Dubins curve, or a
/// Reeds-Shepp curve when reversing is allowed. `None` if it collides or the
/// integrated endpoint misses the goal tolerances.
pub fn analytic_expansion(
    state: &RobotState,
    goal: &RobotState,
    grid: &OccupancyGrid,
    vehicle: &VehicleParams,
    params: &PlannerParams,
) -> Option<Path> {
    let ctx = Ctx::new(grid, vehicle, params).ok()?;
    let curve = ctx.curve(state, goal)?;
    let mut path = Path::stationary(*state);
    if !ctx.append_curve(&mut path, &curve) || !ctx.within_goal(path.end(), goal) {
        return None;
    }
    Some(ctx.finish(path))
}

fn expand_with(ctx: &Ctx, node: &PlanNode, index: usize, direction: Direction) -> Vec<PlanNode> {
    let v = ctx.vehicle;
    let duration = ctx.arc / v.v_max;
    let h = duration / ctx.n_sub as f64;
    let motions: &[f64] = if ctx.params.allow_reverse { &[1.0, -1.0] } else { &[1.0] };
    let mut out = Vec::with_capacity(ctx.steering.len() * motions.len());
    for &motion in motions {
        for &delta in &ctx.steering {
            let control = Control::new(motion * v.v_max, delta);
            let mut s = node.state;
            let mut free = true;
            for _ in 0..ctx.n_sub {
                s = match direction {
                    Direction::Forward => step_unchecked(s, control, h, v),
                    Direction::Backward => step_inverse(s, control, h, v),
                };
                if ctx.grid.footprint_collides(&s, v) {
                    free = false;
                    break;
                }
            }
            if !free {
                continue;
            }
            let mut g = node.g + ctx.arc + ctx.params.steer_change_penalty * (delta - node.control.delta).abs();
            if motion < 0.0 {
                g += ctx.params.reverse_penalty * ctx.arc;
            }
            out.push(PlanNode {
                state: s,
                g,
                f: g,
                parent: Some(index),
                control,
                duration,
                n_sub: ctx.n_sub,
                direction,
            });
        }
    }
    out
}

/// Children of `node` reached by each steering sample (and reverse motion if
/// allowed) over one primitive arc. `direction_sign` +1 grows the forward
/// tree; -1 grows the backward tree with time-reversed primitives, so each
/// child's recorded control drives it forward onto `node`. Colliding
/// children are dropped. Children carry `f = g`; the caller adds the
/// heuristic.
pub fn expand(
    node: &PlanNode,
    node_index: usize,
    grid: &OccupancyGrid,
    vehicle: &VehicleParams,
    params: &PlannerParams,
    direction_sign: i32,
) -> Result<Vec<PlanNode>> {
    let ctx = Ctx::new(grid, vehicle, params)?;
    let dir = if direction_sign >= 0 { Direction::Forward } else { Direction::Backward };
    Ok(expand_with(&ctx, node, node_index, dir))
}

#[derive(Debug, Clone, Copy)]
struct OpenItem {
    f: f64,
    g: f64,
    seq: usize,
    index: usize,
}

impl PartialEq for OpenItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenItem {}

impl Ord for OpenItem {
    // BinaryHeap is a max-heap: "greater" pops first. Lowest f, then highest
    // g, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Tree {
    direction: Direction,
    nodes: Vec<PlanNode>,
    keys: Vec<usize>,
    open: BinaryHeap<OpenItem>,
    /// Per lattice cell: 0 while unclaimed, otherwise popped node index + 1.
    closed: Vec<u32>,
    pops: usize,
    seq: usize,
    field: DistanceField,
    /// Goal pose for the forward tree, start pose for the backward tree.
    target: RobotState,
}

impl Tree {
    fn new(ctx: &Ctx, root: RobotState, target: RobotState, field: DistanceField, direction: Direction) -> Self {
        let mut t = Self {
            direction,
            nodes: Vec::new(),
            keys: Vec::new(),
            open: BinaryHeap::new(),
            closed: vec![0; ctx.lattice_size()],
            pops: 0,
            seq: 0,
            field,
            target,
        };
        let key = ctx.key(&root).expect("root inside the map");
        t.push(PlanNode::root(root, direction), key);
        t
    }

    fn push(&mut self, node: PlanNode, key: usize) {
        let index = self.nodes.len();
        self.open.push(OpenItem {
            f: node.f,
            g: node.g,
            seq: self.seq,
            index,
        });
        self.seq += 1;
        self.nodes.push(node);
        self.keys.push(key);
    }

    fn peek_f(&self) -> Option<f64> {
        self.open.peek().map(|i| i.f)
    }

    /// Pops the best node whose cell is still unclaimed and claims it.
    fn pop(&mut self) -> Option<usize> {
        while let Some(item) = self.open.pop() {
            let key = self.keys[item.index];
            if self.closed[key] != 0 {
                continue;
            }
            self.closed[key] = item.index as u32 + 1;
            self.pops += 1;
            return Some(item.index);
        }
        None
    }

    fn heuristic(&self, ctx: &Ctx, s: &RobotState) -> f64 {
        let field = self.field.at(s.x, s.y);
        match self.direction {
            Direction::Forward => ctx.heuristic_between(s, &self.target, field),
            Direction::Backward => ctx.heuristic_between(&self.target, s, field),
        }
    }

    fn grow(&mut self, ctx: &Ctx, index: usize) {
        let children = expand_with(ctx, &self.nodes[index], index, self.direction);
        for mut child in children {
            let Some(key) = ctx.key(&child.state) else { continue };
            if self.closed[key] != 0 {
                continue;
            }
            child.f = child.g + self.heuristic(ctx, &child.state);
            self.push(child, key);
        }
    }

    /// Edges from the root down to `index`, in root-to-node order.
    fn chain(&self, index: usize) -> Vec<&PlanNode> {
        let mut out = Vec::new();
        let mut cur = Some(index);
        while let Some(i) = cur {
            let n = &self.nodes[i];
            if n.parent.is_some() {
                out.push(n);
            }
            cur = n.parent;
        }
        out.reverse();
        out
    }

    /// Forward path from the root to `index`; forward tree only.
    fn forward_path(&self, ctx: &Ctx, index: usize) -> Path {
        debug_assert_eq!(self.direction, Direction::Forward);
        let mut p = Path::stationary(self.nodes[0].state);
        for n in self.chain(index) {
            p.push_segment(n.control, n.duration, n.n_sub, ctx.vehicle);
        }
        p
    }

    /// Backward-tree edges from `index` toward the root, in driving order,
    /// each paired with the pose it starts from and the driven distance.
    fn backward_edges(&self, index: usize) -> Vec<(&PlanNode, f64)> {
        debug_assert_eq!(self.direction, Direction::Backward);
        let mut out = Vec::new();
        let mut cur = index;
        while let Some(p) = self.nodes[cur].parent {
            let n = &self.nodes[cur];
            out.push((n, n.control.v.abs() * n.duration));
            cur = p;
        }
        out
    }
}

/// Drives the backward-tree edges in order from the end of `path`, checking
/// collisions on every new state.
fn replay_edges(ctx: &Ctx, path: &mut Path, edges: &[(&PlanNode, f64)]) -> bool {
    for (n, _) in edges {
        let added = path.push_segment(n.control, n.duration, n.n_sub, ctx.vehicle);
        if added.iter().any(|s| ctx.grid.footprint_collides(s, ctx.vehicle)) {
            return false;
        }
    }
    true
}

/// Joins `prefix` (ending near the backward node `b`) with the backward
/// chain from `b` to the goal. First tries replaying the chain's controls
/// directly; failing that, bridges to a pose further along the chain with a
/// closed-form curve and replays the rest.
fn join(ctx: &Ctx, backward: &Tree, prefix: &Path, b: usize, goal: &RobotState) -> Option<Path> {
    let edges = backward.backward_edges(b);
    let mut direct = prefix.clone();
    if replay_edges(ctx, &mut direct, &edges) && ctx.within_goal(direct.end(), goal) {
        return Some(direct);
    }
    let from = *prefix.end();
    let mut along = 0.0;
    for j in 0..edges.len() {
        along += edges[j].1;
        if along > MAX_BRIDGE {
            break;
        }
        // Pose reached after driving edges[..=j]: the parent of edges[j].
        let target_index = edges[j].0.parent.expect("edge has a parent");
        let target = backward.nodes[target_index].state;
        let Some(curve) = ctx.curve(&from, &target) else { continue };
        if curve.length() > 1.5 * along + 2.0 * ctx.arc {
            continue;
        }
        let mut p = prefix.clone();
        if !ctx.append_curve(&mut p, &curve) {
            continue;
        }
        if replay_edges(ctx, &mut p, &edges[j + 1..]) && ctx.within_goal(p.end(), goal) {
            return Some(p);
        }
    }
    None
}

struct Collector<'c> {
    ctx: &'c Ctx<'c>,
    found: Vec<Path>,
}

impl Collector<'_> {
    fn add(&mut self, path: Path) {
        self.found.push(self.ctx.finish(path));
    }

    fn full(&self) -> bool {
        self.found.len() >= self.ctx.params.k_paths
    }

    fn into_result(self, expansions: usize, started: Instant, terminated_by: TerminatedBy) -> Result<PlanResult> {
        if self.found.is_empty() {
            return Err(Error::NoPath { terminated_by, expansions });
        }
        let mut candidates = self.found;
        // Stable: equal scores keep discovery order.
        candidates.sort_by(|a, b| a.score.total_cmp(&b.score));
        Ok(PlanResult {
            best: Some(candidates[0].clone()),
            candidates,
            expansions,
            elapsed: started.elapsed().as_secs_f64(),
            terminated_by,
        })
    }
}

fn check_endpoints(ctx: &Ctx, start: &RobotState, goal: &RobotState) -> Result<DistanceField> {
    if !start.is_finite() || !goal.is_finite() {
        return Err(Error::InvalidInput("non-finite start or goal".into()));
    }
    if ctx.grid.footprint_collides(start, ctx.vehicle) {
        return Err(Error::InvalidStart);
    }
    let field = ctx.grid.distance_field((goal.x, goal.y), ctx.vehicle.inscribed_radius());
    match field {
        Err(Error::InvalidInput(_)) | Err(Error::GoalOccupied) => return Err(Error::GoalOccupied),
        _ => {}
    }
    if ctx.grid.footprint_collides(goal, ctx.vehicle) {
        return Err(Error::GoalOccupied);
    }
    field
}

fn trivial(ctx: &Ctx, start: &RobotState, started: Instant) -> Result<PlanResult> {
    let mut c = Collector { ctx, found: Vec::new() };
    c.add(Path::stationary(*start));
    c.into_result(1, started, TerminatedBy::CandidatesFull)
}

fn should_try_analytic(ctx: &Ctx, pops: usize) -> bool {
    pops == 1 || pops.is_multiple_of(ctx.params.analytic_period)
}

/// Single-tree Hybrid A* from `start` to `goal`, collecting up to `k_paths`
/// candidates.
pub fn plan_oneway(
    grid: &OccupancyGrid,
    start: RobotState,
    goal: RobotState,
    vehicle: &VehicleParams,
    params: &PlannerParams,
) -> Result<PlanResult> {
    let started = Instant::now();
    let ctx = Ctx::new(grid, vehicle, params)?;
    let field = check_endpoints(&ctx, &start, &goal)?;
    if ctx.within_goal(&start, &goal) {
        return trivial(&ctx, &start, started);
    }
    let mut tree = Tree::new(&ctx, start, goal, field, Direction::Forward);
    let mut out = Collector { ctx: &ctx, found: Vec::new() };
    let mut expansions = 0;
    let terminated_by = loop {
        if out.full() {
            break TerminatedBy::CandidatesFull;
        }
        if expansions >= params.expansion_budget {
            break TerminatedBy::BudgetExhausted;
        }
        let Some(i) = tree.pop() else {
            break TerminatedBy::FrontierEmpty;
        };
        expansions += 1;
        let state = tree.nodes[i].state;
        if ctx.within_goal(&state, &goal) {
            out.add(tree.forward_path(&ctx, i));
        } else if should_try_analytic(&ctx, tree.pops) {
            if let Some(curve) = ctx.curve(&state, &goal) {
                let mut p = tree.forward_path(&ctx, i);
                if ctx.append_curve(&mut p, &curve) && ctx.within_goal(p.end(), &goal) {
                    out.add(p);
                }
            }
        }
        tree.grow(&ctx, i);
    };
    out.into_result(expansions, started, terminated_by)
}

/// Two-tree Hybrid A*: a forward tree from `start` and a backward tree of
/// time-reversed primitives from `goal`, interleaved by lowest frontier f.
/// A popped node that lands in a lattice cell already claimed by the other
/// tree with a matching heading yields a joined candidate.
pub fn plan_twoway(
    grid: &OccupancyGrid,
    start: RobotState,
    goal: RobotState,
    vehicle: &VehicleParams,
    params: &PlannerParams,
) -> Result<PlanResult> {
    let started = Instant::now();
    let ctx = Ctx::new(grid, vehicle, params)?;
    let goal_field = check_endpoints(&ctx, &start, &goal)?;
    if ctx.within_goal(&start, &goal) {
        return trivial(&ctx, &start, started);
    }
    let start_field = grid
        .distance_field((start.x, start.y), vehicle.inscribed_radius())
        .map_err(|_| Error::InvalidStart)?;
    let mut fwd = Tree::new(&ctx, start, goal, goal_field, Direction::Forward);
    let mut bwd = Tree::new(&ctx, goal, start, start_field, Direction::Backward);
    let mut out = Collector { ctx: &ctx, found: Vec::new() };
    let mut expansions = 0;
    let bins = ctx.bins();

    let terminated_by = loop {
        if out.full() {
            break TerminatedBy::CandidatesFull;
        }
        if expansions >= params.expansion_budget {
            break TerminatedBy::BudgetExhausted;
        }
        let use_forward = match (fwd.peek_f(), bwd.peek_f()) {
            (None, None) => break TerminatedBy::FrontierEmpty,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let (this, other) = if use_forward { (&mut fwd, &bwd) } else { (&mut bwd, &fwd) };
        let Some(i) = this.pop() else { continue };
        expansions += 1;
        let state = this.nodes[i].state;
        let key = this.keys[i];
        let base = key - key % bins;
        let bin = key % bins;

        // Opposite-tree nodes in this xy cell with an agreeing heading.
        let mut partners = Vec::new();
        for db in [0, 1, bins - 1] {
            let k = base + (bin + db) % bins;
            let c = other.closed[k];
            if c != 0 {
                let j = c as usize - 1;
                if angle_diff(other.nodes[j].state.theta, state.theta) <= ctx.th_tol {
                    partners.push(j);
                }
            }
            if bins < 3 {
                break;
            }
        }

        match this.direction {
            Direction::Forward => {
                let prefix = this.forward_path(&ctx, i);
                if ctx.within_goal(&state, &goal) {
                    out.add(prefix.clone());
                }
                for j in partners {
                    if out.full() {
                        break;
                    }
                    if let Some(p) = join(&ctx, other, &prefix, j, &goal) {
                        out.add(p);
                    }
                }
                if !out.full() && should_try_analytic(&ctx, this.pops) {
                    if let Some(curve) = ctx.curve(&state, &goal) {
                        let mut p = prefix;
                        if ctx.append_curve(&mut p, &curve) && ctx.within_goal(p.end(), &goal) {
                            out.add(p);
                        }
                    }
                }
            }
            Direction::Backward => {
                if ctx.within_goal(&state, &start) {
                    let mut p = Path::stationary(start);
                    if replay_edges(&ctx, &mut p, &this.backward_edges(i)) && ctx.within_goal(p.end(), &goal) {
                        out.add(p);
                    }
                }
                for j in partners {
                    if out.full() {
                        break;
                    }
                    let prefix = other.forward_path(&ctx, j);
                    if let Some(p) = join(&ctx, this, &prefix, i, &goal) {
                        out.add(p);
                    }
                }
                if !out.full() && should_try_analytic(&ctx, this.pops) {
                    if let Some(curve) = ctx.curve(&start, &state) {
                        let mut p = Path::stationary(start);
                        if ctx.append_curve(&mut p, &curve)
                            && replay_edges(&ctx, &mut p, &this.backward_edges(i))
                            && ctx.within_goal(p.end(), &goal)
                        {
                            out.add(p);
                        }
                    }
                }
            }
        }
        this.grow(&ctx, i);
    };
    out.into_result(expansions, started, terminated_by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::step_unchecked;
    use crate::planner::validate_path;
    use approx::assert_abs_diff_eq;

    fn open(size: f64) -> OccupancyGrid {
        OccupancyGrid::empty(size, size, 0.1).unwrap()
    }

    fn root(x: f64, y: f64, th: f64) -> PlanNode {
        PlanNode::root(RobotState::new(x, y, th), Direction::Forward)
    }

    #[test]
    fn straight_child_moves_one_arc() {
        let g = open(4.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let kids = expand(&root(2.0, 2.0, 0.0), 0, &g, &v, &p, 1).unwrap();
        let straight = kids.iter().find(|k| k.control.delta == 0.0).unwrap();
        assert_abs_diff_eq!(straight.state.x, 2.0 + p.arc_length_for(0.1), epsilon = 1e-12);
        assert_abs_diff_eq!(straight.state.y, 2.0, epsilon = 1e-12);
        assert_eq!(straight.parent, Some(0));
    }

    #[test]
    fn wall_ahead_drops_straight_child() {
        let mut g = open(4.0);
        g.fill_rect(2.45, 0.0, 2.6, 4.0, true);
        let v = VehicleParams::default();
        let kids = expand(&root(2.0, 2.0, 0.0), 0, &g, &v, &PlannerParams::default(), 1).unwrap();
        assert!(kids.iter().all(|k| k.control.delta != 0.0));
    }

    #[test]
    fn five_children_symmetric_headings() {
        let g = open(4.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let kids = expand(&root(2.0, 2.0, 0.3), 0, &g, &v, &p, 1).unwrap();
        assert_eq!(kids.len(), 5);
        // Hand integration: heading change is v tan(delta) / L per unit time
        // over arc / v seconds, so arc * tan(delta) / L regardless of substeps.
        let arc = p.arc_length_for(0.1);
        for k in &kids {
            let expect = arc * k.control.delta.tan() / v.wheelbase;
            assert_abs_diff_eq!(angle_diff(k.state.theta, 0.3), expect.abs(), epsilon = 1e-9);
        }
        let d: Vec<f64> = kids.iter().map(|k| k.control.delta).collect();
        for i in 0..5 {
            assert_abs_diff_eq!(d[i], -d[4 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn backward_children_replay_forward_onto_parent() {
        let g = open(4.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let parent = PlanNode::root(RobotState::new(2.0, 2.0, 1.0), Direction::Backward);
        for k in expand(&parent, 0, &g, &v, &p, -1).unwrap() {
            let h = k.duration / k.n_sub as f64;
            let mut s = k.state;
            for _ in 0..k.n_sub {
                s = step_unchecked(s, k.control, h, &v);
            }
            assert!(s.distance_to(&parent.state) < 1e-12);
            assert!(angle_diff(s.theta, parent.state.theta) < 1e-12);
        }
    }

    #[test]
    fn heuristic_examples() {
        let g = open(10.0);
        let v = VehicleParams::default();
        let goal = RobotState::new(7.0, 5.0, 0.0);
        let df = g.distance_field((goal.x, goal.y), 0.0).unwrap();
        assert_eq!(heuristic(&goal, &goal, &df, &v), 0.0);
        let s = RobotState::new(2.0, 5.0, 0.0);
        assert_abs_diff_eq!(heuristic(&s, &goal, &df, &v), 5.0, epsilon = 1e-9);
        let behind = RobotState::new(7.5, 5.0, 0.0);
        assert!(heuristic(&behind, &goal, &df, &v) > 0.5 + 1.0);
    }

    #[test]
    fn heuristic_penalizes_unreachable() {
        let mut g = open(4.0);
        g.fill_rect(1.95, 0.0, 2.05, 4.0, true);
        let v = VehicleParams::default();
        let goal = RobotState::new(3.0, 2.0, 0.0);
        let df = g.distance_field((goal.x, goal.y), 0.0).unwrap();
        let h = heuristic(&RobotState::new(1.0, 2.0, 0.0), &goal, &df, &v);
        assert!(h.is_finite() && h >= UNREACHABLE_PENALTY);
    }

    #[test]
    fn analytic_examples() {
        let mut g = open(10.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let s = RobotState::new(2.0, 5.0, 0.0);
        let path = analytic_expansion(&s, &RobotState::new(6.0, 5.0, 0.0), &g, &v, &p).unwrap();
        assert_abs_diff_eq!(path.length(), 4.0, epsilon = 1e-9);
        g.fill_rect(3.95, 0.0, 4.05, 10.0, true);
        assert!(analytic_expansion(&s, &RobotState::new(6.0, 5.0, 0.0), &g, &v, &p).is_none());
    }

    #[test]
    fn analytic_quarter_turns_have_length_pi() {
        // Radius 1 m: wheelbase 0.5, tan(delta_max) = 0.5.
        let v = VehicleParams {
            delta_max: 0.5f64.atan(),
            ..VehicleParams::default()
        };
        let g = open(10.0);
        let p = PlannerParams::default();
        let s = RobotState::new(5.0, 3.0, 0.0);
        let goal = RobotState::new(5.0, 5.0, std::f64::consts::PI);
        let path = analytic_expansion(&s, &goal, &g, &v, &p).unwrap();
        assert_abs_diff_eq!(path.length(), std::f64::consts::PI, epsilon = 1e-6);
    }

    #[test]
    fn trivial_start_at_goal() {
        let g = open(5.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let s = RobotState::new(2.0, 2.0, 0.0);
        for r in [plan_oneway(&g, s, s, &v, &p).unwrap(), plan_twoway(&g, s, s, &v, &p).unwrap()] {
            assert_eq!(r.candidates.len(), 1);
            assert_eq!(r.expansions, 1);
            assert_eq!(r.best.unwrap().length(), 0.0);
        }
    }

    #[test]
    fn sealed_goal_has_no_path() {
        let mut g = open(6.0);
        g.fill_rect(3.5, 3.5, 5.5, 3.6, true);
        g.fill_rect(3.5, 5.4, 5.5, 5.5, true);
        g.fill_rect(3.5, 3.5, 3.6, 5.5, true);
        g.fill_rect(5.4, 3.5, 5.5, 5.5, true);
        let v = VehicleParams::default();
        let p = PlannerParams {
            expansion_budget: 20_000,
            ..PlannerParams::default()
        };
        let s = RobotState::new(1.0, 1.0, 0.0);
        let goal = RobotState::new(4.5, 4.5, 0.0);
        for r in [plan_oneway(&g, s, goal, &v, &p), plan_twoway(&g, s, goal, &v, &p)] {
            match r {
                Err(Error::NoPath { expansions, .. }) => assert!(expansions <= 20_000),
                other => panic!("expected NoPath, got {other:?}"),
            }
        }
    }

    #[test]
    fn goal_collision_and_start_collision() {
        let mut g = open(5.0);
        g.fill_rect(3.0, 3.0, 3.5, 3.5, true);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let s = RobotState::new(1.0, 1.0, 0.0);
        let bad = RobotState::new(3.2, 3.2, 0.0);
        assert_eq!(plan_oneway(&g, s, bad, &v, &p).unwrap_err(), Error::GoalOccupied);
        assert_eq!(plan_twoway(&g, bad, s, &v, &p).unwrap_err(), Error::InvalidStart);
    }

    #[test]
    fn open_field_six_meters() {
        let g = open(10.0);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let s = RobotState::new(2.0, 5.0, 0.0);
        let goal = RobotState::new(8.0, 5.0, 0.0);
        for r in [plan_oneway(&g, s, goal, &v, &p).unwrap(), plan_twoway(&g, s, goal, &v, &p).unwrap()] {
            let best = r.best.as_ref().unwrap();
            assert!(best.length() <= 6.0 * 1.05, "length {}", best.length());
            assert_eq!(validate_path(best, &g, &v, 1e-9), Ok(()));
            let min = r.candidates.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
            assert_eq!(best.score, min);
        }
    }

    #[test]
    fn planning_is_deterministic() {
        let mut g = open(10.0);
        g.fill_rect(4.0, 2.0, 5.0, 7.0, true);
        let v = VehicleParams::default();
        let p = PlannerParams::default();
        let s = RobotState::new(1.5, 4.0, 0.0);
        let goal = RobotState::new(8.0, 5.0, 1.0);
        let a = plan_twoway(&g, s, goal, &v, &p).unwrap();
        let b = plan_twoway(&g, s, goal, &v, &p).unwrap();
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.expansions, b.expansions);
    }
}
