use std::f64::consts::PI;

use crate::kinematics::{max_curvature, step_unchecked, yaw_rate, Control, RobotState, VehicleParams};
use crate::world::OccupancyGrid;

use super::PlannerParams;

/// A dense, kinematically feasible trajectory.
///
/// `controls[i]` held for `dts[i]` seconds takes `states[i]` to
/// `states[i + 1]` under the Euler step.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub states: Vec<RobotState>,
    pub controls: Vec<Control>,
    pub dts: Vec<f64>,
    pub cost: f64,
    pub score: f64,
}

impl Path {
    /// A path that stays at `state`.
    pub fn stationary(state: RobotState) -> Self {
        Self {
            states: vec![state],
            controls: Vec::new(),
            dts: Vec::new(),
            cost: 0.0,
            score: 0.0,
        }
    }

    pub fn start(&self) -> &RobotState {
        &self.states[0]
    }

    pub fn end(&self) -> &RobotState {
        self.states.last().expect("path has at least one state")
    }

    /// Driven distance in meters.
    pub fn length(&self) -> f64 {
        self.controls.iter().zip(&self.dts).map(|(c, dt)| c.v.abs() * dt).sum()
    }

    pub fn duration(&self) -> f64 {
        self.dts.iter().sum()
    }

    /// Appends `control` held for `duration`, split into `n_sub` equal Euler
    /// steps. Returns the new states.
    pub(crate) fn push_segment(
        &mut self,
        control: Control,
        duration: f64,
        n_sub: usize,
        vehicle: &VehicleParams,
    ) -> &[RobotState] {
        let h = duration / n_sub as f64;
        let first = self.states.len();
        let mut s = *self.end();
        for _ in 0..n_sub {
            s = step_unchecked(s, control, h, vehicle);
            self.states.push(s);
            self.controls.push(control);
            self.dts.push(h);
        }
        &self.states[first..]
    }

    /// CSV rows `t,x,y,theta,v,delta`. Row `i` is state `i` and the control
    /// applied from it (zeros on the final row).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,theta,v,delta\n");
        let mut t = 0.0;
        for (i, s) in self.states.iter().enumerate() {
            let c = self.controls.get(i).copied().unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{},{}\n", t, s.x, s.y, s.theta, c.v, c.delta));
            if let Some(dt) = self.dts.get(i) {
                t += dt;
            }
        }
        out
    }

    /// Inverse of [`Path::to_csv`]; cost and score are left at zero.
    pub fn from_csv(text: &str) -> crate::Result<Self> {
        use crate::Error;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line.trim() != "t,x,y,theta,v,delta" {
                    return Err(Error::ParseError { line: 1, msg: "expected header t,x,y,theta,v,delta".into() });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == 6 => rows.push(v),
                _ => return Err(Error::ParseError { line: i + 1, msg: "expected six numeric fields".into() }),
            }
        }
        if rows.is_empty() {
            return Err(Error::ParseError { line: 2, msg: "path has no states".into() });
        }
        let states = rows.iter().map(|r| RobotState { x: r[1], y: r[2], theta: r[3] }).collect();
        let n = rows.len() - 1;
        let controls = rows[..n].iter().map(|r| Control::new(r[4], r[5])).collect();
        let dts = (0..n).map(|i| rows[i + 1][0] - rows[i][0]).collect();
        Ok(Self { states, controls, dts, cost: 0.0, score: 0.0 })
    }
}

/// Length plus steering-change and reverse penalties. The first control is
/// compared against straight-ahead steering.
pub fn path_cost(path: &Path, params: &PlannerParams) -> f64 {
    let mut cost = 0.0;
    let mut prev_delta = 0.0;
    for (c, dt) in path.controls.iter().zip(&path.dts) {
        let len = c.v.abs() * dt;
        cost += len + params.steer_change_penalty * (c.delta - prev_delta).abs();
        if c.v < 0.0 {
            cost += params.reverse_penalty * len;
        }
        prev_delta = c.delta;
    }
    cost
}

/// Free radius around a point: the shortest of eight rays, capped at `cap`.
pub(crate) fn clearance(grid: &OccupancyGrid, state: &RobotState, cap: f64) -> f64 {
    let mut best = cap;
    for k in 0..8 {
        let a = state.theta + k as f64 * PI / 4.0;
        match grid.raycast((state.x, state.y), a, cap) {
            Ok(d) => best = best.min(d),
            Err(_) => return 0.0,
        }
    }
    best
}

/// Path quality used to rank candidates (lower is better):
/// `cost + w_curv * sum|d delta| + w_clear * sum max(0, d_safe - clearance) * dt`
/// with `d_safe` equal to the footprint width.
pub fn score_path(path: &Path, grid: &OccupancyGrid, vehicle: &VehicleParams, params: &PlannerParams) -> f64 {
    let steer_var: f64 = path
        .controls
        .windows(2)
        .map(|w| (w[1].delta - w[0].delta).abs())
        .sum();
    let mut deficit = 0.0;
    if params.score_w_clearance > 0.0 {
        let d_safe = vehicle.footprint_width;
        for (s, dt) in path.states.iter().zip(&path.dts) {
            deficit += (d_safe - clearance(grid, s, d_safe)).max(0.0) * dt;
        }
    }
    path.cost + params.score_w_curvature * steer_var + params.score_w_clearance * deficit
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathViolation {
    Empty,
    ShapeMismatch,
    Replay { index: usize, error: f64 },
    Collision { index: usize },
    Curvature { index: usize, curvature: f64 },
    NonPositiveDt { index: usize },
}

/// Checks the three feasibility invariants: every transition reproduces the
/// Euler step within `tol`, no state collides, and no control exceeds the
/// vehicle's curvature bound.
pub fn validate_path(
    path: &Path,
    grid: &OccupancyGrid,
    vehicle: &VehicleParams,
    tol: f64,
) -> Result<(), PathViolation> {
    if path.states.is_empty() {
        return Err(PathViolation::Empty);
    }
    if path.controls.len() + 1 != path.states.len() || path.dts.len() != path.controls.len() {
        return Err(PathViolation::ShapeMismatch);
    }
    let kmax = max_curvature(vehicle);
    for (i, s) in path.states.iter().enumerate() {
        if grid.footprint_collides(s, vehicle) {
            return Err(PathViolation::Collision { index: i });
        }
    }
    for (i, (c, &dt)) in path.controls.iter().zip(&path.dts).enumerate() {
        if !(dt > 0.0) {
            return Err(PathViolation::NonPositiveDt { index: i });
        }
        let k = if c.v != 0.0 { (yaw_rate(*c, vehicle) / c.v).abs() } else { 0.0 };
        if k > kmax * (1.0 + 1e-12) {
            return Err(PathViolation::Curvature { index: i, curvature: k });
        }
        let next = step_unchecked(path.states[i], *c, dt, vehicle);
        let want = path.states[i + 1];
        let err = (next.x - want.x)
            .abs()
            .max((next.y - want.y).abs())
            .max(crate::kinematics::angle_diff(next.theta, want.theta));
        if err > tol {
            return Err(PathViolation::Replay { index: i, error: err });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn straight(n: usize, y: f64) -> Path {
        let v = VehicleParams::default();
        let mut p = Path::stationary(RobotState::new(1.0, y, 0.0));
        p.push_segment(Control::new(1.0, 0.0), 0.1 * n as f64, n, &v);
        p
    }

    #[test]
    fn zero_weights_score_equals_cost() {
        let g = OccupancyGrid::empty(5.0, 5.0, 0.1).unwrap();
        let params = PlannerParams {
            score_w_curvature: 0.0,
            score_w_clearance: 0.0,
            ..PlannerParams::default()
        };
        let mut p = straight(10, 2.5);
        p.cost = path_cost(&p, &params);
        assert_abs_diff_eq!(p.cost, 1.0, epsilon = 1e-12);
        assert_eq!(score_path(&p, &g, &VehicleParams::default(), &params), p.cost);
    }

    #[test]
    fn straight_beats_s_curve() {
        let g = OccupancyGrid::empty(6.0, 6.0, 0.1).unwrap();
        let v = VehicleParams::default();
        let params = PlannerParams {
            score_w_clearance: 0.0,
            ..PlannerParams::default()
        };
        let mut a = straight(20, 3.0);
        let mut b = Path::stationary(RobotState::new(1.0, 3.0, 0.0));
        b.push_segment(Control::new(1.0, 0.3), 0.5, 5, &v);
        b.push_segment(Control::new(1.0, -0.3), 1.0, 10, &v);
        b.push_segment(Control::new(1.0, 0.3), 0.5, 5, &v);
        // Score the same cost so only the steering term differs.
        a.cost = 2.0;
        b.cost = 2.0;
        assert!(score_path(&a, &g, &v, &params) < score_path(&b, &g, &v, &params));
    }

    #[test]
    fn centered_beats_wall_hugging() {
        // Corridor 2 m wide: walls fill y < 1.0 and y > 3.0.
        let mut g = OccupancyGrid::empty(6.0, 4.0, 0.1).unwrap();
        g.fill_rect(0.0, 0.0, 6.0, 1.0, true);
        g.fill_rect(0.0, 3.0, 6.0, 4.0, true);
        let v = VehicleParams::default();
        let params = PlannerParams {
            score_w_curvature: 0.0,
            score_w_clearance: 1.0,
            ..PlannerParams::default()
        };
        // Three-state paths (two transitions of 0.1 s each).
        let mut hug = straight(2, 1.25);
        let mut mid = straight(2, 2.0);
        hug.cost = 0.2;
        mid.cost = 0.2;
        // Hand evaluation: the wall top is y = 1.0, so the downward ray from
        // y = 1.25 stops at 0.25 m. Deficit 0.4 - 0.25 = 0.15 on each of the
        // two timed states: 0.15 * 0.1 * 2 = 0.03. The centered path sees
        // 1 m of clearance on both sides, beyond the 0.4 m cap.
        let s_hug = score_path(&hug, &g, &v, &params);
        let s_mid = score_path(&mid, &g, &v, &params);
        assert_abs_diff_eq!(s_mid, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(s_hug, 0.2 + 0.03, epsilon = 1e-9);
        assert!(s_mid < s_hug);
    }

    #[test]
    fn validator_flags_tampering() {
        let g = OccupancyGrid::empty(5.0, 5.0, 0.1).unwrap();
        let v = VehicleParams::default();
        let mut p = straight(5, 2.5);
        assert!(validate_path(&p, &g, &v, 1e-9).is_ok());
        p.states[3].x += 1e-6;
        assert!(matches!(validate_path(&p, &g, &v, 1e-9), Err(PathViolation::Replay { .. })));
        let mut q = straight(5, 2.5);
        q.controls[1].delta = 1.0;
        assert!(matches!(validate_path(&q, &g, &v, 1e-9), Err(PathViolation::Curvature { .. })));
        let r = straight(5, 0.05);
        assert!(matches!(validate_path(&r, &g, &v, 1e-9), Err(PathViolation::Collision { .. })));
    }

    #[test]
    fn csv_roundtrip_preserves_states() {
        let v = VehicleParams::default();
        let mut p = Path::stationary(RobotState::new(1.0, 1.0, 0.2));
        p.push_segment(Control::new(1.0, 0.3), 0.3, 3, &v);
        let q = Path::from_csv(&p.to_csv()).unwrap();
        assert_eq!(q.states, p.states);
        assert_eq!(q.controls, p.controls);
        for (a, b) in q.dts.iter().zip(&p.dts) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
