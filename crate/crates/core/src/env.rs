//! Episodic navigation environment: bicycle kinematics on an occupancy grid
//! with a ring of simulated lidar beams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{normalize_angle, step, Control, RobotState, VehicleParams};
use crate::sac::reward;
use crate::world::OccupancyGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub grid: OccupancyGrid,
    pub vehicle: VehicleParams,
    pub start: RobotState,
    pub goal: (f64, f64),
    pub goal_radius: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub n_beams: usize,
    pub beam_max_range: f64,
    /// Half-width in meters of the square the start position is drawn from
    /// on reset. Zero keeps the start fixed.
    pub start_jitter: f64,
}

impl EnvConfig {
    pub fn new(grid: OccupancyGrid, start: RobotState, goal: (f64, f64)) -> Self {
        Self {
            grid,
            vehicle: VehicleParams::default(),
            start,
            goal,
            goal_radius: 0.3,
            dt: 0.1,
            max_steps: 500,
            n_beams: 24,
            beam_max_range: 5.0,
            start_jitter: 0.0,
        }
    }

    /// Empty 10 m x 10 m map, start facing a goal 3 m ahead.
    pub fn open_field() -> Self {
        let grid = OccupancyGrid::empty(10.0, 10.0, 0.1).expect("valid grid");
        Self::new(grid, RobotState::new(3.5, 5.0, 0.0), (6.5, 5.0))
    }

    pub fn obs_dim(&self) -> usize {
        self.n_beams + 3
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        let bad = |m: &str| Err(Error::InvalidInput(format!("env config: {m}")));
        if !(self.goal_radius > 0.0) {
            return bad("goal_radius must be positive");
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if self.max_steps == 0 || self.n_beams == 0 {
            return bad("max_steps and n_beams must be positive");
        }
        if !(self.beam_max_range > 0.0) {
            return bad("beam_max_range must be positive");
        }
        if !(self.start_jitter >= 0.0) {
            return bad("start_jitter must be non-negative");
        }
        if !self.grid.contains_point(self.goal.0, self.goal.1) {
            return bad("goal outside the map");
        }
        if !self.start.is_finite() {
            return bad("start must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Running,
    Collision,
    GoalReached,
    Timeout,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::Running => "Running",
            Event::Collision => "Collision",
            Event::GoalReached => "GoalReached",
            Event::Timeout => "Timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Beam ranges over `beam_max_range`; beam 0 along the heading, then
    /// counter-clockwise.
    pub lidar: Vec<f64>,
    /// Distance to the goal over the map diagonal, capped at 1.
    pub goal_dist: f64,
    /// Goal bearing relative to the heading, over pi.
    pub goal_bearing: f64,
    /// Current speed over `v_max`.
    pub speed: f64,
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.lidar.clone();
        v.extend([self.goal_dist, self.goal_bearing, self.speed]);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub state: RobotState,
    pub control: Control,
    pub reward: f64,
    pub event: Event,
}

/// CSV with header `t,x,y,theta,v,delta,reward,event`.
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("t,x,y,theta,v,delta,reward,event\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            r.state.x,
            r.state.y,
            r.state.theta,
            r.control.v,
            r.control.delta,
            r.reward,
            r.event.name()
        ));
    }
    out
}

/// One episode in progress.
#[derive(Debug, Clone)]
pub struct Env<'a> {
    config: &'a EnvConfig,
    reward_scale: f64,
    pose: RobotState,
    speed: f64,
    steps: usize,
    prev_goal_dist: f64,
    done: bool,
    trace: Option<Vec<TraceRow>>,
}

impl<'a> Env<'a> {
    pub fn reset(config: &'a EnvConfig, seed: u64) -> Result<(Self, Observation)> {
        config.validate()?;
        let mut pose = config.start;
        if config.start_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = config.start_jitter;
            pose = (0..100)
                .map(|_| {
                    RobotState::new(
                        config.start.x + rng.random_range(-j..=j),
                        config.start.y + rng.random_range(-j..=j),
                        config.start.theta,
                    )
                })
                .find(|p| !config.grid.footprint_collides(p, &config.vehicle))
                .ok_or(Error::InvalidStart)?;
        }
        if config.grid.footprint_collides(&pose, &config.vehicle) {
            return Err(Error::InvalidStart);
        }
        let env = Self {
            config,
            reward_scale: 1.0,
            pose,
            speed: 0.0,
            steps: 0,
            prev_goal_dist: goal_distance(&pose, config.goal),
            done: false,
            trace: None,
        };
        let obs = env.observe();
        Ok((env, obs))
    }

    pub fn with_reward_scale(mut self, scale: f64) -> Self {
        self.reward_scale = scale;
        self
    }

    /// Start keeping a per-step trace, readable with [`Env::trace`].
    pub fn record_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Option<&[TraceRow]> {
        self.trace.as_deref()
    }

    pub fn pose(&self) -> RobotState {
        self.pose
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn config(&self) -> &'a EnvConfig {
        self.config
    }

    /// Maps a normalized action in [-1, 1]^2 to speed in [0, v_max] and
    /// steering in [-delta_max, delta_max].
    pub fn action_to_control(&self, action: &[f64]) -> Control {
        let v = &self.config.vehicle;
        Control::new((action[0] + 1.0) / 2.0 * v.v_max, action[1] * v.delta_max)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        if action.len() != 2 {
            return Err(Error::ShapeMismatch {
                expected: 2,
                got: action.len(),
            });
        }
        if action.iter().any(|a| !(-1.0..=1.0).contains(a)) {
            return Err(Error::InvalidInput(format!("action {action:?} outside [-1, 1]")));
        }
        let cfg = self.config;
        let control = self.action_to_control(action);
        let mid = step(self.pose, control, cfg.dt / 2.0, &cfg.vehicle)?;
        let next = step(self.pose, control, cfg.dt, &cfg.vehicle)?;
        let start_pose = self.pose;
        self.pose = next;
        self.speed = control.v;
        self.steps += 1;
        let dist = goal_distance(&next, cfg.goal);
        let event = if cfg.grid.footprint_collides(&mid, &cfg.vehicle) || cfg.grid.footprint_collides(&next, &cfg.vehicle)
        {
            Event::Collision
        } else if dist <= cfg.goal_radius {
            Event::GoalReached
        } else if self.steps >= cfg.max_steps {
            Event::Timeout
        } else {
            Event::Running
        };
        let r = reward(self.prev_goal_dist, dist, event, self.reward_scale);
        self.prev_goal_dist = dist;
        self.done = event != Event::Running;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRow {
                t: (self.steps - 1) as f64 * cfg.dt,
                state: start_pose,
                control,
                reward: r,
                event,
            });
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward: r,
            done: self.done,
            event,
        })
    }

    pub fn observe(&self) -> Observation {
        let cfg = self.config;
        let p = self.pose;
        let n = cfg.n_beams;
        let lidar = (0..n)
            .map(|k| {
                let angle = p.theta + k as f64 * std::f64::consts::TAU / n as f64;
                // A pose whose center left the map has no meaningful range.
                let range = cfg.grid.raycast((p.x, p.y), angle, cfg.beam_max_range).unwrap_or(0.0);
                (range / cfg.beam_max_range).clamp(0.0, 1.0)
            })
            .collect();
        let (dx, dy) = (cfg.goal.0 - p.x, cfg.goal.1 - p.y);
        let dist = dx.hypot(dy);
        let bearing = if dist > 0.0 {
            normalize_angle(dy.atan2(dx) - p.theta)
        } else {
            0.0
        };
        Observation {
            lidar,
            goal_dist: (dist / cfg.grid.diagonal()).min(1.0),
            goal_bearing: bearing / std::f64::consts::PI,
            speed: self.speed / cfg.vehicle.v_max,
        }
    }
}

fn goal_distance(p: &RobotState, goal: (f64, f64)) -> f64 {
    (goal.0 - p.x).hypot(goal.1 - p.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn walled() -> EnvConfig {
        let mut g = OccupancyGrid::empty(10.0, 10.0, 0.1).unwrap();
        g.fill_rect(8.0, 0.0, 8.3, 10.0, true);
        EnvConfig::new(g, RobotState::new(5.0, 5.0, 0.0), (2.0, 2.0))
    }

    #[test]
    fn reset_shapes_and_errors() {
        let cfg = EnvConfig::open_field();
        let (_, obs) = Env::reset(&cfg, 0).unwrap();
        assert_eq!(obs.to_vec().len(), cfg.n_beams + 3);
        let mut bad = walled();
        bad.start = RobotState::new(8.1, 5.0, 0.0);
        assert_eq!(Env::reset(&bad, 0).unwrap_err(), Error::InvalidStart);
    }

    #[test]
    fn start_at_goal_reaches_goal_first_step() {
        let mut cfg = EnvConfig::open_field();
        cfg.goal = (cfg.start.x, cfg.start.y);
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        let out = env.step(&[-1.0, 0.0]).unwrap();
        assert_eq!(out.event, Event::GoalReached);
        assert_eq!(env.step(&[0.0, 0.0]).unwrap_err(), Error::EpisodeFinished);
    }

    #[test]
    fn goal_step_reward() {
        let mut cfg = EnvConfig::open_field();
        cfg.goal = (cfg.start.x + 0.1 + cfg.goal_radius, cfg.start.y);
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        let out = env.step(&[1.0, 0.0]).unwrap();
        assert_eq!(out.event, Event::GoalReached);
        assert!(out.done);
        assert_abs_diff_eq!(out.reward, 25.0 + 0.1, epsilon = 1e-12);
    }

    #[test]
    fn wall_collision_reward() {
        let mut cfg = walled();
        // Front edge at x + 0.55, 0.05 m short of the first wall cell center (8.05).
        cfg.start = RobotState::new(8.0 - 0.55, 5.0, 0.0);
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        let before = env.prev_goal_dist;
        let out = env.step(&[1.0, 0.0]).unwrap();
        assert_eq!(out.event, Event::Collision);
        let after = goal_distance(&env.pose(), cfg.goal);
        assert_abs_diff_eq!(out.reward, -20.0 + (before - after), epsilon = 1e-12);
    }

    #[test]
    fn timeout_at_max_steps() {
        let mut cfg = EnvConfig::open_field();
        cfg.goal = (9.5, 9.5);
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        // Standing still never collides or arrives.
        for i in 1..=cfg.max_steps {
            let out = env.step(&[-1.0, 0.0]).unwrap();
            if i < cfg.max_steps {
                assert_eq!(out.event, Event::Running);
            } else {
                assert_eq!(out.event, Event::Timeout);
                assert_eq!(out.reward, 0.0);
            }
        }
    }

    #[test]
    fn collision_beats_goal() {
        let mut cfg = walled();
        cfg.start = RobotState::new(8.0 - 0.55, 5.0, 0.0);
        cfg.goal = (7.6, 5.0);
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        assert_eq!(env.step(&[1.0, 0.0]).unwrap().event, Event::Collision);
    }

    #[test]
    fn open_map_lidar_all_ones_and_bearing_zero() {
        let cfg = EnvConfig::open_field();
        let (env, obs) = Env::reset(&cfg, 0).unwrap();
        assert!(obs.lidar.iter().all(|&r| r == 1.0));
        assert_eq!(obs.goal_bearing, 0.0);
        assert_eq!(env.observe(), obs);
    }

    #[test]
    fn wall_two_meters_ahead() {
        let mut cfg = walled();
        cfg.start = RobotState::new(6.0, 5.0, 0.0);
        let (_, obs) = Env::reset(&cfg, 0).unwrap();
        assert_abs_diff_eq!(obs.lidar[0], 0.4, epsilon = 0.1 / (2.0 * 5.0));
    }

    #[test]
    fn rewards_telescope_while_running() {
        let cfg = EnvConfig::open_field();
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        let d0 = env.prev_goal_dist;
        let mut sum = 0.0;
        for _ in 0..12 {
            let out = env.step(&[0.2, 0.3]).unwrap();
            assert_eq!(out.event, Event::Running);
            sum += out.reward;
        }
        assert_abs_diff_eq!(sum, d0 - env.prev_goal_dist, epsilon = 1e-9);
    }

    #[test]
    fn trace_csv_header_and_rows() {
        let cfg = EnvConfig::open_field();
        let (mut env, _) = Env::reset(&cfg, 0).unwrap();
        env.record_trace();
        env.step(&[0.0, 0.0]).unwrap();
        let csv = trace_to_csv(env.trace().unwrap());
        assert!(csv.starts_with("t,x,y,theta,v,delta,reward,event\n"));
        assert_eq!(csv.lines().count(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn observations_bounded_and_episodes_capped(
            actions in proptest::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0), 1..60),
        ) {
            let mut cfg = walled();
            cfg.max_steps = 40;
            let (mut env, obs) = Env::reset(&cfg, 0).unwrap();
            prop_assert!(obs.to_vec().iter().all(|v| (-1.0..=1.0).contains(v)));
            for (a, b) in actions {
                match env.step(&[a, b]) {
                    Ok(out) => {
                        prop_assert!(out.observation.to_vec().iter().all(|v| (-1.0..=1.0).contains(v)));
                        prop_assert!(env.steps() <= cfg.max_steps);
                    }
                    Err(e) => {
                        prop_assert_eq!(e, Error::EpisodeFinished);
                        break;
                    }
                }
            }
        }
    }
}
