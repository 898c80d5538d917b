//! Flat `key = value` run configuration covering planner, vehicle, SAC and
//! environment settings. Blank lines and `#` comments are ignored; unknown or
//! repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::kinematics::{RobotState, VehicleParams};
use crate::planner::PlannerParams;
use crate::sac::SacHyper;
use crate::world::OccupancyGrid;

/// Environment settings that do not depend on the map.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSettings {
    pub start: Option<RobotState>,
    pub goal: Option<(f64, f64)>,
    pub goal_radius: f64,
    pub dt: f64,
    pub max_steps: usize,
    pub n_beams: usize,
    pub beam_max_range: f64,
    pub start_jitter: f64,
}

impl Default for EnvSettings {
    fn default() -> Self {
        let d = EnvConfig::open_field();
        Self {
            start: None,
            goal: None,
            goal_radius: d.goal_radius,
            dt: d.dt,
            max_steps: d.max_steps,
            n_beams: d.n_beams,
            beam_max_range: d.beam_max_range,
            start_jitter: d.start_jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub planner: PlannerParams,
    pub vehicle: VehicleParams,
    pub sac: SacHyper,
    pub env: EnvSettings,
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

/// A number, or `auto` for the derived default.
fn auto(v: &str) -> std::result::Result<Option<f64>, String> {
    if v == "auto" {
        Ok(None)
    } else {
        num(v).map(Some)
    }
}

fn floats(v: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: std::result::Result<Vec<f64>, _> = v.split(',').map(|p| num(p.trim())).collect();
    match parts {
        Ok(p) if p.len() == n => Ok(p),
        Ok(_) => Err(format!("expected {n} comma-separated numbers, got {v:?}")),
        Err(e) => Err(e),
    }
}

fn fmt_auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ParseError { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            c.set(key, value).map_err(err)?;
        }
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let (p, veh, s, e) = (&mut self.planner, &mut self.vehicle, &mut self.sac, &mut self.env);
        match key {
            "theta_bins" => p.theta_bins = num(v)?,
            "steering_samples" => p.steering_samples = num(v)?,
            "arc_length" => p.arc_length = auto(v)?,
            "allow_reverse" => p.allow_reverse = num(v)?,
            "expansion_budget" => p.expansion_budget = num(v)?,
            "k_paths" => p.k_paths = num(v)?,
            "analytic_period" => p.analytic_period = num(v)?,
            "goal_xy_tol" => p.goal_xy_tol = auto(v)?,
            "goal_theta_tol" => p.goal_theta_tol = auto(v)?,
            "steer_change_penalty" => p.steer_change_penalty = num(v)?,
            "reverse_penalty" => p.reverse_penalty = num(v)?,
            "score_w_curvature" => p.score_w_curvature = num(v)?,
            "score_w_clearance" => p.score_w_clearance = num(v)?,

            "wheelbase" => veh.wheelbase = num(v)?,
            "delta_max" => veh.delta_max = num(v)?,
            "v_max" => veh.v_max = num(v)?,
            "v_min" => veh.v_min = num(v)?,
            "footprint_length" => veh.footprint_length = num(v)?,
            "footprint_width" => veh.footprint_width = num(v)?,
            "rear_axle_offset" => veh.rear_axle_offset = num(v)?,

            "gamma" => s.gamma = num(v)?,
            "tau" => s.tau = num(v)?,
            "alpha" => s.alpha = num(v)?,
            "lr" => s.lr = num(v)?,
            "batch_size" => s.batch_size = num(v)?,
            "buffer_capacity" => s.buffer_capacity = num(v)?,
            "warmup_steps" => s.warmup_steps = num(v)?,
            "updates_per_step" => s.updates_per_step = num(v)?,
            "step_reward_scale" => s.step_reward_scale = num(v)?,
            "n_rollout_workers" => s.n_rollout_workers = num(v)?,
            "hidden_units" => s.hidden_units = num(v)?,

            "start" => {
                let f = floats(v, 3)?;
                e.start = Some(RobotState::new(f[0], f[1], f[2]));
            }
            "goal" => {
                let f = floats(v, 2)?;
                e.goal = Some((f[0], f[1]));
            }
            "goal_radius" => e.goal_radius = num(v)?,
            "dt" => e.dt = num(v)?,
            "max_steps" => e.max_steps = num(v)?,
            "n_beams" => e.n_beams = num(v)?,
            "beam_max_range" => e.beam_max_range = num(v)?,
            "start_jitter" => e.start_jitter = num(v)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Every key, in a form [`Config::parse`] reads back to the same value.
    pub fn to_text(&self) -> String {
        let (p, veh, e) = (&self.planner, &self.vehicle, &self.env);
        let mut s = String::new();
        let _ = write!(
            s,
            "theta_bins = {}\nsteering_samples = {}\narc_length = {}\nallow_reverse = {}\n\
             expansion_budget = {}\nk_paths = {}\nanalytic_period = {}\ngoal_xy_tol = {}\n\
             goal_theta_tol = {}\nsteer_change_penalty = {}\nreverse_penalty = {}\n\
             score_w_curvature = {}\nscore_w_clearance = {}\n",
            p.theta_bins,
            p.steering_samples,
            fmt_auto(p.arc_length),
            p.allow_reverse,
            p.expansion_budget,
            p.k_paths,
            p.analytic_period,
            fmt_auto(p.goal_xy_tol),
            fmt_auto(p.goal_theta_tol),
            p.steer_change_penalty,
            p.reverse_penalty,
            p.score_w_curvature,
            p.score_w_clearance
        );
        let _ = write!(
            s,
            "wheelbase = {}\ndelta_max = {}\nv_max = {}\nv_min = {}\nfootprint_length = {}\n\
             footprint_width = {}\nrear_axle_offset = {}\n",
            veh.wheelbase,
            veh.delta_max,
            veh.v_max,
            veh.v_min,
            veh.footprint_length,
            veh.footprint_width,
            veh.rear_axle_offset
        );
        s.push_str(&self.sac.to_kv());
        if let Some(st) = e.start {
            let _ = writeln!(s, "start = {},{},{}", st.x, st.y, st.theta);
        }
        if let Some((x, y)) = e.goal {
            let _ = writeln!(s, "goal = {x},{y}");
        }
        let _ = write!(
            s,
            "goal_radius = {}\ndt = {}\nmax_steps = {}\nn_beams = {}\nbeam_max_range = {}\nstart_jitter = {}\n",
            e.goal_radius, e.dt, e.max_steps, e.n_beams, e.beam_max_range, e.start_jitter
        );
        s
    }

    /// Environment on `grid`; start and goal must be set.
    pub fn env_config(&self, grid: OccupancyGrid) -> Result<EnvConfig> {
        let e = &self.env;
        let (start, goal) = match (e.start, e.goal) {
            (Some(s), Some(g)) => (s, g),
            _ => return Err(Error::InvalidInput("config must set both `start` and `goal`".into())),
        };
        let cfg = EnvConfig {
            grid,
            vehicle: self.vehicle,
            start,
            goal,
            goal_radius: e.goal_radius,
            dt: e.dt,
            max_steps: e.max_steps,
            n_beams: e.n_beams,
            beam_max_range: e.beam_max_range,
            start_jitter: e.start_jitter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
