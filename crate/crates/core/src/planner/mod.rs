//! Hybrid A* over `(x, y, theta)` with one-way and two-way search.
//!
//! Nodes carry continuous poses reached by short constant-control arcs and
//! are deduplicated on a discrete `(x-cell, y-cell, heading-bin)` lattice.
//! Neither search stops at its first solution: both keep collecting candidate
//! paths until `k_paths` are found, the expansion budget runs out, or the
//! frontier empties, then rank the candidates with [`score_path`].

pub mod curves;
mod path;
mod search;

use serde::{Deserialize, Serialize};

pub use path::{path_cost, score_path, validate_path, Path, PathViolation};
pub use search::{analytic_expansion, expand, heuristic, plan_oneway, plan_twoway, PlanNode};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminatedBy {
    BudgetExhausted,
    CandidatesFull,
    FrontierEmpty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub theta_bins: usize,
    /// Odd, so straight-ahead is always a primitive.
    pub steering_samples: usize,
    /// Primitive arc length in meters; `None` means sqrt(2) grid cells.
    pub arc_length: Option<f64>,
    pub allow_reverse: bool,
    pub expansion_budget: usize,
    pub k_paths: usize,
    pub analytic_period: usize,
    /// `None` means one grid cell.
    pub goal_xy_tol: Option<f64>,
    /// `None` means one heading bin.
    pub goal_theta_tol: Option<f64>,
    pub steer_change_penalty: f64,
    pub reverse_penalty: f64,
    pub score_w_curvature: f64,
    pub score_w_clearance: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            theta_bins: 72,
            steering_samples: 5,
            arc_length: None,
            allow_reverse: false,
            expansion_budget: 100_000,
            k_paths: 5,
            analytic_period: 20,
            goal_xy_tol: None,
            goal_theta_tol: None,
            steer_change_penalty: 0.05,
            reverse_penalty: 1.0,
            score_w_curvature: 0.1,
            score_w_clearance: 1.0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("planner params: {m}")));
        if self.theta_bins == 0 {
            return bad("theta_bins must be positive");
        }
        if self.steering_samples < 3 || self.steering_samples.is_multiple_of(2) {
            return bad("steering_samples must be odd and >= 3");
        }
        if let Some(a) = self.arc_length {
            if !(a > 0.0) || !a.is_finite() {
                return bad("arc_length must be positive");
            }
        }
        if self.expansion_budget == 0 || self.k_paths == 0 || self.analytic_period == 0 {
            return bad("expansion_budget, k_paths and analytic_period must be positive");
        }
        for (name, v) in [
            ("steer_change_penalty", self.steer_change_penalty),
            ("reverse_penalty", self.reverse_penalty),
            ("score_w_curvature", self.score_w_curvature),
            ("score_w_clearance", self.score_w_clearance),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        for tol in [self.goal_xy_tol, self.goal_theta_tol].into_iter().flatten() {
            if !(tol > 0.0) {
                return bad("goal tolerances must be positive");
            }
        }
        Ok(())
    }

    pub fn arc_length_for(&self, resolution: f64) -> f64 {
        self.arc_length.unwrap_or(std::f64::consts::SQRT_2 * resolution)
    }

    pub fn xy_tol_for(&self, resolution: f64) -> f64 {
        self.goal_xy_tol.unwrap_or(resolution)
    }

    pub fn theta_tol(&self) -> f64 {
        self.goal_theta_tol
            .unwrap_or(2.0 * std::f64::consts::PI / self.theta_bins as f64)
    }
}

/// Output of a planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub best: Option<Path>,
    /// Sorted by score ascending; ties keep discovery order.
    pub candidates: Vec<Path>,
    /// Node pops across all search trees.
    pub expansions: usize,
    pub elapsed: f64,
    pub terminated_by: TerminatedBy,
}
