//! Bicycle approximation of Ackermann steering and its explicit-Euler
//! propagation.
//!
//! The state is the rear-axle reference point `(x, y)` and heading `theta`.
//! Controls are rear-wheel speed `v` and front-wheel angle `delta`. The turn
//! rate is `v * tan(delta) / L`; the discrete update applies it for `dt`
//! after advancing the position along the *old* heading.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs.
    if r >= PI {
        r -= 2.0 * PI;
    }
    r
}

/// Smallest absolute difference between two headings, in `[0, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    pub fn distance_to(&self, other: &RobotState) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    /// Rear-wheel speed, m/s. Negative drives in reverse.
    pub v: f64,
    /// Front-wheel steering angle, rad.
    pub delta: f64,
}

impl Control {
    pub fn new(v: f64, delta: f64) -> Self {
        Self { v, delta }
    }
}

/// Geometry and actuation limits of the vehicle.
///
/// The footprint is a rectangle aligned with the heading. Its rear edge sits
/// `rear_axle_offset` behind the rear axle; it extends `footprint_length`
/// forward from there and `footprint_width / 2` to either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub delta_max: f64,
    pub v_max: f64,
    pub v_min: f64,
    pub footprint_length: f64,
    pub footprint_width: f64,
    pub rear_axle_offset: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.5,
            delta_max: 0.6,
            v_max: 1.0,
            v_min: 0.0,
            footprint_length: 0.6,
            footprint_width: 0.4,
            rear_axle_offset: 0.05,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.wheelbase > 0.0
            && self.wheelbase.is_finite()
            && self.delta_max > 0.0
            && self.delta_max < PI / 2.0
            && self.v_max > 0.0
            && self.v_max.is_finite()
            && self.v_min >= 0.0
            && self.v_min <= self.v_max
            && self.footprint_length > 0.0
            && self.footprint_width > 0.0
            && self.footprint_length.is_finite()
            && self.footprint_width.is_finite()
            && self.rear_axle_offset.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid vehicle parameters {self:?}")))
        }
    }

    /// Radius of the smallest circle about the rear axle that contains the
    /// whole footprint.
    pub fn circumscribed_radius(&self) -> f64 {
        let front = self.footprint_length - self.rear_axle_offset;
        let along = front.abs().max(self.rear_axle_offset.abs());
        along.hypot(self.footprint_width / 2.0)
    }

    /// Radius of the largest circle about the rear axle that fits inside the
    /// footprint (zero if the axle lies outside it).
    pub fn inscribed_radius(&self) -> f64 {
        let front = self.footprint_length - self.rear_axle_offset;
        front
            .min(self.rear_axle_offset)
            .min(self.footprint_width / 2.0)
            .max(0.0)
    }

    pub fn min_turning_radius(&self) -> f64 {
        1.0 / max_curvature(self)
    }
}

/// Turn rate `v * tan(delta) / L`.
#[inline]
pub fn yaw_rate(control: Control, params: &VehicleParams) -> f64 {
    control.v * control.delta.tan() / params.wheelbase
}

/// One explicit-Euler step. Callers in hot loops that have already validated
/// their inputs use this directly.
#[inline]
pub fn step_unchecked(state: RobotState, control: Control, dt: f64, params: &VehicleParams) -> RobotState {
    let (s, c) = state.theta.sin_cos();
    RobotState {
        x: state.x + control.v * c * dt,
        y: state.y + control.v * s * dt,
        theta: normalize_angle(state.theta + yaw_rate(control, params) * dt),
    }
}

/// Exact inverse of [`step_unchecked`]: returns the state `p` such that
/// `step_unchecked(p, control, dt)` lands on `state` (up to rounding).
#[inline]
pub fn step_inverse(state: RobotState, control: Control, dt: f64, params: &VehicleParams) -> RobotState {
    let theta = normalize_angle(state.theta - yaw_rate(control, params) * dt);
    let (s, c) = theta.sin_cos();
    RobotState {
        x: state.x - control.v * c * dt,
        y: state.y - control.v * s * dt,
        theta,
    }
}

/// Advances `state` by one Euler step of length `dt`.
pub fn step(state: RobotState, control: Control, dt: f64, params: &VehicleParams) -> Result<RobotState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    if !state.is_finite() || !control.v.is_finite() || !control.delta.is_finite() {
        return Err(Error::InvalidInput("non-finite state or control".into()));
    }
    if control.delta.abs() >= PI / 2.0 {
        return Err(Error::InvalidInput(format!(
            "steering angle {} outside (-pi/2, pi/2)",
            control.delta
        )));
    }
    params.validate()?;
    Ok(step_unchecked(state, control, dt, params))
}

/// Applies each `(control, duration)` segment in turn and returns every
/// intermediate state (the initial state excluded).
///
/// A duration that is not an integer multiple of `dt` ends with one shorter
/// step covering the remainder, so the total integrated time is exact.
pub fn rollout(
    state: RobotState,
    controls: &[(Control, f64)],
    params: &VehicleParams,
    dt: f64,
) -> Result<Vec<RobotState>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let mut out = Vec::new();
    let mut s = state;
    for &(control, duration) in controls {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidInput(format!(
                "segment duration must be positive, got {duration}"
            )));
        }
        for h in substeps(duration, dt) {
            s = step(s, control, h, params)?;
            out.push(s);
        }
    }
    Ok(out)
}

/// Splits `duration` into full `dt` steps plus an optional remainder step.
pub(crate) fn substeps(duration: f64, dt: f64) -> impl Iterator<Item = f64> {
    let ratio = duration / dt;
    let full = (ratio + 1e-9).floor() as usize;
    let rem = duration - full as f64 * dt;
    let tail = if rem > 1e-9 * duration.max(1.0) { Some(rem) } else { None };
    std::iter::repeat_n(dt, full).chain(tail)
}

/// Largest path curvature the vehicle can follow: `tan(delta_max) / L`.
pub fn max_curvature(params: &VehicleParams) -> f64 {
    params.delta_max.tan() / params.wheelbase
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vp(l: f64) -> VehicleParams {
        VehicleParams {
            wheelbase: l,
            ..VehicleParams::default()
        }
    }

    #[test]
    fn zero_speed_freezes_state() {
        let s = step(RobotState::new(0.0, 0.0, 0.0), Control::new(0.0, 0.3), 0.1, &vp(0.5)).unwrap();
        assert_eq!(s, RobotState::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn straight_step() {
        let s = step(RobotState::new(0.0, 0.0, 0.0), Control::new(1.0, 0.0), 0.1, &vp(0.5)).unwrap();
        assert_abs_diff_eq!(s.x, 0.1, epsilon = 1e-15);
        assert_eq!(s.y, 0.0);
        assert_eq!(s.theta, 0.0);
    }

    #[test]
    fn turning_step_uses_old_heading() {
        let s = step(
            RobotState::new(0.0, 0.0, 0.0),
            Control::new(1.0, 0.5f64.atan()),
            0.1,
            &vp(0.5),
        )
        .unwrap();
        assert_abs_diff_eq!(s.x, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.theta, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn step_rejects_bad_inputs() {
        let s = RobotState::new(0.0, 0.0, 0.0);
        let p = vp(0.5);
        assert!(step(s, Control::new(1.0, 0.0), 0.0, &p).is_err());
        assert!(step(s, Control::new(1.0, 0.0), -0.1, &p).is_err());
        assert!(step(s, Control::new(f64::NAN, 0.0), 0.1, &p).is_err());
        assert!(step(s, Control::new(1.0, PI / 2.0), 0.1, &p).is_err());
        let bad = RobotState { x: f64::INFINITY, y: 0.0, theta: 0.0 };
        assert!(step(bad, Control::new(1.0, 0.0), 0.1, &p).is_err());
    }

    #[test]
    fn rollout_straight_segment() {
        let out = rollout(
            RobotState::new(0.0, 0.0, 0.0),
            &[(Control::new(1.0, 0.0), 1.0)],
            &vp(0.5),
            0.1,
        )
        .unwrap();
        assert_eq!(out.len(), 10);
        let last = out.last().unwrap();
        assert_abs_diff_eq!(last.x, 1.0, epsilon = 1e-12);
        assert_eq!(last.y, 0.0);
    }

    #[test]
    fn rollout_empty_and_invalid() {
        let s = RobotState::new(0.0, 0.0, 0.0);
        assert!(rollout(s, &[], &vp(0.5), 0.1).unwrap().is_empty());
        assert!(rollout(s, &[(Control::new(1.0, 0.0), 0.0)], &vp(0.5), 0.1).is_err());
        assert!(rollout(s, &[(Control::new(1.0, 0.0), -1.0)], &vp(0.5), 0.1).is_err());
    }

    #[test]
    fn rollout_remainder_step() {
        let out = rollout(
            RobotState::new(0.0, 0.0, 0.0),
            &[(Control::new(1.0, 0.0), 0.25)],
            &vp(0.5),
            0.1,
        )
        .unwrap();
        assert_eq!(out.len(), 3);
        assert_abs_diff_eq!(out[2].x, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn euler_error_is_first_order_on_an_arc() {
        // unit curvature, one second: the exact pose is (sin 1, 1 - cos 1)
        let err = |dt: f64| {
            let out = rollout(
                RobotState::new(0.0, 0.0, 0.0),
                &[(Control::new(1.0, 0.5f64.atan()), 1.0)],
                &vp(0.5),
                dt,
            )
            .unwrap();
            let e = out.last().unwrap();
            (e.x - 1f64.sin()).hypot(e.y - (1.0 - 1f64.cos()))
        };
        let (a, b) = (err(1e-2), err(5e-3));
        assert!(a > 1e-4);
        assert!((b / a - 0.5).abs() < 0.02, "ratio {}", b / a);
    }

    #[test]
    fn max_curvature_examples() {
        let p = VehicleParams {
            wheelbase: 0.5,
            delta_max: 0.5f64.atan(),
            ..VehicleParams::default()
        };
        assert_abs_diff_eq!(max_curvature(&p), 1.0, epsilon = 1e-12);
        let p = VehicleParams {
            wheelbase: 1.0,
            delta_max: PI / 4.0,
            ..VehicleParams::default()
        };
        assert_abs_diff_eq!(max_curvature(&p), 1.0, epsilon = 1e-12);
        let p = VehicleParams {
            delta_max: 1e-9,
            ..VehicleParams::default()
        };
        assert!(max_curvature(&p) < 1e-8);
    }

    #[test]
    fn inverse_step_undoes_step() {
        let p = VehicleParams::default();
        let s = RobotState::new(1.0, -2.0, 3.0);
        let c = Control::new(0.7, -0.4);
        let back = step_inverse(step_unchecked(s, c, 0.05, &p), c, 0.05, &p);
        assert_abs_diff_eq!(back.x, s.x, epsilon = 1e-14);
        assert_abs_diff_eq!(back.y, s.y, epsilon = 1e-14);
        assert_abs_diff_eq!(back.theta, s.theta, epsilon = 1e-14);
    }

    #[test]
    fn normalize_edges() {
        assert_eq!(normalize_angle(PI), -PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert!(normalize_angle(-1e-18) < PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn heading_stays_normalized(
                x in -100.0..100.0f64, y in -100.0..100.0f64, th in -50.0..50.0f64,
                v in -5.0..5.0f64, d in -1.5..1.5f64, dt in 1e-4..2.0f64,
            ) {
                let s = step(RobotState { x, y, theta: th }, Control::new(v, d), dt, &VehicleParams::default()).unwrap();
                prop_assert!(s.theta >= -PI && s.theta < PI);
            }

            #[test]
            fn turn_rate_bounded(
                th in -PI..PI, vf in 0.0..1.0f64, df in -1.0..1.0f64, dt in 1e-3..0.5f64,
            ) {
                let p = VehicleParams::default();
                let c = Control::new(vf * p.v_max, df * p.delta_max);
                let raw = th + yaw_rate(c, &p) * dt;
                let bound = p.v_max * p.delta_max.tan() / p.wheelbase * dt;
                prop_assert!((raw - th).abs() <= bound + 1e-12);
                let s = step_unchecked(RobotState::new(0.0, 0.0, th), c, dt, &p);
                prop_assert!(angle_diff(s.theta, raw) < 1e-9);
            }

            #[test]
            fn straight_line_is_exact(
                x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI,
                v in 0.1..2.0f64, n in 1usize..50,
            ) {
                let p = VehicleParams::default();
                let dt = 0.1;
                let t = n as f64 * dt;
                let out = rollout(RobotState::new(x, y, th), &[(Control::new(v, 0.0), t)], &p, dt).unwrap();
                let last = out.last().unwrap();
                let ex = x + v * t * th.cos();
                let ey = y + v * t * th.sin();
                prop_assert!((last.x - ex).abs() <= 1e-12 * ex.abs().max(1.0));
                prop_assert!((last.y - ey).abs() <= 1e-12 * ey.abs().max(1.0));
                prop_assert_eq!(last.theta, RobotState::new(0.0, 0.0, th).theta);
            }

            #[test]
            fn straight_reversal_returns_exactly(
                x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI, v in 0.1..2.0f64,
            ) {
                let p = VehicleParams::default();
                let s0 = RobotState::new(x, y, th);
                let s1 = step_unchecked(s0, Control::new(v, 0.0), 0.1, &p);
                let s2 = step_unchecked(s1, Control::new(-v, 0.0), 0.1, &p);
                prop_assert!((s2.x - x).abs() < 1e-12 && (s2.y - y).abs() < 1e-12);
            }
        }
    }
}
