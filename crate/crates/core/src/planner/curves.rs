//! Shortest bounded-curvature curves between two poses.
//!
//! Dubins curves (forward only, six words) and a Reeds-Shepp solver covering
//! the CSC, CCC, CCCC, CCSC and CCSCC families with their time-flip,
//! reflection and backwards variants. Every candidate word is integrated
//! analytically and kept only if it actually lands on the goal pose, so a
//! degenerate formula can never produce a wrong curve.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::kinematics::{angle_diff, RobotState};

const ZERO: f64 = 1e-10;
const ENDPOINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl Turn {
    /// +1 for left, -1 for right, 0 for straight.
    pub fn sign(self) -> f64 {
        match self {
            Turn::Left => 1.0,
            Turn::Straight => 0.0,
            Turn::Right => -1.0,
        }
    }
}

/// One piece of a curve: a turn direction and a signed length in meters
/// (negative lengths drive in reverse).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub turn: Turn,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub segments: Vec<Segment>,
    pub radius: f64,
}

impl Curve {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length.abs()).sum()
    }

    /// Exact endpoint of the curve when driven from `start`.
    pub fn endpoint(&self, start: &RobotState) -> RobotState {
        let mut s = *start;
        for seg in &self.segments {
            s = advance(s, seg, self.radius);
        }
        s
    }
}

/// Exact motion along one segment.
fn advance(s: RobotState, seg: &Segment, radius: f64) -> RobotState {
    match seg.turn {
        Turn::Straight => RobotState::new(
            s.x + seg.length * s.theta.cos(),
            s.y + seg.length * s.theta.sin(),
            s.theta,
        ),
        turn => {
            let k = turn.sign();
            let dphi = k * seg.length / radius;
            let th1 = s.theta + dphi;
            RobotState::new(
                s.x + k * radius * (th1.sin() - s.theta.sin()),
                s.y - k * radius * (th1.cos() - s.theta.cos()),
                th1,
            )
        }
    }
}

fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

fn reaches(curve: &Curve, start: &RobotState, goal: &RobotState) -> bool {
    let e = curve.endpoint(start);
    e.distance_to(goal) < ENDPOINT_TOL * curve.radius.max(1.0) && angle_diff(e.theta, goal.theta) < ENDPOINT_TOL
}

fn pick_shortest(cands: Vec<Curve>, start: &RobotState, goal: &RobotState) -> Option<Curve> {
    cands
        .into_iter()
        .filter(|c| c.segments.iter().all(|s| s.length.is_finite()) && reaches(c, start, goal))
        .min_by(|a, b| a.length().total_cmp(&b.length()))
}

/// Shortest forward-only Dubins curve from `start` to `goal` with minimum
/// turning radius `radius`.
pub fn dubins_shortest(start: &RobotState, goal: &RobotState, radius: f64) -> Option<Curve> {
    dubins_all(start, goal, radius).pop()
}

/// All feasible Dubins words, sorted by length (longest first).
pub fn dubins_all(start: &RobotState, goal: &RobotState, radius: f64) -> Vec<Curve> {
    use Turn::*;
    let dx = goal.x - start.x;
    let dy = goal.y - start.y;
    let d = dx.hypot(dy) / radius;
    let theta = if d > 0.0 { mod2pi(dy.atan2(dx)) } else { 0.0 };
    let a = mod2pi(start.theta - theta);
    let b = mod2pi(goal.theta - theta);
    let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
    let cab = (a - b).cos();

    let mut words: Vec<([Turn; 3], [f64; 3])> = Vec::with_capacity(6);
    // LSL
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
    if p2 >= 0.0 {
        let tmp = (cb - ca).atan2(d + sa - sb);
        words.push(([Left, Straight, Left], [mod2pi(-a + tmp), p2.sqrt(), mod2pi(b - tmp)]));
    }
    // RSR
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
    if p2 >= 0.0 {
        let tmp = (ca - cb).atan2(d - sa + sb);
        words.push(([Right, Straight, Right], [mod2pi(a - tmp), p2.sqrt(), mod2pi(-b + tmp)]));
    }
    // LSR
    let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
        words.push(([Left, Straight, Right], [mod2pi(-a + tmp), p, mod2pi(-b + tmp)]));
    }
    // RSL
    let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
        words.push(([Right, Straight, Left], [mod2pi(a - tmp), p, mod2pi(b - tmp)]));
    }
    // RLR
    let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
    if tmp.abs() <= 1.0 {
        let p = mod2pi(2.0 * PI - tmp.acos());
        let t = mod2pi(a - (ca - cb).atan2(d - sa + sb) + p / 2.0);
        words.push(([Right, Left, Right], [t, p, mod2pi(a - b - t + p)]));
    }
    // LRL
    let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
    if tmp.abs() <= 1.0 {
        let p = mod2pi(2.0 * PI - tmp.acos());
        let t = mod2pi(-a - (ca - cb).atan2(d + sa - sb) + p / 2.0);
        words.push(([Left, Right, Left], [t, p, mod2pi(b - a - t + p)]));
    }

    let mut out: Vec<Curve> = words
        .into_iter()
        .map(|(turns, lens)| Curve {
            segments: turns
                .iter()
                .zip(lens)
                .filter(|(_, l)| l.abs() > ZERO)
                .map(|(&turn, l)| Segment { turn, length: l * radius })
                .collect(),
            radius,
        })
        .filter(|c| reaches(c, start, goal))
        .collect();
    out.sort_by(|a, b| b.length().total_cmp(&a.length()));
    out
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi_signed(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi_signed(t1 + PI) } else { mod2pi_signed(t1) };
    let omega = mod2pi_signed(tau - u + v - phi);
    (tau, omega)
}

/// Wraps into `(-pi, pi]`, the convention the Reeds-Shepp formulas use.
fn mod2pi_signed(a: f64) -> f64 {
    let v = a.rem_euclid(2.0 * PI);
    if v > PI {
        v - 2.0 * PI
    } else {
        v
    }
}

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi_signed(phi - t);
        if v >= -ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2.0f64.atan2(u);
        let t = mod2pi_signed(t1 + theta);
        let v = mod2pi_signed(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (u1, theta) = polar(xi, eta);
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi_signed(theta + 0.5 * u + PI);
        let v = mod2pi_signed(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -FRAC_PI_2 {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some([t, u, v]);
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (rho, theta) = polar(xi, eta);
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi_signed(theta + r.atan2(-2.0));
        let v = mod2pi_signed(phi - FRAC_PI_2 - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi_signed(t + FRAC_PI_2 - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some([t, u, v]);
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<[f64; 3]> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi_signed(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi_signed(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some([t, u, v]);
            }
        }
    }
    None
}

/// Shortest Reeds-Shepp curve (forward and reverse motion allowed).
pub fn reeds_shepp_shortest(start: &RobotState, goal: &RobotState, radius: f64) -> Option<Curve> {
    use Turn::{Left as L, Right as R, Straight as S};
    let dx = goal.x - start.x;
    let dy = goal.y - start.y;
    let (s0, c0) = start.theta.sin_cos();
    let x = (c0 * dx + s0 * dy) / radius;
    let y = (-s0 * dx + c0 * dy) / radius;
    let phi = goal.theta - start.theta;

    let mut cands: Vec<Curve> = Vec::new();
    let mut push = |turns: &[Turn], lens: &[f64]| {
        let segments = turns
            .iter()
            .zip(lens)
            .filter(|(_, l)| l.abs() > ZERO)
            .map(|(&turn, &l)| Segment { turn, length: l * radius })
            .collect();
        cands.push(Curve { segments, radius });
    };

    // CSC
    if let Some([t, u, v]) = lp_sp_lp(x, y, phi) {
        push(&[L, S, L], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_sp_lp(-x, y, -phi) {
        push(&[L, S, L], &[-t, -u, -v]);
    }
    if let Some([t, u, v]) = lp_sp_lp(x, -y, -phi) {
        push(&[R, S, R], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_sp_lp(-x, -y, phi) {
        push(&[R, S, R], &[-t, -u, -v]);
    }
    if let Some([t, u, v]) = lp_sp_rp(x, y, phi) {
        push(&[L, S, R], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_sp_rp(-x, y, -phi) {
        push(&[L, S, R], &[-t, -u, -v]);
    }
    if let Some([t, u, v]) = lp_sp_rp(x, -y, -phi) {
        push(&[R, S, L], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_sp_rp(-x, -y, phi) {
        push(&[R, S, L], &[-t, -u, -v]);
    }

    // CCC
    if let Some([t, u, v]) = lp_rm_l(x, y, phi) {
        push(&[L, R, L], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_l(-x, y, -phi) {
        push(&[L, R, L], &[-t, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rm_l(x, -y, -phi) {
        push(&[R, L, R], &[t, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_l(-x, -y, phi) {
        push(&[R, L, R], &[-t, -u, -v]);
    }
    let (sp, cp) = phi.sin_cos();
    let xb = x * cp + y * sp;
    let yb = x * sp - y * cp;
    if let Some([t, u, v]) = lp_rm_l(xb, yb, phi) {
        push(&[L, R, L], &[v, u, t]);
    }
    if let Some([t, u, v]) = lp_rm_l(-xb, yb, -phi) {
        push(&[L, R, L], &[-v, -u, -t]);
    }
    if let Some([t, u, v]) = lp_rm_l(xb, -yb, -phi) {
        push(&[R, L, R], &[v, u, t]);
    }
    if let Some([t, u, v]) = lp_rm_l(-xb, -yb, phi) {
        push(&[R, L, R], &[-v, -u, -t]);
    }

    // CCCC
    if let Some([t, u, v]) = lp_rup_lum_rm(x, y, phi) {
        push(&[L, R, L, R], &[t, u, -u, v]);
    }
    if let Some([t, u, v]) = lp_rup_lum_rm(-x, y, -phi) {
        push(&[L, R, L, R], &[-t, -u, u, -v]);
    }
    if let Some([t, u, v]) = lp_rup_lum_rm(x, -y, -phi) {
        push(&[R, L, R, L], &[t, u, -u, v]);
    }
    if let Some([t, u, v]) = lp_rup_lum_rm(-x, -y, phi) {
        push(&[R, L, R, L], &[-t, -u, u, -v]);
    }
    if let Some([t, u, v]) = lp_rum_lum_rp(x, y, phi) {
        push(&[L, R, L, R], &[t, u, u, v]);
    }
    if let Some([t, u, v]) = lp_rum_lum_rp(-x, y, -phi) {
        push(&[L, R, L, R], &[-t, -u, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rum_lum_rp(x, -y, -phi) {
        push(&[R, L, R, L], &[t, u, u, v]);
    }
    if let Some([t, u, v]) = lp_rum_lum_rp(-x, -y, phi) {
        push(&[R, L, R, L], &[-t, -u, -u, -v]);
    }

    // CCSC
    let h = FRAC_PI_2;
    if let Some([t, u, v]) = lp_rm_sm_lm(x, y, phi) {
        push(&[L, R, S, L], &[t, -h, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(-x, y, -phi) {
        push(&[L, R, S, L], &[-t, h, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(x, -y, -phi) {
        push(&[R, L, S, R], &[t, -h, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(-x, -y, phi) {
        push(&[R, L, S, R], &[-t, h, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(x, y, phi) {
        push(&[L, R, S, R], &[t, -h, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(-x, y, -phi) {
        push(&[L, R, S, R], &[-t, h, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(x, -y, -phi) {
        push(&[R, L, S, L], &[t, -h, u, v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(-x, -y, phi) {
        push(&[R, L, S, L], &[-t, h, -u, -v]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(xb, yb, phi) {
        push(&[L, S, R, L], &[v, u, -h, t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(-xb, yb, -phi) {
        push(&[L, S, R, L], &[-v, -u, h, -t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(xb, -yb, -phi) {
        push(&[R, S, L, R], &[v, u, -h, t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_lm(-xb, -yb, phi) {
        push(&[R, S, L, R], &[-v, -u, h, -t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(xb, yb, phi) {
        push(&[R, S, R, L], &[v, u, -h, t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(-xb, yb, -phi) {
        push(&[R, S, R, L], &[-v, -u, h, -t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(xb, -yb, -phi) {
        push(&[L, S, L, R], &[v, u, -h, t]);
    }
    if let Some([t, u, v]) = lp_rm_sm_rm(-xb, -yb, phi) {
        push(&[L, S, L, R], &[-v, -u, h, -t]);
    }

    // CCSCC
    if let Some([t, u, v]) = lp_rm_s_lm_rp(x, y, phi) {
        push(&[L, R, S, L, R], &[t, -h, u, -h, v]);
    }
    if let Some([t, u, v]) = lp_rm_s_lm_rp(-x, y, -phi) {
        push(&[L, R, S, L, R], &[-t, h, -u, h, -v]);
    }
    if let Some([t, u, v]) = lp_rm_s_lm_rp(x, -y, -phi) {
        push(&[R, L, S, R, L], &[t, -h, u, -h, v]);
    }
    if let Some([t, u, v]) = lp_rm_s_lm_rp(-x, -y, phi) {
        push(&[R, L, S, R, L], &[-t, h, -u, h, -v]);
    }

    // Dubins words are Reeds-Shepp words too; including them guards against
    // any forward-only configuration the family formulas above miss.
    cands.extend(dubins_all(start, goal, radius));
    pick_shortest(cands, start, goal)
}
