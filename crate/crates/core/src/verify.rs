//! Independent kinematic audit of a scheduled motion.
//!
//! Cartesian acceleration and jerk are rebuilt from the Frenet
//! decomposition along the path, then every configured bound is checked.

use serde::Serialize;

use crate::limits::{KinematicLimits, SchedulerMode};
use crate::path::PhSplinePath;
use crate::scheduler::FeedrateProfile;

/// Default audit samples per sampling period.
pub const DEFAULT_AUDIT_GRID: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KinematicSample {
    pub t: f64,
    pub segment: usize,
    pub xi: f64,
    pub v: f64,
    pub vdot: f64,
    pub vddot: f64,
    pub kappa: f64,
    pub w: f64,
    /// `a = v̇ t − v²κ n`.
    pub a: [f64; 2],
    /// `j = (v̈ − v³κ²) t − (3vv̇κ + v³w) n`.
    pub j: [f64; 2],
    pub jerk_tangential: f64,
    pub jerk_normal: f64,
    /// `None` where the chord would exceed the osculating circle's diameter.
    pub chord_model: Option<f64>,
    /// Within a rounding distance of an interior spline knot, where `w`
    /// jumps.
    pub at_knot: bool,
}

/// Kinematics along the motion at `per_dt` samples per sampling period,
/// plus the terminal instant.
pub fn sample_kinematics(
    path: &PhSplinePath,
    profile: &FeedrateProfile,
    limits: &KinematicLimits,
    per_dt: usize,
) -> Vec<KinematicSample> {
    let h = limits.sample_dt / per_dt.max(1) as f64;
    let total = profile.total_time();
    let mut times: Vec<f64> = (0..).map(|i| i as f64 * h).take_while(|&t| t < total).collect();
    times.push(total);
    times.into_iter().map(|t| kinematics_at(path, profile, limits, t)).collect()
}

/// Kinematic state at one instant.
pub fn kinematics_at(path: &PhSplinePath, profile: &FeedrateProfile, limits: &KinematicLimits, t: f64) -> KinematicSample {
    let total_length = path.total_length();
    let ell = profile.displacement(t).clamp(0.0, total_length);
    let (segment, xi) = path
        .locate_by_arclength(ell)
        .expect("displacement clamped to the path length");
    let frame = path.segment(segment).frame(xi);
    let (v, vdot, vddot) = profile.state(t);
    let (kappa, w) = (frame.kappa, frame.w);
    let (tn, nn) = (frame.tangent, frame.normal);
    let a_t = vdot;
    let a_n = -v * v * kappa;
    let jerk_tangential = vddot - v * v * v * kappa * kappa;
    let jerk_normal = -(3.0 * v * vdot * kappa + v * v * v * w);
    let knot_tol = 1e-9 * total_length;
    let at_knot = path
        .cumulative_lengths()
        .iter()
        .take(path.len() - 1)
        .any(|&c| (ell - c).abs() <= knot_tol);
    KinematicSample {
        t,
        segment,
        xi,
        v,
        vdot,
        vddot,
        kappa,
        w,
        a: [a_t * tn[0] + a_n * nn[0], a_t * tn[1] + a_n * nn[1]],
        j: [
            jerk_tangential * tn[0] + jerk_normal * nn[0],
            jerk_tangential * tn[1] + jerk_normal * nn[1],
        ],
        jerk_tangential,
        jerk_normal,
        chord_model: limits.chord_error(kappa, v).ok(),
        at_knot,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Pass,
    /// Over the bound in a strict mode.
    Fail,
    /// Over the bound in a relaxed mode, which does not guarantee it.
    Exceeded,
    /// The mode does not control this quantity.
    Unclaimed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub name: String,
    pub bound: f64,
    pub max_observed: f64,
    pub at_time: f64,
    /// Largest value seen at spline knots, which are excluded from the
    /// verdict for jerk rows.
    pub max_at_knots: f64,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub mode: String,
    pub samples: usize,
    pub rows: Vec<AuditRow>,
    pub passed: bool,
}

impl AuditReport {
    pub fn row(&self, name: &str) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Fail)
    }
}

struct Check<'a> {
    name: &'a str,
    bound: f64,
    rel_tol: f64,
    claimed: bool,
    skip_knots: bool,
    value: fn(&KinematicSample) -> f64,
}

/// Checks every bound over the samples. Strict modes fail on any violation
/// of a quantity they control; relaxed modes only report.
pub fn audit_bounds(samples: &[KinematicSample], limits: &KinematicLimits, mode: SchedulerMode) -> AuditReport {
    let level = mode.level.index();
    let checks = [
        Check { name: "feedrate", bound: limits.v_max, rel_tol: 1e-12, claimed: true, skip_knots: false, value: |s| s.v },
        Check { name: "vdot", bound: limits.a_tan(), rel_tol: 1e-9, claimed: true, skip_knots: false, value: |s| s.vdot.abs() },
        Check {
            name: "vddot",
            bound: limits.ramp_jerk(mode.level),
            rel_tol: 1e-9,
            claimed: true,
            skip_knots: false,
            value: |s| s.vddot.abs(),
        },
        Check { name: "ax", bound: limits.a_max, rel_tol: 1e-9, claimed: true, skip_knots: false, value: |s| s.a[0].abs() },
        Check { name: "ay", bound: limits.a_max, rel_tol: 1e-9, claimed: true, skip_knots: false, value: |s| s.a[1].abs() },
        Check {
            name: "jerk_tangential",
            bound: limits.p_j * limits.j_max,
            rel_tol: 1e-9,
            claimed: level >= 1,
            skip_knots: true,
            value: |s| s.jerk_tangential.abs(),
        },
        Check { name: "jx", bound: limits.j_max, rel_tol: 1e-6, claimed: level >= 2, skip_knots: true, value: |s| s.j[0].abs() },
        Check { name: "jy", bound: limits.j_max, rel_tol: 1e-6, claimed: level >= 2, skip_knots: true, value: |s| s.j[1].abs() },
        Check {
            name: "chord",
            bound: limits.chord_tol,
            rel_tol: 1e-9,
            claimed: true,
            skip_knots: false,
            value: |s| s.chord_model.unwrap_or(f64::INFINITY),
        },
    ];
    let rows: Vec<AuditRow> = checks
        .iter()
        .map(|c| {
            let mut max_observed = 0.0f64;
            let mut at_time = 0.0;
            let mut max_at_knots = 0.0f64;
            for s in samples {
                let x = (c.value)(s);
                if c.skip_knots && s.at_knot {
                    max_at_knots = max_at_knots.max(x);
                } else if x > max_observed || x.is_nan() {
                    max_observed = x;
                    at_time = s.t;
                }
            }
            let within = max_observed <= c.bound * (1.0 + c.rel_tol);
            let status = match (c.claimed, within, mode.is_strict()) {
                (false, _, _) => RowStatus::Unclaimed,
                (true, true, _) => RowStatus::Pass,
                (true, false, true) => RowStatus::Fail,
                (true, false, false) => RowStatus::Exceeded,
            };
            AuditRow { name: c.name.to_string(), bound: c.bound, max_observed, at_time, max_at_knots, status }
        })
        .collect();
    let passed = rows.iter().all(|r| r.status != RowStatus::Fail);
    AuditReport { mode: mode.to_string(), samples: samples.len(), rows, passed }
}
