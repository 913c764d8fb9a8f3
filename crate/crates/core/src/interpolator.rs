//! Uniformly timed reference points from a feedrate profile.
//!
//! At each sampling instant the path parameter solves `s(ξ) = F(t)`, where
//! `s` is the exact arc length and `F` the distance travelled. Newton's
//! method is seeded with the previous parameter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits::KinematicLimits;
use crate::path::PhSplinePath;
use crate::scheduler::FeedrateProfile;

const MAX_NEWTON: usize = 50;

/// Newton stops once the arc-length residual is below this fraction of the
/// total path length.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferencePoint {
    pub k: usize,
    pub t: f64,
    pub segment: usize,
    pub xi: f64,
    pub position: [f64; 2],
    pub feedrate: f64,
    /// Osculating-circle chord error; `None` where the chord would exceed
    /// the circle's diameter.
    pub chord_error: Option<f64>,
    pub newton_iterations: usize,
}

/// Solves `s_j(ξ) = residual` on piece `j` from `seed`, returning the
/// parameter and the number of Newton steps taken.
fn newton(path: &PhSplinePath, j: usize, residual: f64, seed: f64, tol: f64) -> (f64, usize) {
    let seg = path.segment(j);
    let mut xi = seed;
    for it in 0..MAX_NEWTON {
        let f = seg.arclength(xi) - residual;
        if f.abs() <= tol {
            return (xi, it);
        }
        xi = (xi - f / seg.speed(xi)).clamp(0.0, 1.0);
    }
    if (seg.arclength(xi) - residual).abs() <= tol {
        return (xi, MAX_NEWTON);
    }
    (seg.invert_arclength(residual, xi), MAX_NEWTON)
}

/// Reference points at `t_k = k·Δt` plus a terminal sample at `T`, which is
/// pinned to the path end.
pub fn generate_reference_points(
    path: &PhSplinePath,
    profile: &FeedrateProfile,
    limits: &KinematicLimits,
) -> Result<Vec<ReferencePoint>> {
    let dt = limits.sample_dt;
    let total_time = profile.total_time();
    let total_length = path.total_length();
    let tol = RESIDUAL_TOL * total_length;
    let cumulative = path.cumulative_lengths();
    let last_piece = path.len() - 1;

    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= total_time {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(total_time);

    let mut points = Vec::with_capacity(times.len());
    let mut j = 0usize;
    let mut xi = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let target = profile.displacement(t).clamp(0.0, total_length);
        while j < last_piece && target > cumulative[j] {
            j += 1;
            xi = 0.0;
        }
        let terminal = k + 1 == times.len();
        if terminal {
            j = last_piece;
        }
        let residual = target - path.segment_offset(j);
        let (solved, iterations) = if terminal { (1.0, 0) } else { newton(path, j, residual, xi, tol) };
        let seg = path.segment(j);
        if !terminal && !((seg.arclength(solved) - residual).abs() <= 10.0 * tol) {
            return Err(Error::NonConvergence { index: k });
        }
        xi = solved;
        let feedrate = profile.feedrate(t);
        points.push(ReferencePoint {
            k,
            t,
            segment: j,
            xi,
            position: seg.position(xi),
            feedrate,
            chord_error: limits.chord_error(seg.curvature(xi), feedrate).ok(),
            newton_iterations: iterations,
        });
    }
    Ok(points)
}

/// Chord error at each reference point from the local curvature and the
/// distance covered in one sampling period.
pub fn chord_error_series(points: &[ReferencePoint], path: &PhSplinePath, limits: &KinematicLimits) -> Vec<Option<f64>> {
    points
        .iter()
        .map(|p| {
            let kappa = path.segment(p.segment).curvature(p.xi);
            limits.chord_error(kappa, p.feedrate).ok()
        })
        .collect()
}
