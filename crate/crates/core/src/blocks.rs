//! Splitting halting segments into curve blocks and measuring them.
//!
//! Special points come from exact polynomial roots: relaxed modes split at
//! local maxima of `|κ|` above the critical curvature, strict modes where
//! `|κ|` crosses it.

use std::ops::Range;

use serde::Serialize;

use crate::bernstein::BernsteinPoly;
use crate::limits::{KinematicLimits, SchedulerMode, Strategy};
use crate::path::{PhQuinticSegment, PhSplinePath};
use crate::quadrature;

/// Special points closer than this in arc length are merged (mm).
pub const MERGE_TOL: f64 = 1e-10;

/// Roots this close to a piece end are handled by the junction logic.
const EDGE: f64 = 1e-12;

/// Default number of grid samples per spline piece for maximum statistics.
pub const DEFAULT_GRID_DENSITY: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialPointKind {
    Critical,
    Crossing,
    Endpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpecialPoint {
    pub kind: SpecialPointKind,
    pub segment: usize,
    pub xi: f64,
    pub arclength: f64,
    /// Signed curvature here; at a knot, the one-sided value of larger
    /// magnitude.
    pub kappa: f64,
}

/// One scheduling unit between consecutive special points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveBlock {
    pub start: SpecialPoint,
    pub end: SpecialPoint,
    pub length: f64,
    /// Mean (relaxed) or maximum (strict) of `|κ|` over the block.
    pub kappa_stat: f64,
    /// Mean (relaxed) or maximum (strict) of `|w|` over the block.
    pub w_stat: f64,
    pub v_start: f64,
    pub v_end: f64,
    /// Bound-derived cap before the length check.
    pub v_cap_bound: f64,
    /// Cruise feedrate actually reached.
    pub v_cap: f64,
    pub t_acc: f64,
    pub t_con: f64,
    pub t_dec: f64,
}

impl CurveBlock {
    pub fn duration(&self) -> f64 {
        self.t_acc + self.t_con + self.t_dec
    }
}

/// Sign changes of `f` at the given cut points inside `(0, 1)`.
///
/// Returns the cut positions with the signs of `f` on the intervals to
/// either side, plus the signs on the first and last interval.
struct SignPattern {
    events: Vec<(f64, f64, f64)>,
    first: f64,
    last: f64,
}

fn sign_pattern(mut cuts: Vec<f64>, f: impl Fn(f64) -> f64) -> SignPattern {
    cuts.retain(|&c| c > EDGE && c < 1.0 - EDGE);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= EDGE);
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0.0);
    bounds.extend(&cuts);
    bounds.push(1.0);
    let signs: Vec<f64> = bounds
        .windows(2)
        .map(|w| sign(f(0.5 * (w[0] + w[1]))))
        .collect();
    let events = cuts
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, signs[i], signs[i + 1]))
        .collect();
    SignPattern { events, first: signs[0], last: *signs.last().expect("at least one interval") }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn roots_or_empty(p: &BernsteinPoly) -> Vec<f64> {
    p.find_roots(0.0, 1.0).unwrap_or_default()
}

/// Sign of `d|κ|/dξ` on a piece, with cuts at the roots of `K` and `N`.
fn abs_curvature_slope(seg: &PhQuinticSegment) -> SignPattern {
    let n = seg.curvature_numerator();
    let k = seg.curvature_rate_numerator();
    let mut cuts = roots_or_empty(k);
    cuts.extend(roots_or_empty(n));
    sign_pattern(cuts, |x| sign(n.eval(x)) * k.eval(x))
}

/// Sign of `|κ| − κ_cr` on a piece, with cuts at the roots of `N ∓ κ_cr σ²`.
fn excess_curvature(seg: &PhQuinticSegment, kappa_cr: f64) -> SignPattern {
    let n = seg.curvature_numerator();
    let s2 = seg.sigma().product(seg.sigma()).scale(kappa_cr);
    let mut cuts = roots_or_empty(&n.difference(&s2));
    cuts.extend(roots_or_empty(&n.sum(&s2)));
    sign_pattern(cuts, |x| seg.curvature(x).abs() - kappa_cr)
}

fn larger_magnitude(a: f64, b: f64) -> f64 {
    if b.abs() > a.abs() {
        b
    } else {
        a
    }
}

/// Special points of one halting segment, endpoints included, ordered along
/// the path.
pub fn find_special_points(
    path: &PhSplinePath,
    range: Range<usize>,
    limits: &KinematicLimits,
    mode: SchedulerMode,
) -> Vec<SpecialPoint> {
    assert!(range.start < range.end && range.end <= path.len(), "empty segment range");
    let kappa_cr = limits.critical_curvature(mode.level);
    let threshold = kappa_cr * (1.0 - 1e-12);
    let point = |kind, segment: usize, xi: f64, kappa: f64| SpecialPoint {
        kind,
        segment,
        xi,
        arclength: path.segment_offset(segment) + path.segment(segment).arclength(xi),
        kappa,
    };

    let first = range.start;
    let last = range.end - 1;
    let mut points = vec![point(
        SpecialPointKind::Endpoint,
        first,
        0.0,
        path.segment(first).curvature(0.0),
    )];
    let mut previous_last_sign = None;
    for k in range.clone() {
        let seg = path.segment(k);
        let pattern = match mode.strategy {
            Strategy::Relaxed => abs_curvature_slope(seg),
            Strategy::Strict => excess_curvature(seg, kappa_cr),
        };
        if let Some(left) = previous_last_sign {
            // interior knot between pieces k-1 and k
            let kappa = larger_magnitude(path.segment(k - 1).curvature(1.0), seg.curvature(0.0));
            let hit = match mode.strategy {
                Strategy::Relaxed => left > 0.0 && pattern.first < 0.0 && kappa.abs() >= threshold,
                Strategy::Strict => left * pattern.first < 0.0,
            };
            if hit {
                let kind = match mode.strategy {
                    Strategy::Relaxed => SpecialPointKind::Critical,
                    Strategy::Strict => SpecialPointKind::Crossing,
                };
                points.push(point(kind, k, 0.0, kappa));
            }
        }
        for &(xi, left, right) in &pattern.events {
            let kappa = seg.curvature(xi);
            match mode.strategy {
                Strategy::Relaxed => {
                    if left > 0.0 && right < 0.0 && kappa.abs() >= threshold {
                        points.push(point(SpecialPointKind::Critical, k, xi, kappa));
                    }
                }
                Strategy::Strict => {
                    if left * right < 0.0 {
                        points.push(point(SpecialPointKind::Crossing, k, xi, kappa));
                    }
                }
            }
        }
        previous_last_sign = Some(pattern.last);
    }
    points.push(point(SpecialPointKind::Endpoint, last, 1.0, path.segment(last).curvature(1.0)));
    merge_close(points)
}

fn merge_close(points: Vec<SpecialPoint>) -> Vec<SpecialPoint> {
    let mut out: Vec<SpecialPoint> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some(q) if (p.arclength - q.arclength).abs() <= MERGE_TOL => {
                if p.kind == SpecialPointKind::Endpoint {
                    *q = p;
                } else if q.kind != SpecialPointKind::Endpoint && p.kappa.abs() > q.kappa.abs() {
                    q.kappa = p.kappa;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

/// The pieces and parameter sub-ranges a block covers.
fn spans(a: &SpecialPoint, b: &SpecialPoint) -> Vec<(usize, f64, f64)> {
    (a.segment..=b.segment)
        .filter_map(|k| {
            let lo = if k == a.segment { a.xi } else { 0.0 };
            let hi = if k == b.segment { b.xi } else { 1.0 };
            (hi > lo).then_some((k, lo, hi))
        })
        .collect()
}

/// Integral of `f` over `[lo, hi]` split at the given cuts.
fn integrate_split(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, cuts: &[f64]) -> f64 {
    let mut edges = vec![lo];
    edges.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    edges.push(hi);
    edges
        .windows(2)
        .map(|w| {
            let crude = quadrature::integrate(f, w[0], w[1], f64::INFINITY).abs();
            quadrature::integrate(f, w[0], w[1], 1e-13 * crude.max(f64::MIN_POSITIVE))
        })
        .sum()
}

/// Arc-length means of `|κ|` and `|w|` over the span.
fn mean_stats(path: &PhSplinePath, a: &SpecialPoint, b: &SpecialPoint, length: f64) -> (f64, f64) {
    let mut kappa_int = 0.0;
    let mut w_int = 0.0;
    for (k, lo, hi) in spans(a, b) {
        let seg = path.segment(k);
        let n = seg.curvature_numerator();
        let kk = seg.curvature_rate_numerator();
        // |κ| ds = |N|/σ dξ and |w| ds = |dκ/dξ| dξ = |K|/σ³ dξ
        let fk = |x: f64| n.eval(x).abs() / seg.speed(x);
        let fw = |x: f64| {
            let s = seg.speed(x);
            kk.eval(x).abs() / (s * s * s)
        };
        kappa_int += integrate_split(&fk, lo, hi, &roots_or_empty(n));
        w_int += integrate_split(&fw, lo, hi, &roots_or_empty(kk));
    }
    (kappa_int / length, w_int / length)
}

/// Maxima of `|κ|` and `|w|` over the span, from a grid plus the exact
/// stationary points and sub-range ends.
fn max_stats(path: &PhSplinePath, a: &SpecialPoint, b: &SpecialPoint, grid: usize) -> (f64, f64) {
    let mut kmax = 0.0f64;
    let mut wmax = 0.0f64;
    for (k, lo, hi) in spans(a, b) {
        let seg = path.segment(k);
        let kk = seg.curvature_rate_numerator();
        // d(K/σ⁴)/dξ has numerator K'σ − 4Kσ'
        let w_slope = kk
            .derivative()
            .product(seg.sigma())
            .difference(&kk.product(&seg.sigma().derivative()).scale(4.0));
        let mut candidates = vec![lo, hi];
        let steps = grid.max(1);
        candidates.extend((1..steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64));
        let inside = |r: &f64| *r >= lo && *r <= hi;
        let kappa_candidates: Vec<f64> = roots_or_empty(kk).into_iter().filter(inside).collect();
        let w_candidates: Vec<f64> = roots_or_empty(&w_slope).into_iter().filter(inside).collect();
        for &x in candidates.iter().chain(&kappa_candidates) {
            kmax = kmax.max(seg.curvature(x).abs());
        }
        for &x in candidates.iter().chain(&w_candidates) {
            wmax = wmax.max(seg.curvature_rate(x).abs());
        }
    }
    (kmax, wmax)
}

/// Blocks between consecutive special points with their curvature
/// statistics. Feedrate fields are left at zero for the scheduler.
pub fn build_blocks(
    path: &PhSplinePath,
    points: &[SpecialPoint],
    mode: SchedulerMode,
    grid_density: usize,
) -> Vec<CurveBlock> {
    let mut blocks = Vec::with_capacity(points.len().saturating_sub(1));
    for pair in points.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let length = b.arclength - a.arclength;
        if !(length > MERGE_TOL) {
            log::warn!(
                "dropping zero-length block at segment {} xi {:.6} (S = {length:e})",
                a.segment,
                a.xi
            );
            continue;
        }
        let (kappa_stat, w_stat) = match mode.strategy {
            Strategy::Relaxed => mean_stats(path, a, b, length),
            Strategy::Strict => max_stats(path, a, b, grid_density),
        };
        blocks.push(CurveBlock {
            start: *a,
            end: *b,
            length,
            kappa_stat,
            w_stat,
            v_start: 0.0,
            v_end: 0.0,
            v_cap_bound: 0.0,
            v_cap: 0.0,
            t_acc: 0.0,
            t_con: 0.0,
            t_dec: 0.0,
        });
    }
    // Merged-away blocks leave a gap; stitch neighbours so the chain stays
    // contiguous.
    for i in 1..blocks.len() {
        if blocks[i].start != blocks[i - 1].end {
            let end = blocks[i - 1].end;
            blocks[i].length = blocks[i].end.arclength - end.arclength;
            blocks[i].start = end;
        }
    }
    blocks
}
