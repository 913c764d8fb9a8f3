//! Feedrate scheduling: per-block trapezoids with C² quintic ramps.
//!
//! Each halting segment is split into blocks. Feedrates are fixed at the
//! special points between blocks, lowered where a block is too short to
//! connect its end speeds, and every block then gets an accelerate, cruise,
//! decelerate profile whose ramps are quintic Bernstein polynomials with
//! threefold end coefficients, so `v̇` and `v̈` vanish at every join.

use std::ops::Range;

use serde::Serialize;

use crate::bernstein::BernsteinPoly;
use crate::blocks::{build_blocks, find_special_points, CurveBlock, SpecialPoint, DEFAULT_GRID_DENSITY};
use crate::error::{Error, Result};
use crate::limits::{JerkLevel, KinematicLimits, SchedulerMode, Strategy};
use crate::path::PhSplinePath;

const MAX_SWEEPS: usize = 200;
const SCAN_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Acc,
    Const,
    Dec,
    Dwell,
}

/// One quintic piece of the feedrate in local time `τ = (t − t_start)/duration`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePiece {
    pub t_start: f64,
    pub duration: f64,
    pub kind: PieceKind,
    pub poly: BernsteinPoly,
    /// Global block index; `None` for dwell markers.
    pub block: Option<usize>,
    /// Halting segment this piece belongs to.
    pub segment: usize,
    /// Displacement at `t_start`.
    pub f_start: f64,
}

impl ProfilePiece {
    fn displacement_poly(&self) -> BernsteinPoly {
        self.poly.antiderivative().scale(self.duration)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }

    /// `(v, v̇, v̈)` at local parameter `tau`.
    pub fn state_at(&self, tau: f64) -> (f64, f64, f64) {
        let d1 = self.poly.derivative();
        let d2 = d1.derivative();
        let t = self.duration;
        (self.poly.eval(tau), d1.eval(tau) / t, d2.eval(tau) / (t * t))
    }

    /// Displacement covered by the whole piece.
    pub fn length(&self) -> f64 {
        self.duration * self.poly.integral()
    }
}

/// The global C² piecewise-quintic feedrate `v(t)` on one clock.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedrateProfile {
    pieces: Vec<ProfilePiece>,
    /// Start time of each halting segment.
    segment_starts: Vec<f64>,
    total_time: f64,
    total_length: f64,
    /// Indices of pieces with positive duration, for time lookup.
    timed: Vec<usize>,
}

impl FeedrateProfile {
    pub fn pieces(&self) -> &[ProfilePiece] {
        &self.pieces
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// `F(T)`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn segment_starts(&self) -> &[f64] {
        &self.segment_starts
    }

    /// Index of the timed piece containing `t`; joins resolve to the later
    /// piece.
    pub fn piece_index(&self, t: f64) -> Option<usize> {
        if self.timed.is_empty() {
            return None;
        }
        let pos = self
            .timed
            .partition_point(|&i| self.pieces[i].t_start <= t)
            .saturating_sub(1);
        Some(self.timed[pos])
    }

    fn local(&self, t: f64) -> Option<(&ProfilePiece, f64)> {
        let piece = &self.pieces[self.piece_index(t)?];
        let tau = ((t - piece.t_start) / piece.duration).clamp(0.0, 1.0);
        Some((piece, tau))
    }

    /// `(v, v̇, v̈)` at time `t`, clamped to `[0, T]`.
    pub fn state(&self, t: f64) -> (f64, f64, f64) {
        self.local(t).map_or((0.0, 0.0, 0.0), |(p, tau)| p.state_at(tau))
    }

    pub fn feedrate(&self, t: f64) -> f64 {
        self.local(t).map_or(0.0, |(p, tau)| p.poly.eval(tau))
    }

    /// Distance travelled by time `t`.
    pub fn displacement(&self, t: f64) -> f64 {
        if t >= self.total_time {
            return self.total_length;
        }
        self.local(t).map_or(0.0, |(p, tau)| p.f_start + p.displacement_poly().eval(tau))
    }

    /// Differences of `(v, v̇, v̈)` across every join between consecutive
    /// timed pieces, computed from the end coefficients.
    pub fn join_mismatches(&self) -> Vec<(f64, f64, f64)> {
        self.timed
            .windows(2)
            .map(|w| {
                let a = self.pieces[w[0]].state_at(1.0);
                let b = self.pieces[w[1]].state_at(0.0);
                (b.0 - a.0, b.1 - a.1, b.2 - a.2)
            })
            .collect()
    }

    /// Exact maxima of `v`, `|v̇|`, `|v̈|` over all pieces, from the end
    /// values and the stationary points of each derivative.
    pub fn derivative_extrema(&self) -> (f64, f64, f64) {
        fn max_abs(p: &BernsteinPoly) -> f64 {
            let mut m = p.eval(0.0).abs().max(p.eval(1.0).abs());
            if let Ok(roots) = p.derivative().find_roots(0.0, 1.0) {
                for r in roots {
                    m = m.max(p.eval(r).abs());
                }
            }
            m
        }
        let mut out = (0.0f64, 0.0f64, 0.0f64);
        for &i in &self.timed {
            let p = &self.pieces[i];
            let d1 = p.poly.derivative();
            let d2 = d1.derivative();
            out.0 = out.0.max(max_abs(&p.poly));
            out.1 = out.1.max(max_abs(&d1) / p.duration);
            out.2 = out.2.max(max_abs(&d2) / (p.duration * p.duration));
        }
        out
    }
}

/// A complete schedule for one mode.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub mode: SchedulerMode,
    pub kappa_cr: f64,
    pub special_points: Vec<SpecialPoint>,
    pub blocks: Vec<CurveBlock>,
    /// Block index range of each halting segment.
    pub segment_blocks: Vec<Range<usize>>,
    /// Duration of each halting segment, dwell excluded.
    pub segment_times: Vec<f64>,
    pub profile: FeedrateProfile,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleOptions {
    /// Grid samples per spline piece for maximum statistics.
    pub grid_density: usize,
    /// Settle time inserted at interior breakpoints (s).
    pub dwell: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self { grid_density: DEFAULT_GRID_DENSITY, dwell: 0.0 }
    }
}

/// Minimal quintic ramp duration for a speed change `dv ≥ 0`.
fn ramp_time(limits: &KinematicLimits, level: JerkLevel, dv: f64) -> f64 {
    if dv <= 0.0 {
        return 0.0;
    }
    let by_acc = 15.0 * dv / (8.0 * limits.a_tan());
    let by_jerk = (10.0 * dv / (3f64.sqrt() * limits.ramp_jerk(level))).sqrt();
    by_acc.max(by_jerk)
}

/// Shortest ramp from `v_from` up to `v_to` keeping `|v̇| ≤ A_t` and `|v̈|`
/// within the ramp jerk of the mode.
pub fn phase_times(limits: &KinematicLimits, mode: SchedulerMode, v_from: f64, v_to: f64) -> Result<f64> {
    if !(v_to >= v_from && v_from >= 0.0) {
        return Err(Error::Domain(format!("phase from {v_from} to {v_to} is not an acceleration")));
    }
    Ok(ramp_time(limits, mode.level, v_to - v_from))
}

/// Twice the distance covered by ramping from `v_start` up to `x` and back
/// down to `v_end`.
pub fn compatibility_g(limits: &KinematicLimits, mode: SchedulerMode, v_start: f64, v_end: f64, x: f64) -> f64 {
    let level = mode.level;
    ramp_time(limits, level, (x - v_start).abs()) * (v_start + x)
        + ramp_time(limits, level, (x - v_end).abs()) * (v_end + x)
}

/// The length check for a block joining speeds `a` and `b`.
fn connect_cost(limits: &KinematicLimits, level: JerkLevel, a: f64, b: f64) -> f64 {
    ramp_time(limits, level, (a - b).abs()) * (a + b)
}

/// Bound-derived cruise caps from the block statistics.
pub fn init_block_caps(blocks: &mut [CurveBlock], limits: &KinematicLimits, mode: SchedulerMode) {
    for b in blocks {
        b.v_cap_bound = limits.velocity_bound(mode.level, b.kappa_stat, b.w_stat);
        b.v_cap = b.v_cap_bound;
    }
}

/// Initial feedrates at the special points of one halting segment. Caps must
/// already be set.
pub fn init_special_point_feedrates(blocks: &mut [CurveBlock], limits: &KinematicLimits, mode: SchedulerMode) {
    let m = blocks.len();
    if m == 0 {
        return;
    }
    blocks[0].v_start = 0.0;
    blocks[m - 1].v_end = 0.0;
    for i in 1..m {
        let neighbours = blocks[i - 1].v_cap_bound.min(blocks[i].v_cap_bound);
        let v = match mode.strategy {
            Strategy::Relaxed => {
                let kappa = blocks[i].start.kappa;
                let at_point = match mode.level {
                    JerkLevel::Acceleration => limits.acceleration_only_bound(kappa),
                    _ => limits.tangential_jerk_level_bound(kappa),
                };
                at_point.cap(limits.v_max).min(neighbours)
            }
            Strategy::Strict => neighbours,
        };
        blocks[i - 1].v_end = v;
        blocks[i].v_start = v;
    }
}

/// Largest `x ∈ [lo, hi]` with `ok(x)`, given `ok(lo)` and a predicate that
/// flips once on the interval.
fn bisect_largest(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Lowers feedrates at the special points of one halting segment until
/// every block can connect its end speeds, staying as close as possible to
/// the initial values. Returns whether anything changed.
///
/// Starting from the initial values, violated blocks repeatedly lower their
/// larger end speed (forward and backward passes). A coordinate sweep then
/// raises each interior speed to the largest value that keeps both adjacent
/// blocks feasible, until no speed moves by more than `1e-12·V_m`.
pub fn repair_feedrates(blocks: &mut [CurveBlock], limits: &KinematicLimits, mode: SchedulerMode) -> Result<bool> {
    let m = blocks.len();
    if m == 0 {
        return Ok(false);
    }
    for (i, b) in blocks.iter().enumerate() {
        if !(b.length > 0.0) {
            return Err(Error::DegenerateBlock { block: i });
        }
    }
    let level = mode.level;
    let room: Vec<f64> = blocks.iter().map(|b| 2.0 * b.length).collect();
    let mut target = Vec::with_capacity(m + 1);
    target.push(0.0);
    target.extend(blocks.iter().map(|b| b.v_end));
    target[m] = 0.0;
    let feasible = |v: &[f64], i: usize| connect_cost(limits, level, v[i], v[i + 1]) <= room[i];
    if (0..m).all(|i| feasible(&target, i)) {
        return Ok(false);
    }

    let mut v = target.clone();
    let mut settled = false;
    for _ in 0..MAX_SWEEPS {
        let order: Vec<usize> = (0..m).chain((0..m).rev()).collect();
        let mut changed = false;
        for &i in &order {
            if feasible(&v, i) {
                continue;
            }
            // lower the larger end; block ends at 0 never need lowering
            let (hi_idx, lo_idx) = if v[i] >= v[i + 1] { (i, i + 1) } else { (i + 1, i) };
            let floor = v[lo_idx];
            let cap = v[hi_idx];
            v[hi_idx] = bisect_largest(floor, cap, |x| connect_cost(limits, level, x, floor) <= room[i]);
            changed = true;
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled || (0..m).any(|i| !feasible(&v, i)) {
        log::warn!("descending repair did not settle; falling back to a uniform interior speed");
        let interior_cap = target[1..m].iter().copied().fold(limits.v_max, f64::min);
        let c = bisect_largest(0.0, interior_cap, |x| {
            connect_cost(limits, level, 0.0, x) <= room[0] && connect_cost(limits, level, x, 0.0) <= room[m - 1]
        });
        for x in &mut v[1..m] {
            *x = c;
        }
    }

    // coordinate ascent towards the initial values
    let tol = 1e-12 * limits.v_max;
    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for i in 1..m {
            let (left, right) = (v[i - 1], v[i + 1]);
            let ok = |x: f64| {
                connect_cost(limits, level, left, x) <= room[i - 1] && connect_cost(limits, level, x, right) <= room[i]
            };
            let current = v[i];
            let top = target[i];
            if top <= current {
                continue;
            }
            // scan down from the top for the highest feasible sample, then
            // refine its upper boundary
            let mut best = current;
            let mut above = top;
            for k in 0..=SCAN_POINTS {
                let x = top - (top - current) * k as f64 / SCAN_POINTS as f64;
                if ok(x) {
                    best = x;
                    break;
                }
                above = x;
            }
            if best < top {
                best = bisect_largest(best, above, ok);
            }
            moved = moved.max(best - current);
            v[i] = best;
        }
        if moved <= tol {
            break;
        }
    }

    if (0..m).any(|i| !feasible(&v, i)) {
        let block = (0..m).find(|&i| !feasible(&v, i)).unwrap_or(0);
        return Err(Error::DegenerateBlock { block });
    }
    for i in 0..m {
        blocks[i].v_start = v[i];
        blocks[i].v_end = v[i + 1];
    }
    Ok(true)
}

/// Fixes the cruise speed and phase durations of one block whose end speeds
/// are already compatible with its length.
pub fn solve_block_cap(block: &mut CurveBlock, limits: &KinematicLimits, mode: SchedulerMode, index: usize) -> Result<()> {
    let s = block.length;
    if !(s > 0.0) {
        return Err(Error::DegenerateBlock { block: index });
    }
    let (a, b) = (block.v_start, block.v_end);
    let floor = a.max(b);
    let room = 2.0 * s;
    let g = |x: f64| compatibility_g(limits, mode, a, b, x);
    if g(floor) > room * (1.0 + 1e-12) {
        return Err(Error::RepairNotApplied { block: index });
    }
    let cap = block.v_cap_bound.max(floor);
    let vc = if g(cap) <= room {
        cap
    } else {
        bisect_largest(floor, cap, |x| g(x) <= room)
    };
    if !(vc > 0.0) {
        return Err(Error::DegenerateBlock { block: index });
    }
    block.v_cap = vc;
    block.t_acc = ramp_time(limits, mode.level, vc - a);
    block.t_dec = ramp_time(limits, mode.level, vc - b);
    block.t_con = ((s - 0.5 * g(vc)) / vc).max(0.0);
    Ok(())
}

fn ramp(from: f64, to: f64) -> BernsteinPoly {
    BernsteinPoly::new(vec![from, from, from, to, to, to])
}

/// Concatenates block trapezoids into one profile. Halting segments are
/// separated by dwell pieces of the given duration (zero-length markers by
/// default).
pub fn assemble_profile(blocks: &[CurveBlock], segments: &[Range<usize>], dwell: f64) -> FeedrateProfile {
    let mut pieces = Vec::new();
    let mut segment_starts = Vec::with_capacity(segments.len());
    let mut t = 0.0;
    let mut f = 0.0;
    let push = |pieces: &mut Vec<ProfilePiece>, kind, duration: f64, poly: BernsteinPoly, block, segment, t: &mut f64, f: &mut f64| {
        let piece = ProfilePiece { t_start: *t, duration, kind, poly, block, segment, f_start: *f };
        *t += duration;
        *f += piece.length();
        pieces.push(piece);
    };
    for (seg_index, range) in segments.iter().enumerate() {
        if seg_index > 0 {
            push(&mut pieces, PieceKind::Dwell, dwell, BernsteinPoly::zero(5), None, seg_index - 1, &mut t, &mut f);
        }
        segment_starts.push(t);
        for bi in range.clone() {
            let b = &blocks[bi];
            if b.t_acc > 0.0 {
                push(&mut pieces, PieceKind::Acc, b.t_acc, ramp(b.v_start, b.v_cap), Some(bi), seg_index, &mut t, &mut f);
            }
            if b.t_con > 0.0 {
                push(&mut pieces, PieceKind::Const, b.t_con, BernsteinPoly::new(vec![b.v_cap; 6]), Some(bi), seg_index, &mut t, &mut f);
            }
            if b.t_dec > 0.0 {
                push(&mut pieces, PieceKind::Dec, b.t_dec, ramp(b.v_cap, b.v_end), Some(bi), seg_index, &mut t, &mut f);
            }
        }
    }
    let timed = (0..pieces.len()).filter(|&i| pieces[i].duration > 0.0).collect();
    FeedrateProfile { pieces, segment_starts, total_time: t, total_length: f, timed }
}

/// Runs the whole pipeline for one mode.
pub fn schedule(
    path: &PhSplinePath,
    limits: &KinematicLimits,
    mode: SchedulerMode,
    options: &ScheduleOptions,
) -> Result<Schedule> {
    if !(options.dwell >= 0.0 && options.dwell.is_finite()) {
        return Err(Error::Domain(format!("dwell {} must be a non-negative time", options.dwell)));
    }
    let mut special_points = Vec::new();
    let mut blocks = Vec::new();
    let mut segment_blocks = Vec::new();
    for range in path.motion_segments() {
        let points = find_special_points(path, range, limits, mode);
        let mut seg_blocks = build_blocks(path, &points, mode, options.grid_density);
        init_block_caps(&mut seg_blocks, limits, mode);
        init_special_point_feedrates(&mut seg_blocks, limits, mode);
        repair_feedrates(&mut seg_blocks, limits, mode)?;
        let offset = blocks.len();
        for (i, b) in seg_blocks.iter_mut().enumerate() {
            solve_block_cap(b, limits, mode, offset + i)?;
        }
        segment_blocks.push(offset..offset + seg_blocks.len());
        special_points.extend(points);
        blocks.extend(seg_blocks);
    }
    let segment_times = segment_blocks
        .iter()
        .map(|r| blocks[r.clone()].iter().map(CurveBlock::duration).sum())
        .collect();
    let profile = assemble_profile(&blocks, &segment_blocks, options.dwell);
    Ok(Schedule {
        mode,
        kappa_cr: limits.critical_curvature(mode.level),
        special_points,
        blocks,
        segment_blocks,
        segment_times,
        profile,
    })
}
