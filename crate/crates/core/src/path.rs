//! Planar PH quintic spline paths.
//!
//! Each segment is generated by a pair of quadratic preimage polynomials
//! `u`, `v`: the hodograph is `(u² − v², 2uv)`, so the parametric speed
//! `σ = u² + v²` is itself a polynomial and arc length is exact.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinPoly;
use crate::error::{Error, Result};

/// Junctions whose end points differ by more than this are rejected (mm).
pub const CONTINUITY_TOL: f64 = 1e-9;

/// Default tangent-jump threshold for automatic breakpoint detection (rad).
pub const DEFAULT_ANGLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDocument {
    pub start: [f64; 2],
    pub u: [f64; 3],
    pub v: [f64; 3],
}

/// The on-disk path description: preimage Bernstein coefficients per
/// segment plus optional forced corners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDocument {
    pub segments: Vec<SegmentDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corners: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_tol_rad: Option<f64>,
}

impl PathDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// One PH quintic piece with all derived polynomials cached.
#[derive(Clone, Debug)]
pub struct PhQuinticSegment {
    start: [f64; 2],
    u: BernsteinPoly,
    v: BernsteinPoly,
    dx: BernsteinPoly,
    dy: BernsteinPoly,
    sigma: BernsteinPoly,
    dsigma: BernsteinPoly,
    arclen: BernsteinPoly,
    x: BernsteinPoly,
    y: BernsteinPoly,
    kappa_num: BernsteinPoly,
    kappa_rate_num: BernsteinPoly,
}

/// Frenet data at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameSample {
    pub xi: f64,
    pub position: [f64; 2],
    pub tangent: [f64; 2],
    /// Tangent rotated by −90°, i.e. `t × z`.
    pub normal: [f64; 2],
    pub sigma: f64,
    pub kappa: f64,
    /// Curvature derivative with respect to arc length.
    pub w: f64,
}

impl PhQuinticSegment {
    pub fn new(start: [f64; 2], u: [f64; 3], v: [f64; 3]) -> Self {
        let u = BernsteinPoly::new(u.to_vec());
        let v = BernsteinPoly::new(v.to_vec());
        let uu = u.product(&u);
        let vv = v.product(&v);
        let dx = uu.difference(&vv);
        let dy = u.product(&v).scale(2.0);
        let sigma = uu.sum(&vv);
        let dsigma = sigma.derivative();
        let arclen = sigma.antiderivative();
        let x = shift(&dx.antiderivative(), start[0]);
        let y = shift(&dy.antiderivative(), start[1]);
        // x'y'' − y'x'' = 2σ(uv' − u'v), so κ = 2(uv' − u'v)/σ²
        let kappa_num = u
            .product(&v.derivative())
            .difference(&u.derivative().product(&v))
            .scale(2.0);
        // κ' = (N'σ − 2Nσ')/σ³ and w = κ'/σ
        let kappa_rate_num = kappa_num
            .derivative()
            .product(&sigma)
            .difference(&kappa_num.product(&dsigma).scale(2.0));
        Self { start, u, v, dx, dy, sigma, dsigma, arclen, x, y, kappa_num, kappa_rate_num }
    }

    pub fn start_point(&self) -> [f64; 2] {
        self.start
    }

    pub fn end_point(&self) -> [f64; 2] {
        self.position(1.0)
    }

    pub fn preimage(&self) -> (&BernsteinPoly, &BernsteinPoly) {
        (&self.u, &self.v)
    }

    /// Hodograph components `(x', y')`.
    pub fn hodograph_polys(&self) -> (&BernsteinPoly, &BernsteinPoly) {
        (&self.dx, &self.dy)
    }

    pub fn sigma(&self) -> &BernsteinPoly {
        &self.sigma
    }

    pub fn arclength_poly(&self) -> &BernsteinPoly {
        &self.arclen
    }

    /// `N` with `κ = N / σ²`.
    pub fn curvature_numerator(&self) -> &BernsteinPoly {
        &self.kappa_num
    }

    /// `K` with `w = K / σ⁴`; its sign is the sign of `dκ/dξ`.
    pub fn curvature_rate_numerator(&self) -> &BernsteinPoly {
        &self.kappa_rate_num
    }

    pub fn length(&self) -> f64 {
        self.arclen.coeffs()[self.arclen.degree()]
    }

    pub fn position(&self, xi: f64) -> [f64; 2] {
        [self.x.eval(xi), self.y.eval(xi)]
    }

    pub fn hodograph(&self, xi: f64) -> [f64; 2] {
        [self.dx.eval(xi), self.dy.eval(xi)]
    }

    pub fn speed(&self, xi: f64) -> f64 {
        self.sigma.eval(xi)
    }

    pub fn arclength(&self, xi: f64) -> f64 {
        self.arclen.eval(xi)
    }

    pub fn curvature(&self, xi: f64) -> f64 {
        let s = self.sigma.eval(xi);
        self.kappa_num.eval(xi) / (s * s)
    }

    pub fn curvature_rate(&self, xi: f64) -> f64 {
        let s = self.sigma.eval(xi);
        let s2 = s * s;
        self.kappa_rate_num.eval(xi) / (s2 * s2)
    }

    /// Derivative of the parametric speed, `σ'`.
    pub fn speed_derivative(&self, xi: f64) -> f64 {
        self.dsigma.eval(xi)
    }

    pub fn unit_tangent(&self, xi: f64) -> [f64; 2] {
        let [dx, dy] = self.hodograph(xi);
        let s = dx.hypot(dy);
        [dx / s, dy / s]
    }

    pub fn frame(&self, xi: f64) -> FrameSample {
        let sigma = self.sigma.eval(xi);
        let tangent = self.unit_tangent(xi);
        FrameSample {
            xi,
            position: self.position(xi),
            tangent,
            normal: [tangent[1], -tangent[0]],
            sigma,
            kappa: self.curvature(xi),
            w: self.curvature_rate(xi),
        }
    }

    /// Smallest parametric speed on `[0, 1]`, from the end values and the
    /// stationary points of `σ`.
    pub fn min_speed(&self) -> f64 {
        let mut m = self.sigma.eval(0.0).min(self.sigma.eval(1.0));
        if let Ok(roots) = self.dsigma.find_roots(0.0, 1.0) {
            for r in roots {
                m = m.min(self.sigma.eval(r));
            }
        }
        m
    }

    /// Signed curvature range on `[0, 1]`.
    pub fn curvature_range(&self) -> (f64, f64) {
        let mut lo = self.curvature(0.0).min(self.curvature(1.0));
        let mut hi = self.curvature(0.0).max(self.curvature(1.0));
        if let Ok(roots) = self.kappa_rate_num.find_roots(0.0, 1.0) {
            for r in roots {
                let k = self.curvature(r);
                lo = lo.min(k);
                hi = hi.max(k);
            }
        }
        (lo, hi)
    }

    /// Parameter where the arc length from the segment start equals `target`,
    /// by Newton iteration safeguarded with a bisection bracket.
    pub fn invert_arclength(&self, target: f64, seed: f64) -> f64 {
        let len = self.length();
        if target <= 0.0 {
            return 0.0;
        }
        if target >= len {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut xi = seed.clamp(0.0, 1.0);
        for _ in 0..200 {
            let f = self.arclen.eval(xi) - target;
            if f == 0.0 {
                return xi;
            }
            if f > 0.0 {
                hi = hi.min(xi);
            } else {
                lo = lo.max(xi);
            }
            let mut next = xi - f / self.sigma.eval(xi);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - xi).abs() <= 2.0 * f64::EPSILON || hi - lo <= 2.0 * f64::EPSILON {
                return next;
            }
            xi = next;
        }
        xi
    }

    fn scaled(&self, factor: f64) -> Self {
        let root = factor.sqrt();
        let arr = |p: &BernsteinPoly| {
            let c = p.coeffs();
            [c[0] * root, c[1] * root, c[2] * root]
        };
        Self::new([self.start[0] * factor, self.start[1] * factor], arr(&self.u), arr(&self.v))
    }
}

fn shift(p: &BernsteinPoly, offset: f64) -> BernsteinPoly {
    BernsteinPoly::new(p.coeffs().iter().map(|c| c + offset).collect())
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot)
}

/// An ordered PH spline. Junction `k` joins segment `k − 1` to segment `k`;
/// junction `0` is the path start and junction `n` the path end.
#[derive(Clone, Debug)]
pub struct PhSplinePath {
    segments: Vec<PhQuinticSegment>,
    cumulative_lengths: Vec<f64>,
    breakpoints: Vec<usize>,
}

impl PhSplinePath {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::load(&PathDocument::from_json(text)?)
    }

    pub fn load(doc: &PathDocument) -> Result<Self> {
        if doc.segments.is_empty() {
            return Err(Error::InvalidDocument("path has no segments".into()));
        }
        for (i, s) in doc.segments.iter().enumerate() {
            let all = s.start.iter().chain(&s.u).chain(&s.v);
            if all.into_iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidDocument(format!("segment {i} has non-finite data")));
            }
        }
        let angle_tol = doc.angle_tol_rad.unwrap_or(DEFAULT_ANGLE_TOL);
        if !(angle_tol.is_finite() && angle_tol >= 0.0) {
            return Err(Error::InvalidDocument(format!("angle_tol_rad {angle_tol} invalid")));
        }
        let n = doc.segments.len();
        for &c in &doc.corners {
            if c > n {
                return Err(Error::InvalidDocument(format!(
                    "corner index {c} outside junction range 0..={n}"
                )));
            }
        }
        let segments: Vec<PhQuinticSegment> = doc
            .segments
            .iter()
            .map(|s| PhQuinticSegment::new(s.start, s.u, s.v))
            .collect();
        Self::from_segments(segments, &doc.corners, angle_tol)
    }

    pub fn from_segments(
        segments: Vec<PhQuinticSegment>,
        corners: &[usize],
        angle_tol: f64,
    ) -> Result<Self> {
        let n = segments.len();
        for (index, seg) in segments.iter().enumerate() {
            let scale = seg.sigma.magnitude();
            if !(seg.min_speed() > 1e-14 * scale) || scale == 0.0 {
                return Err(Error::IrregularSegment { index });
            }
        }
        let mut breakpoints = vec![0, n];
        for k in 1..n {
            let a = segments[k - 1].end_point();
            let b = segments[k].start_point();
            let gap = (a[0] - b[0]).hypot(a[1] - b[1]);
            if !(gap <= CONTINUITY_TOL) {
                return Err(Error::DiscontinuousPath { junction: k, gap });
            }
            let jump = angle_between(segments[k - 1].unit_tangent(1.0), segments[k].unit_tangent(0.0));
            if jump > angle_tol {
                breakpoints.push(k);
            }
        }
        breakpoints.extend(corners.iter().copied().filter(|&c| c <= n));
        breakpoints.sort_unstable();
        breakpoints.dedup();
        let mut cumulative_lengths = Vec::with_capacity(n);
        let mut acc = 0.0;
        for seg in &segments {
            acc += seg.length();
            cumulative_lengths.push(acc);
        }
        Ok(Self { segments, cumulative_lengths, breakpoints })
    }

    pub fn segments(&self) -> &[PhQuinticSegment] {
        &self.segments
    }

    pub fn segment(&self, index: usize) -> &PhQuinticSegment {
        &self.segments[index]
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn cumulative_lengths(&self) -> &[f64] {
        &self.cumulative_lengths
    }

    /// Junction indices where motion halts, including both path ends.
    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative_lengths.last().expect("path is non-empty")
    }

    /// Arc length at the start of a segment.
    pub fn segment_offset(&self, index: usize) -> f64 {
        if index == 0 {
            0.0
        } else {
            self.cumulative_lengths[index - 1]
        }
    }

    /// Ranges of segment indices between consecutive breakpoints.
    pub fn motion_segments(&self) -> Vec<Range<usize>> {
        self.breakpoints.windows(2).map(|w| w[0]..w[1]).collect()
    }

    fn check(&self, index: usize, xi: f64) -> Result<()> {
        if index >= self.segments.len() {
            return Err(Error::Domain(format!(
                "segment index {index} out of range ({} segments)",
                self.segments.len()
            )));
        }
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Domain(format!("xi = {xi} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn arc_length(&self, index: usize, xi: f64) -> Result<f64> {
        self.check(index, xi)?;
        if xi == 1.0 {
            return Ok(self.cumulative_lengths[index]);
        }
        Ok(self.segment_offset(index) + self.segments[index].arclength(xi))
    }

    pub fn frame_at(&self, index: usize, xi: f64) -> Result<FrameSample> {
        self.check(index, xi)?;
        Ok(self.segments[index].frame(xi))
    }

    pub fn position(&self, index: usize, xi: f64) -> Result<[f64; 2]> {
        self.check(index, xi)?;
        Ok(self.segments[index].position(xi))
    }

    /// Segment index and parameter at arc length `ell` from the path start.
    pub fn locate_by_arclength(&self, ell: f64) -> Result<(usize, f64)> {
        let total = self.total_length();
        if !(0.0..=total).contains(&ell) {
            return Err(Error::Domain(format!("arc length {ell} outside [0, {total}]")));
        }
        let last = self.segments.len() - 1;
        if ell == total {
            return Ok((last, 1.0));
        }
        let index = self
            .cumulative_lengths
            .partition_point(|&c| c < ell)
            .min(last);
        let residual = ell - self.segment_offset(index);
        let seg = &self.segments[index];
        let seed = (residual / seg.length()).clamp(0.0, 1.0);
        Ok((index, seg.invert_arclength(residual, seed)))
    }

    /// The same path scaled about the origin by `factor` (preimages scale by
    /// `√factor`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let segs = self.segments.iter().map(|s| s.scaled(factor)).collect();
        let interior: Vec<usize> = self.breakpoints.clone();
        Self::from_segments(segs, &interior, DEFAULT_ANGLE_TOL)
    }

    /// Signed curvature range over the whole path.
    pub fn curvature_range(&self) -> (f64, f64) {
        self.segments
            .iter()
            .map(PhQuinticSegment::curvature_range)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }
}
