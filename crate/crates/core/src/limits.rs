//! Constraint configuration and the curvature-dependent feedrate bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feedrate ceiling that may be absent.
///
/// `Unbounded` takes part in minimum combinations but is never written out
/// as a number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpeedBound {
    Unbounded,
    Finite(f64),
}

impl SpeedBound {
    pub fn min(self, other: SpeedBound) -> SpeedBound {
        match (self, other) {
            (SpeedBound::Unbounded, b) | (b, SpeedBound::Unbounded) => b,
            (SpeedBound::Finite(a), SpeedBound::Finite(b)) => SpeedBound::Finite(a.min(b)),
        }
    }

    /// Resolves against a hard ceiling.
    pub fn cap(self, ceiling: f64) -> f64 {
        match self {
            SpeedBound::Unbounded => ceiling,
            SpeedBound::Finite(v) => v.min(ceiling),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            SpeedBound::Unbounded => None,
            SpeedBound::Finite(v) => Some(v),
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, SpeedBound::Unbounded)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Block bounds from mean curvature statistics, split at critical points.
    Relaxed,
    /// Block bounds from maximum curvature statistics, split at crossings.
    Strict,
}

/// How much of the jerk vector the scheduler controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JerkLevel {
    /// Chord error and acceleration only.
    Acceleration = 0,
    /// Adds the tangential jerk bounds.
    TangentialJerk = 1,
    /// Adds the centripetal jerk bound.
    FullJerk = 2,
}

impl JerkLevel {
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn controls_jerk(self) -> bool {
        self != JerkLevel::Acceleration
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchedulerMode {
    pub strategy: Strategy,
    pub level: JerkLevel,
}

impl SchedulerMode {
    pub const R0: Self = Self::new(Strategy::Relaxed, JerkLevel::Acceleration);
    pub const R1: Self = Self::new(Strategy::Relaxed, JerkLevel::TangentialJerk);
    pub const R2: Self = Self::new(Strategy::Relaxed, JerkLevel::FullJerk);
    pub const S0: Self = Self::new(Strategy::Strict, JerkLevel::Acceleration);
    pub const S1: Self = Self::new(Strategy::Strict, JerkLevel::TangentialJerk);
    pub const S2: Self = Self::new(Strategy::Strict, JerkLevel::FullJerk);

    pub const ALL: [Self; 6] = [Self::R0, Self::R1, Self::R2, Self::S0, Self::S1, Self::S2];

    pub const fn new(strategy: Strategy, level: JerkLevel) -> Self {
        Self { strategy, level }
    }

    pub fn is_strict(self) -> bool {
        self.strategy == Strategy::Strict
    }
}

impl fmt::Display for SchedulerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.strategy {
            Strategy::Relaxed => 'R',
            Strategy::Strict => 'S',
        };
        write!(f, "{}{}", letter, self.level.index())
    }
}

impl FromStr for SchedulerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 2 {
            return Err(Error::InvalidDocument(format!("unknown scheduler mode {s:?}")));
        }
        let strategy = match bytes[0] {
            b'R' | b'r' => Strategy::Relaxed,
            b'S' | b's' => Strategy::Strict,
            _ => return Err(Error::InvalidDocument(format!("unknown scheduler mode {s:?}"))),
        };
        let level = match bytes[1] {
            b'0' => JerkLevel::Acceleration,
            b'1' => JerkLevel::TangentialJerk,
            b'2' => JerkLevel::FullJerk,
            _ => return Err(Error::InvalidDocument(format!("unknown scheduler mode {s:?}"))),
        };
        Ok(Self::new(strategy, level))
    }
}

/// The on-disk limits document.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDocument {
    pub v_max: f64,
    pub a_max: f64,
    pub j_max: f64,
    pub chord_tol: f64,
    pub sample_dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_j: Option<f64>,
}

/// User limits in mm and s, plus the split of the acceleration and jerk
/// budgets into tangential and centripetal shares.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KinematicLimits {
    /// Commanded feedrate (mm/s).
    pub v_max: f64,
    /// Per-axis acceleration limit (mm/s²).
    pub a_max: f64,
    /// Per-axis jerk limit (mm/s³).
    pub j_max: f64,
    /// Chord tolerance (mm).
    pub chord_tol: f64,
    /// Interpolator sampling period (s).
    pub sample_dt: f64,
    pub p_a: f64,
    pub p_j: f64,
    pub q_j: f64,
}

impl KinematicLimits {
    pub const DEFAULT_SPLIT: f64 = std::f64::consts::FRAC_1_SQRT_2;
    pub const DEFAULT_Q_J: f64 = 0.5;

    /// Limits with the default budget split `p_a = p_j = 1/√2`, `q_j = 1/2`.
    pub fn new(v_max: f64, a_max: f64, j_max: f64, chord_tol: f64, sample_dt: f64) -> Result<Self> {
        Self::with_split(
            v_max,
            a_max,
            j_max,
            chord_tol,
            sample_dt,
            Self::DEFAULT_SPLIT,
            Self::DEFAULT_SPLIT,
            Self::DEFAULT_Q_J,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_split(
        v_max: f64,
        a_max: f64,
        j_max: f64,
        chord_tol: f64,
        sample_dt: f64,
        p_a: f64,
        p_j: f64,
        q_j: f64,
    ) -> Result<Self> {
        let positive = [
            ("v_max", v_max),
            ("a_max", a_max),
            ("j_max", j_max),
            ("chord_tol", chord_tol),
            ("sample_dt", sample_dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidDocument(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        for (name, value) in [("p_a", p_a), ("p_j", p_j), ("q_j", q_j)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidDocument(format!(
                    "{name} must lie in (0, 1), got {value}"
                )));
            }
        }
        let limits = Self { v_max, a_max, j_max, chord_tol, sample_dt, p_a, p_j, q_j };
        // magnitudes far outside machine scales underflow the derived thresholds
        let kcr = limits.critical_curvature(JerkLevel::FullJerk);
        if !(kcr.is_normal() && kcr.is_finite()) {
            return Err(Error::InvalidDocument(format!(
                "limits give a degenerate critical curvature {kcr}"
            )));
        }
        Ok(limits)
    }

    pub fn from_document(doc: &LimitsDocument) -> Result<Self> {
        Self::with_split(
            doc.v_max,
            doc.a_max,
            doc.j_max,
            doc.chord_tol,
            doc.sample_dt,
            doc.p_a.unwrap_or(Self::DEFAULT_SPLIT),
            doc.p_j.unwrap_or(Self::DEFAULT_SPLIT),
            doc.q_j.unwrap_or(Self::DEFAULT_Q_J),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LimitsDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    /// Tangential acceleration share `p_a·A_m`.
    pub fn a_tan(&self) -> f64 {
        self.p_a * self.a_max
    }

    /// Centripetal acceleration share `√(1−p_a²)·A_m`.
    pub fn a_cen(&self) -> f64 {
        (1.0 - self.p_a * self.p_a).sqrt() * self.a_max
    }

    /// Bound on the feedrate's second derivative, `q_j·p_j·J_m`.
    pub fn j_tan1(&self) -> f64 {
        self.q_j * self.p_j * self.j_max
    }

    /// Bound on `v³κ²`, `(1−q_j)·p_j·J_m`.
    pub fn j_tan2(&self) -> f64 {
        (1.0 - self.q_j) * self.p_j * self.j_max
    }

    /// Centripetal jerk share `√(1−p_j²)·J_m`.
    pub fn j_cen(&self) -> f64 {
        (1.0 - self.p_j * self.p_j).sqrt() * self.j_max
    }

    /// The cap on `|v̈|` used to size feedrate ramps: the tangential share
    /// when jerk is controlled, the full per-axis limit otherwise.
    pub fn ramp_jerk(&self, level: JerkLevel) -> f64 {
        if level.controls_jerk() {
            self.j_tan1()
        } else {
            self.j_max
        }
    }

    /// Largest feedrate whose osculating-circle chord error stays within the
    /// chord tolerance.
    pub fn chord_velocity_bound(&self, kappa: f64) -> SpeedBound {
        let k = kappa.abs();
        let d = self.chord_tol;
        if k == 0.0 || k * d >= 1.0 {
            return SpeedBound::Unbounded;
        }
        SpeedBound::Finite(2.0 / self.sample_dt * (2.0 * d / k - d * d).sqrt())
    }

    /// Feedrate keeping `v²|κ| ≤ A_c`.
    pub fn centripetal_acceleration_bound(&self, kappa: f64) -> SpeedBound {
        let k = kappa.abs();
        if k == 0.0 {
            SpeedBound::Unbounded
        } else {
            SpeedBound::Finite((self.a_cen() / k).sqrt())
        }
    }

    /// Feedrate keeping `v³κ² ≤ J_t2`.
    pub fn tangential_jerk_bound(&self, kappa: f64) -> SpeedBound {
        if kappa == 0.0 {
            SpeedBound::Unbounded
        } else {
            SpeedBound::Finite((self.j_tan2() / (kappa * kappa)).cbrt())
        }
    }

    /// The unique positive root of `|w|·v³ + 3|κ|·A_t·v = J_c`.
    ///
    /// Closed-form depressed-cubic solution. With `q = J_c/|w|` and
    /// `p/3 = |κ|A_t/|w|`, the Cardano terms satisfy `∛λ₊·∛λ₋ = −p/3` and
    /// `λ₊ + λ₋ = q`, so the root is evaluated as `q / (a² + p/3 + (p/3a)²)`
    /// with `a = ∛λ₊`, which has no cancellation.
    pub fn jerk_centripetal_root(&self, kappa: f64, w: f64) -> SpeedBound {
        let k = kappa.abs();
        let w = w.abs();
        let jc = self.j_cen();
        let at = self.a_tan();
        if w == 0.0 {
            return if k == 0.0 {
                SpeedBound::Unbounded
            } else {
                SpeedBound::Finite(jc / (3.0 * k * at))
            };
        }
        let half_q = jc / (2.0 * w);
        let p3 = k * at / w;
        let disc = (half_q * half_q + p3 * p3 * p3).sqrt();
        let lam_plus = half_q + disc;
        if disc.is_finite() && lam_plus > 0.0 {
            let a = lam_plus.cbrt();
            let b = p3 / a;
            let v = 2.0 * half_q / (a * a + p3 + b * b);
            if v.is_finite() && v > 0.0 {
                return SpeedBound::Finite(v);
            }
        }
        SpeedBound::Finite(monotone_cubic_root(w, 3.0 * k * at, jc))
    }

    /// Chord and centripetal-acceleration bound (`V_r0`).
    pub fn acceleration_only_bound(&self, kappa: f64) -> SpeedBound {
        self.chord_velocity_bound(kappa)
            .min(self.centripetal_acceleration_bound(kappa))
    }

    /// Adds the `v³κ²` term (`V_r1`).
    pub fn tangential_jerk_level_bound(&self, kappa: f64) -> SpeedBound {
        self.acceleration_only_bound(kappa)
            .min(self.tangential_jerk_bound(kappa))
    }

    /// Full kinematic bound (`V_b`).
    pub fn full_bound(&self, kappa: f64, w: f64) -> SpeedBound {
        self.tangential_jerk_level_bound(kappa)
            .min(self.jerk_centripetal_root(kappa, w))
    }

    /// The level's bound, capped at the commanded feedrate.
    pub fn velocity_bound(&self, level: JerkLevel, kappa: f64, w: f64) -> f64 {
        let bound = match level {
            JerkLevel::Acceleration => self.acceleration_only_bound(kappa),
            JerkLevel::TangentialJerk => self.tangential_jerk_level_bound(kappa),
            JerkLevel::FullJerk => self.full_bound(kappa, w),
        };
        bound.cap(self.v_max)
    }

    /// Curvature above which travelling at `V_m` can break a bound the level
    /// controls.
    pub fn critical_curvature(&self, level: JerkLevel) -> f64 {
        let v = self.v_max;
        let d = self.chord_tol;
        let dt = self.sample_dt;
        let chord = 8.0 * d / (v * v * dt * dt + 4.0 * d * d);
        let acc = self.a_cen() / (v * v);
        let base = chord.min(acc);
        if level.controls_jerk() {
            base.min((self.j_tan2() / (v * v * v)).sqrt())
        } else {
            base
        }
    }

    /// Distance between the osculating circle and the chord covered in one
    /// sampling period at feedrate `v`.
    pub fn chord_error(&self, kappa: f64, v: f64) -> Result<f64> {
        let k = kappa.abs();
        if k == 0.0 {
            return Ok(0.0);
        }
        let chord = v * self.sample_dt;
        let radius = 1.0 / k;
        if chord > 2.0 * radius {
            return Err(Error::ChordUndefined { chord, diameter: 2.0 * radius });
        }
        // r - sqrt(r² - L²/4) rewritten without cancellation
        let half = 0.5 * chord;
        let root = ((radius - half) * (radius + half)).sqrt();
        Ok(half * half / (radius + root))
    }
}

/// Positive root of `a·v³ + b·v = c` for `a, c > 0`, `b ≥ 0`, by safeguarded
/// Newton iteration. Only reached when the closed form overflows.
fn monotone_cubic_root(a: f64, b: f64, c: f64) -> f64 {
    let mut hi = (c / a).cbrt();
    if b > 0.0 {
        hi = hi.min(c / b);
    }
    let mut lo = 0.0;
    let mut v = hi;
    for _ in 0..200 {
        let f = a * v * v * v + b * v - c;
        if f > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let df = 3.0 * a * v * v + b;
        let mut next = v - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-16 * v.abs() {
            return next;
        }
        v = next;
    }
    v
}
