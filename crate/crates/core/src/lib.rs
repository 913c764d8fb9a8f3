//! Offline feedrate scheduling on planar Pythagorean-hodograph quintic
//! spline paths.
//!
//! The pipeline is: load a [`PhSplinePath`], pick [`KinematicLimits`] and a
//! [`SchedulerMode`], decompose each halting segment into curve blocks,
//! schedule a C² piecewise-quintic [`FeedrateProfile`], then sample it into
//! uniformly timed reference points with the arc-length interpolator.

// `!(x > y)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod blocks;
pub mod error;
pub mod interpolator;
pub mod limits;
pub mod path;
mod quadrature;
pub mod report;
pub mod scheduler;
pub mod verify;

pub use bernstein::BernsteinPoly;
pub use blocks::{CurveBlock, SpecialPoint, SpecialPointKind};
pub use error::{Error, Result};
pub use interpolator::ReferencePoint;
pub use limits::{JerkLevel, KinematicLimits, SchedulerMode, SpeedBound, Strategy};
pub use path::{FrameSample, PathDocument, PhQuinticSegment, PhSplinePath};
pub use scheduler::{FeedrateProfile, PieceKind, Schedule, ScheduleOptions};
pub use verify::{AuditReport, KinematicSample};
