#![allow(dead_code)]

use std::path::PathBuf;

use feedplan::{KinematicLimits, PhSplinePath};

/// (path fixture, limits fixture) pairs.
pub const FIXTURES: [(&str, &str); 5] = [
    ("straight", "hat"),
    ("corner", "hat"),
    ("hat", "hat"),
    ("starfish", "starfish"),
    ("butterfly", "butterfly"),
];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn path_file(name: &str) -> PathBuf {
    fixture_dir().join(format!("{name}.json"))
}

pub fn limits_file(name: &str) -> PathBuf {
    fixture_dir().join(format!("{name}_limits.json"))
}

pub fn load_path(name: &str) -> PhSplinePath {
    PhSplinePath::from_json(&std::fs::read_to_string(path_file(name)).unwrap()).unwrap()
}

pub fn load_limits(name: &str) -> KinematicLimits {
    KinematicLimits::from_json(&std::fs::read_to_string(limits_file(name)).unwrap()).unwrap()
}

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Positive root of the increasing cubic `c3·v³ + c1·v − c0` by bisection.
pub fn bisect_cubic(c3: f64, c1: f64, c0: f64) -> f64 {
    let f = |v: f64| c3 * v * v * v + c1 * v - c0;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
