//! Polynomials in Bernstein form on the unit interval.
//!
//! Everything geometric in the crate (hodographs, parametric speed, arc
//! length, curvature numerators) and every feedrate ramp is one of these.

use crate::error::{Error, Result};

/// Highest degree any polynomial in the crate may reach.
pub const MAX_DEGREE: usize = 24;

/// Absolute width below which a root bracket is considered resolved.
const ROOT_TOL: f64 = 1e-13;

/// Roots closer than this are reported once.
const ROOT_MERGE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinPoly {
    coeffs: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

impl BernsteinPoly {
    /// Builds a polynomial of degree `coeffs.len() - 1`.
    ///
    /// Panics on an empty coefficient list or a degree above [`MAX_DEGREE`];
    /// both are programming errors.
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "Bernstein polynomial needs at least one coefficient");
        assert!(
            coeffs.len() - 1 <= MAX_DEGREE,
            "Bernstein degree {} exceeds cap {}",
            coeffs.len() - 1,
            MAX_DEGREE
        );
        Self { coeffs }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(vec![value])
    }

    pub fn zero(degree: usize) -> Self {
        Self::new(vec![0.0; degree + 1])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn min_coeff(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest coefficient magnitude; used as the scale for zero tests.
    pub fn magnitude(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Evaluates by de Casteljau's algorithm (convex combinations only).
    pub fn evaluate(&self, tau: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Domain(format!("tau = {tau} outside [0, 1]")));
        }
        Ok(self.eval(tau))
    }

    /// Unchecked evaluation used on hot paths where `tau` is known to lie in
    /// the unit interval.
    pub(crate) fn eval(&self, tau: f64) -> f64 {
        let n = self.coeffs.len();
        if n == 1 {
            return self.coeffs[0];
        }
        let mut buf = [0.0; MAX_DEGREE + 1];
        buf[..n].copy_from_slice(&self.coeffs);
        let s = 1.0 - tau;
        for level in 1..n {
            for k in 0..n - level {
                buf[k] = s * buf[k] + tau * buf[k + 1];
            }
        }
        buf[0]
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero(0);
        }
        let nf = n as f64;
        Self::new(self.coeffs.windows(2).map(|w| nf * (w[1] - w[0])).collect())
    }

    /// The antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let n = self.degree();
        let scale = 1.0 / (n + 1) as f64;
        let mut out = Vec::with_capacity(n + 2);
        out.push(0.0);
        let mut acc = 0.0;
        for &c in &self.coeffs {
            acc += c;
            out.push(acc * scale);
        }
        Self::new(out)
    }

    /// Integral over the unit interval: the mean of the coefficients.
    pub fn integral(&self) -> f64 {
        self.coeffs.iter().sum::<f64>() / self.coeffs.len() as f64
    }

    pub fn elevate(&self, to_degree: usize) -> Result<Self> {
        let n = self.degree();
        if to_degree < n {
            return Err(Error::Domain(format!(
                "cannot elevate degree {n} down to {to_degree}"
            )));
        }
        if to_degree == n {
            return Ok(self.clone());
        }
        let r = to_degree - n;
        let denom: Vec<f64> = (0..=to_degree).map(|i| binomial(to_degree, i)).collect();
        let mut out = vec![0.0; to_degree + 1];
        for (i, slot) in out.iter_mut().enumerate() {
            let lo = i.saturating_sub(r);
            let hi = n.min(i);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += binomial(r, i - j) * binomial(n, j) * self.coeffs[j];
            }
            *slot = acc / denom[i];
        }
        Ok(Self::new(out))
    }

    pub fn product(&self, other: &Self) -> Self {
        let m = self.degree();
        let n = other.degree();
        let mut out = vec![0.0; m + n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            let wa = binomial(m, i);
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += wa * binomial(n, j) * a * b;
            }
        }
        for (k, c) in out.iter_mut().enumerate() {
            *c /= binomial(m + n, k);
        }
        Self::new(out)
    }

    /// Sum after elevating both operands to the larger degree.
    pub fn sum(&self, other: &Self) -> Self {
        let d = self.degree().max(other.degree());
        let a = self.elevate(d).expect("elevating up never fails");
        let b = other.elevate(d).expect("elevating up never fails");
        Self::new(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.sum(&other.scale(-1.0))
    }

    /// Splits at `tau` into the polynomials describing `[0, tau]` and
    /// `[tau, 1]`, each reparameterized onto the unit interval.
    pub fn split(&self, tau: f64) -> (Self, Self) {
        let n = self.coeffs.len();
        let mut work = self.coeffs.clone();
        let mut left = Vec::with_capacity(n);
        let mut right = vec![0.0; n];
        left.push(work[0]);
        right[n - 1] = work[n - 1];
        let s = 1.0 - tau;
        for level in 1..n {
            for k in 0..n - level {
                work[k] = s * work[k] + tau * work[k + 1];
            }
            left.push(work[0]);
            right[n - 1 - level] = work[n - 1 - level];
        }
        (Self::new(left), Self::new(right))
    }

    /// Restriction to `[a, b]`, reparameterized onto the unit interval.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        if a <= 0.0 && b >= 1.0 {
            return self.clone();
        }
        let (_, upper) = self.split(a);
        if a >= 1.0 {
            return upper;
        }
        let local = (b - a) / (1.0 - a);
        upper.split(local.clamp(0.0, 1.0)).0
    }

    /// Real roots in `[lo, hi]`, sorted, each reported once.
    ///
    /// Recursive subdivision discards sub-intervals whose coefficients share
    /// a strict sign; an interval whose control polygon crosses zero exactly
    /// once is handed to bisection on the polynomial itself.
    pub fn find_roots(&self, lo: f64, hi: f64) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::Domain(format!("root interval [{lo}, {hi}] not within [0, 1]")));
        }
        if self.is_zero() {
            return Err(Error::DegenerateRoots);
        }
        let mut roots = Vec::new();
        if lo == hi {
            if self.eval(lo) == 0.0 {
                roots.push(lo);
            }
            return Ok(roots);
        }
        let local = self.restrict(lo, hi);
        self.subdivide(&local, lo, hi, 0, &mut roots);
        roots.sort_by(|a, b| a.total_cmp(b));
        let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
        for r in roots {
            match merged.last() {
                Some(&last) if r - last <= ROOT_MERGE => {}
                _ => merged.push(r),
            }
        }
        Ok(merged)
    }

    fn subdivide(&self, local: &Self, a: f64, b: f64, depth: usize, out: &mut Vec<f64>) {
        let c = &local.coeffs;
        let first = c[0];
        let last = c[c.len() - 1];
        if first == 0.0 {
            out.push(a);
        }
        if last == 0.0 {
            out.push(b);
        }
        let min = local.min_coeff();
        let max = local.max_coeff();
        if min > 0.0 || max < 0.0 {
            return;
        }
        if min == 0.0 && max == 0.0 {
            // identically zero on a sub-interval of a nonzero polynomial can
            // only be roundoff; report the midpoint
            out.push(0.5 * (a + b));
            return;
        }
        if b - a <= ROOT_TOL || depth > 80 {
            out.push(0.5 * (a + b));
            return;
        }
        let mut changes = 0;
        let mut prev = 0.0f64;
        for &x in c {
            if x != 0.0 {
                if prev != 0.0 && (x > 0.0) != (prev > 0.0) {
                    changes += 1;
                }
                prev = x;
            }
        }
        if changes == 1 && first != 0.0 && last != 0.0 && (first > 0.0) != (last > 0.0) {
            out.push(self.bisect(a, b, first > 0.0));
            return;
        }
        let (left, right) = local.split(0.5);
        let m = 0.5 * (a + b);
        self.subdivide(&left, a, m, depth + 1, out);
        self.subdivide(&right, m, b, depth + 1, out);
    }

    fn bisect(&self, mut a: f64, mut b: f64, positive_at_a: bool) -> f64 {
        while b - a > ROOT_TOL * 0.01 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if (fm > 0.0) == positive_at_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}
