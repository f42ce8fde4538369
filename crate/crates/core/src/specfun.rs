//! Bessel functions of the first kind from the ascending power series
//!
//! ```text
//! J_m(x) = sum_k (-1)^k (x/2)^(2k+m) / (k! (k+m)!)
//! ```
//!
//! The truncated series ([`bessel_series`]) is evaluated in plain `f64`; it is
//! only ever used at tiny arguments, where four terms are already exact to
//! rounding. The converged series ([`bessel_j`]) accumulates in double-double
//! arithmetic. Terms near `x = 45` reach `1e17` before cancelling down to
//! `O(1)`, so a plain `f64` sum would have no correct digits there.

use crate::error::{Error, Result};

/// Largest order accepted by the series routines.
pub const MAX_SERIES_ORDER: u32 = 60;
/// Largest order and zero index accepted by [`bessel_zero`].
pub const MAX_ZERO_ORDER: u32 = 10;
pub const MAX_ZERO_INDEX: u32 = 10;

const ZERO_SCAN_STEP: f64 = 0.1;
const ZERO_TOLERANCE: f64 = 1e-12;
const MAX_TERMS: usize = 400;

/// One evaluation of `J_m` and `J_m'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
    pub derivative: f64,
}

impl BesselEval {
    pub fn new(order: u32, argument: f64) -> Result<Self> {
        Ok(BesselEval {
            order,
            argument,
            value: bessel_j(order, argument)?,
            derivative: bessel_j_prime(order, argument)?,
        })
    }
}

fn check_args(m: u32, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    if m > MAX_SERIES_ORDER {
        return Err(Error::invalid(format!(
            "Bessel order {m} exceeds {MAX_SERIES_ORDER}"
        )));
    }
    Ok(())
}

/// `(x/2)^m / m!`, the leading series term.
fn leading_term(m: u32, half_x: f64) -> f64 {
    (1..=m).fold(1.0, |t, j| t * half_x / f64::from(j))
}

/// Partial sum of the first `terms` terms of the series for `J_m(x)`.
pub fn bessel_series(m: u32, x: f64, terms: usize) -> Result<f64> {
    check_args(m, x)?;
    if terms == 0 {
        return Err(Error::invalid("series needs at least one term"));
    }
    Ok(series_sum(m, x, terms))
}

fn series_sum(m: u32, x: f64, terms: usize) -> f64 {
    let half_x = 0.5 * x;
    let q = -half_x * half_x;
    let mut term = leading_term(m, half_x);
    let mut sum = 0.0;
    for k in 0..terms {
        sum += term;
        let k1 = (k + 1) as f64;
        term *= q / (k1 * (k1 + f64::from(m)));
    }
    sum
}

/// Converged series value of `J_m(x)`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64> {
    check_args(m, x)?;
    Ok(converged_series(m, x))
}

/// `J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2`, with `J_{-1} = -J_1`.
pub fn bessel_j_prime(m: u32, x: f64) -> Result<f64> {
    check_args(m, x)?;
    Ok(derivative_from(m, x, converged_series))
}

/// Same recurrence as [`bessel_j_prime`], over the truncated series.
pub fn bessel_series_prime(m: u32, x: f64, terms: usize) -> Result<f64> {
    check_args(m, x)?;
    if terms == 0 {
        return Err(Error::invalid("series needs at least one term"));
    }
    Ok(derivative_from(m, x, |n, x| series_sum(n, x, terms)))
}

fn derivative_from(m: u32, x: f64, j: impl Fn(u32, f64) -> f64) -> f64 {
    let lower = if m == 0 { -j(1, x) } else { j(m - 1, x) };
    0.5 * (lower - j(m + 1, x))
}

fn converged_series(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half_x = DoubleDouble::from(0.5 * x);
    let q = -(half_x * half_x);
    let mut term = DoubleDouble::from(1.0);
    for j in 1..=m {
        term = term * half_x / DoubleDouble::from(f64::from(j));
    }
    let mut sum = DoubleDouble::from(0.0);
    let mut peak = term.hi.abs();
    for k in 0..MAX_TERMS {
        sum = sum + term;
        let k1 = (k + 1) as f64;
        term = term * q / DoubleDouble::from(k1 * (k1 + f64::from(m)));
        peak = peak.max(term.hi.abs());
        // past the peak the terms shrink monotonically
        let past_peak = k1 * k1 > -q.hi;
        if past_peak && term.hi.abs() <= 1e-17 * sum.hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if past_peak && term.hi.abs() < 1e-32 * peak {
            break;
        }
    }
    sum.hi + sum.lo
}

/// The `k`-th positive zero of `J_m`, to absolute tolerance `1e-10` or better.
///
/// Scans from `x = m` in steps of 0.1 for a sign change and bisects the
/// bracket.
pub fn bessel_zero(m: u32, k: u32) -> Result<f64> {
    if m > MAX_ZERO_ORDER || k == 0 || k > MAX_ZERO_INDEX {
        return Err(Error::invalid(format!(
            "zero index out of range: order {m} (max {MAX_ZERO_ORDER}), \
             index {k} (1..={MAX_ZERO_INDEX})"
        )));
    }
    let limit = f64::from(m) + 20.0 * f64::from(k);
    let start = f64::from(m);
    let mut found = 0;
    let mut step = 0u32;
    let mut lo = start;
    let mut f_lo = converged_series(m, lo);
    loop {
        step += 1;
        let hi = start + f64::from(step) * ZERO_SCAN_STEP;
        if hi > limit {
            return Err(Error::ZeroNotBracketed {
                order: m,
                index: k,
                limit,
            });
        }
        let f_hi = converged_series(m, hi);
        // J_m(m) > 0 for m >= 1, so the start point is never itself a zero
        if f_lo * f_hi < 0.0 || (f_hi == 0.0 && f_lo != 0.0) {
            found += 1;
            if found == k {
                return Ok(bisect(|x| converged_series(m, x), lo, hi, f_lo));
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > ZERO_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving about 32 digits.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl std::ops::Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl std::ops::Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl std::ops::Div for DoubleDouble {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self + -(o * DoubleDouble::from(q1));
        let q2 = r.hi / o.hi;
        let r = r + -(o * DoubleDouble::from(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + DoubleDouble::from(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_series(0, 0.0, 4).unwrap(), 1.0);
        assert_eq!(bessel_series(1, 0.0, 4).unwrap(), 0.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(0, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(1, 0.0).unwrap(), 0.5);
        assert_eq!(bessel_j_prime(2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn four_terms_match_long_series_at_small_argument() {
        let short = bessel_series(2, 1e-4, 4).unwrap();
        let long = bessel_series(2, 1e-4, 40).unwrap();
        assert!((short - long).abs() < 1e-15);
        for m in 0..=6 {
            let four = bessel_series(m, 1e-4, 4).unwrap();
            let full = bessel_j(m, 1e-4).unwrap();
            assert!((four - full).abs() < 1e-14, "m={m}");
        }
    }

    #[test]
    fn four_terms_below_0_01_are_converged() {
        for m in [0, 1, 3, 10] {
            for x in [1e-4, 3e-3, 0.01] {
                let four = bessel_series(m, x, 4).unwrap();
                let full = bessel_j(m, x).unwrap();
                assert!((four - full).abs() <= 1e-12 * full.abs(), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(bessel_series(0, -1.0, 4).is_err());
        assert!(bessel_series(61, 1.0, 4).is_err());
        assert!(bessel_series(0, 1.0, 0).is_err());
        assert!(bessel_j(0, f64::NAN).is_err());
        assert!(bessel_zero(11, 1).is_err());
        assert!(bessel_zero(0, 0).is_err());
        assert!(bessel_zero(0, 11).is_err());
    }

    #[test]
    fn first_zero_of_j0() {
        let z = bessel_zero(0, 1).unwrap();
        assert!((z - 2.404826).abs() < 1e-6);
        assert!(bessel_j(0, 2.404826).unwrap().abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for (m, x) in [(0, 1.0), (1, 2.5), (4, 7.0)] {
            let fd = (bessel_j(m, x + h).unwrap() - bessel_j(m, x - h).unwrap()) / (2.0 * h);
            let d = bessel_j_prime(m, x).unwrap();
            assert!((fd - d).abs() < 1e-8, "m={m} x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn zero_ratios() {
        let j01 = bessel_zero(0, 1).unwrap();
        let j02 = bessel_zero(0, 2).unwrap();
        let j11 = bessel_zero(1, 1).unwrap();
        assert!((j11 / j01 - 1.593).abs() < 1e-3);
        assert!((j02 / j01 - 2.295).abs() < 1e-3);
    }

    #[test]
    fn large_argument_stays_accurate() {
        // J_0(30) = -0.086367983581040..., J_10(40) = 0.1193833627822609...
        assert!((bessel_j(0, 30.0).unwrap() + 0.086_367_983_581_040_2).abs() < 1e-13);
        assert!((bessel_j(10, 40.0).unwrap() - 0.119_383_362_782_260_9).abs() < 1e-13);
    }

    #[test]
    fn eval_struct_bundles_value_and_derivative() {
        let e = BesselEval::new(1, 0.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.derivative, 0.5);
    }

    #[test]
    fn bounded_by_one() {
        for m in 0..=10 {
            for i in 0..=450 {
                let x = 0.1 * f64::from(i);
                assert!(bessel_j(m, x).unwrap().abs() <= 1.0, "m={m} x={x}");
            }
        }
    }
}
