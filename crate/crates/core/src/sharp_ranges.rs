//! Index ranges implied by characteristic constants.
//!
//! Each function evaluates one range formula; endpoint openness matches the
//! statement it comes from. A constant of exactly 1 (constant weights) maps
//! to the unbounded range instead of dividing by zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::float_or_inf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexRange {
    pub lo: f64,
    #[serde(with = "float_or_inf")]
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl IndexRange {
    /// `lo < hi` is required except for the closed single point `[x, x]`.
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        let ok = lo.is_finite() && !hi.is_nan() && (lo < hi || (lo == hi && !lo_open && !hi_open));
        if !ok {
            return Err(Error::InvalidParameter(format!("invalid index range from {lo} to {hi}")));
        }
        Ok(IndexRange {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    fn open(lo: f64, hi: f64) -> Self {
        IndexRange {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }

    pub fn is_unbounded(&self) -> bool {
        self.hi.is_infinite()
    }

    /// A single point: the range adds nothing beyond its lower endpoint.
    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_open { '(' } else { '[' };
        let r = if self.hi_open { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

fn check_constant(name: &str, c: f64) -> Result<()> {
    if c.is_nan() || c < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} = {c} is impossible: characteristic constants are at least 1"
        )));
    }
    Ok(())
}

/// `c/(c-1)`, with `c = 1` mapped to `+∞` and `c = +∞` to 1.
fn conjugate(c: f64) -> f64 {
    if c == 1.0 {
        f64::INFINITY
    } else if c.is_infinite() {
        1.0
    } else {
        c / (c - 1.0)
    }
}

/// From `A_1(w) = c`: `w ∈ RH_r` for `1 < r < c/(c-1)`.
pub fn rh_range_from_a1(c: f64) -> Result<IndexRange> {
    check_constant("A_1 constant", c)?;
    if c.is_infinite() {
        return Err(Error::InvalidParameter("A_1 constant is infinite".into()));
    }
    Ok(IndexRange::open(1.0, conjugate(c)))
}

/// From `RH_∞(w) = c`: `w ∈ A_p` for `p > c`.
pub fn ap_range_from_rhinf(c: f64) -> Result<IndexRange> {
    check_constant("RH_inf constant", c)?;
    if c.is_infinite() {
        return Err(Error::InvalidParameter("RH_inf constant is infinite".into()));
    }
    Ok(IndexRange::open(c, f64::INFINITY))
}

/// From `w = u v^{1/r}` with `RH_∞(u) = c1`: `w ∈ A_p` for `p > c1`.
pub fn ap_range_from_rh_factorization(c1: f64) -> Result<IndexRange> {
    ap_range_from_rhinf(c1)
}

/// From `w = u v^{1/r}` with `A_1(v) = c2`: `w ∈ RH_p` for
/// `r ≤ p < c2·r/(c2-1)`. `c2 = 1` gives `[r, ∞)`; `c2 = ∞` collapses to the
/// degenerate point `[r, r]`.
pub fn rh_upper_from_factorization(r: f64, c2: f64) -> Result<IndexRange> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be a finite real >= 1, got {r}")));
    }
    check_constant("A_1(v)", c2)?;
    if c2.is_infinite() {
        return IndexRange::new(r, r, false, false);
    }
    Ok(IndexRange {
        lo: r,
        hi: r * conjugate(c2),
        lo_open: false,
        hi_open: true,
    })
}

/// From `w = u v^{1-p}` with `A_1(u) = c`: `w ∈ RH_r` for `1 < r < c/(c-1)`.
pub fn rh_range_from_ap_factorization(c: f64) -> Result<IndexRange> {
    rh_range_from_a1(c)
}

/// `w^τ ∈ A_p` for `1 ≤ τ < c/(c-1)`, `c = max(A_1(u), A_1(v))`.
pub fn tau_range(c_u: f64, c_v: f64) -> Result<IndexRange> {
    check_constant("A_1(u)", c_u)?;
    check_constant("A_1(v)", c_v)?;
    let c = c_u.max(c_v);
    if c.is_infinite() {
        return Err(Error::InvalidParameter("A_1 constant is infinite".into()));
    }
    Ok(IndexRange {
        lo: 1.0,
        hi: conjugate(c),
        lo_open: false,
        hi_open: true,
    })
}

/// `w ∈ A_q` for `(p-1)(c*-1)/c* + 1 < q ≤ p`, `c* = A_1(v)`.
pub fn aq_lower_from_factorization(p: f64, c_star: f64) -> Result<IndexRange> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must be a finite real > 1, got {p}")));
    }
    check_constant("A_1(v)", c_star)?;
    let lo = if c_star.is_infinite() {
        p
    } else {
        (p - 1.0) * (c_star - 1.0) / c_star + 1.0
    };
    if lo >= p {
        return IndexRange::new(p, p, false, false);
    }
    Ok(IndexRange {
        lo,
        hi: p,
        lo_open: true,
        hi_open: false,
    })
}

/// n-dimensional `RH_r` range from the k-enlarged `A_{1,k}` constant.
pub fn nd_rh_range_from_a1k(c_k: f64) -> Result<IndexRange> {
    rh_range_from_a1(c_k)
}

/// n-dimensional `A_p` range from the k-enlarged `RH_{∞,k}` constant.
pub fn nd_ap_range_from_rhinfk(c_k: f64) -> Result<IndexRange> {
    ap_range_from_rhinf(c_k)
}

/// Residual `c·((p-r)/r)·(p')^r - 1` of the upper-index equation.
pub fn kinnunen_residual(c: f64, r: f64, p: f64) -> f64 {
    let conj = p / (p - 1.0);
    c * ((p - r) / r) * conj.powf(r) - 1.0
}

/// Absolute tolerance on `p` for [`kinnunen_upper_index`].
pub const KINNUNEN_TOL: f64 = 1e-12;

/// The unique `p > r` with `c·((p-r)/r)·(p')^r = 1`, by bisection.
///
/// The residual is `-1` at `p = r` and increases strictly in `p`; the upper
/// bracket starts at `max(10r, 100)` and doubles until the sign changes.
pub fn kinnunen_upper_index(c: f64, r: f64) -> Result<f64> {
    if !(c.is_finite() && c >= 1.0) {
        return Err(Error::InvalidParameter(format!("c must be a finite real >= 1, got {c}")));
    }
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::InvalidParameter(format!("r must be a finite real > 1, got {r}")));
    }
    const CAP: f64 = 1e12;
    let f = |p: f64| kinnunen_residual(c, r, p);
    let mut lo = r * (1.0 + 1e-9);
    let mut hi = (10.0 * r).max(100.0);
    if f(lo) >= 0.0 {
        // root squeezed against r; the bracket's left end is already past it
        return Ok(lo);
    }
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > CAP {
            return Err(Error::BracketNotFound { cap: CAP });
        }
    }
    while hi - lo > KINNUNEN_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn rh_from_a1() {
        let r = rh_range_from_a1(2.0).unwrap();
        assert_eq!((r.lo, r.hi, r.lo_open, r.hi_open), (1.0, 2.0, true, true));
        assert!(rh_range_from_a1(1.0).unwrap().is_unbounded());
        assert!(close(rh_range_from_a1(4.0 / 3.0).unwrap().hi, 4.0));
        assert!(rh_range_from_a1(0.5).is_err());
    }

    #[test]
    fn ap_from_rhinf() {
        for c in [3.0, 1.0, 1.5] {
            let r = ap_range_from_rhinf(c).unwrap();
            assert_eq!((r.lo, r.hi, r.lo_open), (c, f64::INFINITY, true));
            assert!(!r.contains(c));
        }
        assert_eq!(ap_range_from_rh_factorization(2.0).unwrap().lo, 2.0);
    }

    #[test]
    fn rh_upper() {
        let r = rh_upper_from_factorization(1.5, 4.0).unwrap();
        assert_eq!((r.lo, r.lo_open, r.hi_open), (1.5, false, true));
        assert!(close(r.hi, 2.0));
        assert!(r.contains(1.5));
        let d = rh_upper_from_factorization(1.5, f64::INFINITY).unwrap();
        assert!(d.is_degenerate());
        assert_eq!(rh_upper_from_factorization(2.0, 2.0).unwrap().hi, 4.0);
        assert!(rh_upper_from_factorization(2.0, 1.0).unwrap().is_unbounded());
    }

    #[test]
    fn rh_from_ap_factorization() {
        assert_eq!(rh_range_from_ap_factorization(2.0).unwrap().hi, 2.0);
        assert!(rh_range_from_ap_factorization(1.0).unwrap().is_unbounded());
        let c = 1.0 / (1.0 - 0.75);
        assert!(close(rh_range_from_ap_factorization(c).unwrap().hi, 4.0 / 3.0));
    }

    #[test]
    fn tau() {
        let t = tau_range(2.0, 1.0).unwrap();
        assert_eq!((t.lo, t.hi, t.lo_open, t.hi_open), (1.0, 2.0, false, true));
        assert!(tau_range(1.0, 1.0).unwrap().is_unbounded());
        assert!(close(tau_range(1.0, 4.0).unwrap().hi, 4.0 / 3.0));
    }

    #[test]
    fn aq_lower() {
        let q = aq_lower_from_factorization(3.0, 2.0).unwrap();
        assert_eq!((q.lo, q.hi, q.lo_open, q.hi_open), (2.0, 3.0, true, false));
        assert_eq!(aq_lower_from_factorization(3.0, 1.0).unwrap().lo, 1.0);
        assert!(close(aq_lower_from_factorization(2.0, 3.0).unwrap().lo, 5.0 / 3.0));
    }

    #[test]
    fn nd_ranges() {
        assert_eq!(nd_rh_range_from_a1k(2.0).unwrap().hi, 2.0);
        assert!(nd_ap_range_from_rhinfk(1.0).unwrap().is_unbounded());
        assert_eq!(nd_ap_range_from_rhinfk(2.5).unwrap().lo, 2.5);
    }

    #[test]
    fn duality_of_aq_and_rh_endpoints() {
        for p in [1.5, 2.0, 3.0, 7.0] {
            for c in [1.25, 2.0, 4.0, 10.0] {
                let q = aq_lower_from_factorization(p, c).unwrap().lo;
                let r_star = rh_range_from_a1(c).unwrap().hi;
                assert!(close(q, 1.0 + (p - 1.0) / r_star), "p={p} c={c}");
            }
        }
    }

    #[test]
    fn composition_monotone() {
        let cs = [1.01, 1.5, 2.0, 3.0, 10.0, 100.0];
        for w in cs.windows(2) {
            let (a, b) = (rh_range_from_a1(w[0]).unwrap().hi, rh_range_from_a1(w[1]).unwrap().hi);
            assert!(a > b && b > 1.0);
            assert!(ap_range_from_rhinf(w[0]).unwrap().lo < ap_range_from_rhinf(w[1]).unwrap().lo);
        }
    }

    #[test]
    fn kinnunen_residual_and_bounds() {
        for c in [1.0, 2.0, 4.0] {
            let p = kinnunen_upper_index(c, 2.0).unwrap();
            assert!(p > 2.0);
            assert!(kinnunen_residual(c, 2.0, p).abs() < 1e-10);
        }
        // tends to r as c grows
        let p = kinnunen_upper_index(1e8, 2.0).unwrap();
        assert!(p - 2.0 < 1e-6);
        assert!(kinnunen_upper_index(0.5, 2.0).is_err());
        assert!(kinnunen_upper_index(2.0, 1.0).is_err());
    }
}
