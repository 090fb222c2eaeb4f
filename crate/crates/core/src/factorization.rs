//! Declared factorizations and the ranges they predict.
//!
//! Two shapes are supported:
//!
//! * `w = u · v^{1/r}` with `u ∈ RH_∞`, `v ∈ A_1` (reverse Hölder form);
//! * `w = u · v^{1-p}` with `u, v ∈ A_1` (`A_p` form).
//!
//! Factorizations are supplied by the caller and certified, never searched
//! for: the factor constants are estimated first, then the product is
//! compared with the target pointwise.

use serde::{Deserialize, Serialize};

use crate::constants::{a1_constant, rhinf_constant, ConstantEstimate, SearchFamily, Status};
use crate::error::{Error, Result};
use crate::sharp_ranges::{
    aq_lower_from_factorization, ap_range_from_rh_factorization, rh_range_from_ap_factorization,
    rh_upper_from_factorization, tau_range, IndexRange,
};
use crate::weights::Weight;

/// Test points per decade of the pointwise match.
pub const MATCH_POINTS_PER_DECADE: usize = 1024;
/// Decades covered, `[1e-6, 1e6]`.
pub const MATCH_DECADES: (i32, i32) = (-6, 6);
/// Largest accepted relative pointwise error.
pub const MATCH_TOL: f64 = 1e-12;

/// Search settings shared by both factor certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub refinement_depth: usize,
    pub cap: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            refinement_depth: 4,
            cap: crate::constants::DEFAULT_CAP,
        }
    }
}

impl CertifyOptions {
    fn family(&self, w: &Weight) -> SearchFamily {
        SearchFamily::for_weight(w)
            .with_refinement(self.refinement_depth)
            .with_cap(self.cap)
    }
}

/// Outcome of the pointwise comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseMatch {
    pub points: usize,
    pub max_rel_error: f64,
    pub worst_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhFactorization {
    pub target: Weight,
    pub u: Weight,
    pub v: Weight,
    pub r: f64,
    /// `RH_∞(u)`.
    pub c1: ConstantEstimate,
    /// `A_1(v)`.
    pub c2: ConstantEstimate,
    pub pointwise: PointwiseMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApFactorization {
    pub target: Weight,
    pub u: Weight,
    pub v: Weight,
    pub p: f64,
    /// `A_1(u)`.
    pub c: ConstantEstimate,
    /// `A_1(v)`.
    pub c_star: ConstantEstimate,
    pub pointwise: PointwiseMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum Factorization {
    Rh(RhFactorization),
    Ap(ApFactorization),
}

fn match_points(target: &Weight) -> Vec<f64> {
    let (lo, hi) = target.domain();
    let (d0, d1) = MATCH_DECADES;
    let n = (d1 - d0) as usize * MATCH_POINTS_PER_DECADE;
    let mut pts = Vec::with_capacity(2 * n + 2);
    for k in 0..=n {
        let x = 10f64.powf(d0 as f64 + k as f64 / MATCH_POINTS_PER_DECADE as f64);
        for y in [x, -x] {
            if lo <= y && y <= hi {
                pts.push(y);
            }
        }
    }
    pts
}

/// Compares `target` with `product` on the log grid; rejects on the first
/// pass with the worst point found.
fn pointwise_match(target: &Weight, product: &Weight) -> Result<PointwiseMatch> {
    let mut m = PointwiseMatch {
        points: 0,
        max_rel_error: 0.0,
        worst_x: f64::NAN,
    };
    for x in match_points(target) {
        m.points += 1;
        let err = match (target.evaluate(x), product.evaluate(x)) {
            (Ok(a), Ok(b)) => {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            }
            _ => f64::INFINITY,
        };
        if m.worst_x.is_nan() || err > m.max_rel_error {
            m.max_rel_error = err;
            m.worst_x = x;
        }
    }
    if m.max_rel_error.is_nan() || m.max_rel_error >= MATCH_TOL {
        return Err(Error::Rejected(format!(
            "product {} differs from target {} at x = {} (relative error {:e})",
            product, target, m.worst_x, m.max_rel_error
        )));
    }
    Ok(m)
}

fn require_converged(name: &str, w: &Weight, est: &ConstantEstimate) -> Result<()> {
    match est.status {
        Status::Converged => Ok(()),
        Status::Diverged => Err(Error::Rejected(format!(
            "{name} = {w} is not in the claimed class: constant diverged on {}",
            est.witness
        ))),
        Status::AtResolution => Err(Error::Rejected(format!(
            "{name} = {w} could not be certified at this resolution: estimate {} exceeds the cap",
            est.value
        ))),
    }
}

/// Certifies `target = u · v^{1/r}` with `u ∈ RH_∞`, `v ∈ A_1`.
pub fn certify_rh_factorization(target: &Weight, u: &Weight, v: &Weight, r: f64) -> Result<RhFactorization> {
    certify_rh_factorization_with(target, u, v, r, CertifyOptions::default())
}

pub fn certify_rh_factorization_with(
    target: &Weight,
    u: &Weight,
    v: &Weight,
    r: f64,
    opts: CertifyOptions,
) -> Result<RhFactorization> {
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::InvalidParameter(format!("r must be a finite real > 1, got {r}")));
    }
    let (c1, c2) = rayon::join(|| rhinf_constant(u, &opts.family(u)), || a1_constant(v, &opts.family(v)));
    let (c1, c2) = (c1?, c2?);
    require_converged("u", u, &c1)?;
    require_converged("v", v, &c2)?;
    let product = Weight::product(u.clone(), v.clone(), 1.0 / r)
        .map_err(|e| Error::Rejected(format!("factors cannot be combined: {e}")))?;
    let pointwise = pointwise_match(target, &product)?;
    Ok(RhFactorization {
        target: target.clone(),
        u: u.clone(),
        v: v.clone(),
        r,
        c1,
        c2,
        pointwise,
    })
}

/// Certifies `target = u · v^{1-p}` with `u, v ∈ A_1`.
pub fn certify_ap_factorization(target: &Weight, u: &Weight, v: &Weight, p: f64) -> Result<ApFactorization> {
    certify_ap_factorization_with(target, u, v, p, CertifyOptions::default())
}

pub fn certify_ap_factorization_with(
    target: &Weight,
    u: &Weight,
    v: &Weight,
    p: f64,
    opts: CertifyOptions,
) -> Result<ApFactorization> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!("p must be a finite real > 1, got {p}")));
    }
    let (c, c_star) = rayon::join(|| a1_constant(u, &opts.family(u)), || a1_constant(v, &opts.family(v)));
    let (c, c_star) = (c?, c_star?);
    require_converged("u", u, &c)?;
    require_converged("v", v, &c_star)?;
    let product = Weight::product(u.clone(), v.clone(), 1.0 - p)
        .map_err(|e| Error::Rejected(format!("factors cannot be combined: {e}")))?;
    let pointwise = pointwise_match(target, &product)?;
    Ok(ApFactorization {
        target: target.clone(),
        u: u.clone(),
        v: v.clone(),
        p,
        c,
        c_star,
        pointwise,
    })
}

/// One predicted range with the class it refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `"ap"`, `"rh"`, `"tau"` or `"aq"`.
    pub class: String,
    pub range: IndexRange,
}

/// Ranges implied by a certified factorization, listed side by side.
pub fn predict_ranges(f: &Factorization) -> Result<Vec<Prediction>> {
    Ok(match f {
        Factorization::Rh(rh) => vec![
            Prediction {
                class: "ap".into(),
                range: ap_range_from_rh_factorization(rh.c1.value)?,
            },
            Prediction {
                class: "rh".into(),
                range: rh_upper_from_factorization(rh.r, rh.c2.value)?,
            },
        ],
        Factorization::Ap(ap) => vec![
            Prediction {
                class: "rh".into(),
                range: rh_range_from_ap_factorization(ap.c.value)?,
            },
            Prediction {
                class: "tau".into(),
                range: tau_range(ap.c.value, ap.c_star.value)?,
            },
            Prediction {
                class: "aq".into(),
                range: aq_lower_from_factorization(ap.p, ap.c_star.value)?,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow(a: f64) -> Weight {
        Weight::power(a).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    #[test]
    fn rh_examples() {
        let f = certify_rh_factorization(&pow(-0.5), &Weight::constant(), &pow(-0.75), 1.5).unwrap();
        assert!(close(f.c1.value, 1.0, 1e-12));
        assert!(close(f.c2.value, 4.0, 1e-4));
        assert_eq!(f.pointwise.points, 12 * 1024 + 1);

        let f = certify_rh_factorization(&pow(2.0), &pow(2.0), &Weight::constant(), 2.0).unwrap();
        assert!(close(f.c1.value, 3.0, 1e-4));
        assert!(close(f.c2.value, 1.0, 1e-12));

        match certify_rh_factorization(&pow(-0.5), &Weight::constant(), &pow(-2.0), 1.5) {
            Err(Error::Rejected(msg)) => assert!(msg.contains("not in the claimed class"), "{msg}"),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn ap_examples() {
        let f = certify_ap_factorization(&pow(1.0), &Weight::constant(), &pow(-0.5), 3.0).unwrap();
        assert!(close(f.c_star.value, 2.0, 1e-4));
        let f = certify_ap_factorization(&pow(-0.5), &pow(-0.5), &Weight::constant(), 2.0).unwrap();
        assert!(close(f.c.value, 2.0, 1e-4));
    }

    #[test]
    fn mismatch_reports_witness() {
        match certify_ap_factorization(&pow(1.0), &Weight::constant(), &pow(-0.4), 3.0) {
            Err(Error::Rejected(msg)) => assert!(msg.contains("at x = "), "{msg}"),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn predictions() {
        let f = certify_rh_factorization(&pow(-0.5), &Weight::constant(), &pow(-0.75), 1.5).unwrap();
        let p = predict_ranges(&Factorization::Rh(f)).unwrap();
        assert_eq!(p[0].class, "ap");
        assert!(p[0].range.is_unbounded() && p[0].range.lo == 1.0);
        assert_eq!(p[1].range.lo, 1.5);
        assert!(close(p[1].range.hi, 2.0, 1e-4));

        let f = certify_ap_factorization(&pow(1.0), &Weight::constant(), &pow(-0.5), 3.0).unwrap();
        let p = predict_ranges(&Factorization::Ap(f)).unwrap();
        let aq = p.iter().find(|x| x.class == "aq").unwrap().range;
        assert!(close(aq.lo, 2.0, 1e-4) && aq.hi == 3.0 && aq.lo_open && !aq.hi_open);
    }

    #[test]
    fn constant_weight_predicts_unbounded_ranges() {
        let one = Weight::constant();
        let f = certify_rh_factorization(&one, &one, &one, 2.0).unwrap();
        let p = predict_ranges(&Factorization::Rh(f)).unwrap();
        assert!(p.iter().all(|x| x.range.is_unbounded()));
        let f = certify_ap_factorization(&one, &one, &one, 2.0).unwrap();
        let p = predict_ranges(&Factorization::Ap(f)).unwrap();
        assert!(p[0].range.is_unbounded() && p[1].range.is_unbounded());
        assert_eq!((p[2].range.lo, p[2].range.hi), (1.0, 2.0));
    }

    #[test]
    fn non_unique_factorizations() {
        // x^{-1/2} = (x^{-r/2})^{1/r}: the upper endpoint is 1/α = 2 for every r
        let w = pow(-0.5);
        let mut his = Vec::new();
        for r in [1.5, 1.9] {
            let f = certify_rh_factorization(&w, &Weight::constant(), &pow(-0.5 * r), r).unwrap();
            his.push(predict_ranges(&Factorization::Rh(f)).unwrap()[1].range.hi);
        }
        for hi in his {
            assert!(hi <= 2.0 * (1.0 + 1e-9) && close(hi, 2.0, 1e-3), "{hi}");
        }
    }
}
