//! Membership tables over an index grid, bracketing a predicted boundary.

use serde::{Deserialize, Serialize};

use crate::constants::{a1_constant, ap_constant, float_or_inf, rhinf_constant, rhr_constant, SearchFamily, Status};
use crate::error::{Error, Result};
use crate::sharp_ranges::{ap_range_from_rhinf, rh_range_from_a1, tau_range, IndexRange};
use crate::weights::Weight;

/// Distance kept from a predicted endpoint.
pub const ENDPOINT_OFFSET: f64 = 0.05;

/// What the index of a scan means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScanKind {
    /// `A_p` constant of `w` at `p = index`.
    Ap,
    /// `RH_r` constant of `w` at `r = index`.
    Rhr,
    /// `A_p` constant of `w^τ` at `τ = index`, fixed `p`.
    Tau { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: f64,
    #[serde(with = "float_or_inf")]
    pub value: f64,
    pub status: Status,
    /// Whether `index` lies in the predicted range.
    pub predicted_in: Option<bool>,
    /// Grid point this row replaced, when it sat on a predicted endpoint.
    pub shifted_from: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub scan: ScanKind,
    pub weight: Weight,
    pub predicted: Option<IndexRange>,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    /// Rows predicted inside the range whose constant diverged.
    pub fn contradictions(&self) -> Vec<&ScanRow> {
        self.rows
            .iter()
            .filter(|r| r.predicted_in == Some(true) && r.status == Status::Diverged)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value,status,predicted\n");
        for r in &self.rows {
            let status = match r.status {
                Status::Converged => "converged",
                Status::Diverged => "diverged",
                Status::AtResolution => "at-resolution",
            };
            let pred = match r.predicted_in {
                Some(true) => "in",
                Some(false) => "out",
                None => "",
            };
            out.push_str(&format!("{},{},{status},{pred}\n", r.index, r.value));
        }
        out
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Parses `lo:hi:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParameter(format!("grid `{spec}` is not lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && n >= 1) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

/// Range predicted from the weight's own constants: `A_p` from `RH_∞`,
/// `RH_r` from `A_1`, `τ` from `A_1` with the trivial factorization
/// `u = w`, `v ≡ 1`. `None` when the driving constant is not finite.
pub fn predicted_range(w: &Weight, scan: ScanKind, family: &SearchFamily) -> Result<Option<IndexRange>> {
    Ok(match scan {
        ScanKind::Ap => {
            let c = rhinf_constant(w, family)?;
            c.is_converged().then(|| ap_range_from_rhinf(c.value)).transpose()?
        }
        ScanKind::Rhr => {
            let c = a1_constant(w, family)?;
            c.is_converged().then(|| rh_range_from_a1(c.value)).transpose()?
        }
        ScanKind::Tau { .. } => {
            let c = a1_constant(w, family)?;
            c.is_converged().then(|| tau_range(c.value, 1.0)).transpose()?
        }
    })
}

/// Replaces grid points on a finite endpoint of `predicted` with the pair
/// `endpoint ∓ ENDPOINT_OFFSET`.
pub fn avoid_endpoints(indices: &[f64], predicted: Option<&IndexRange>) -> Vec<(f64, Option<f64>)> {
    let ends: Vec<f64> = predicted
        .map(|r| [r.lo, r.hi].into_iter().filter(|e| e.is_finite()).collect())
        .unwrap_or_default();
    let mut out = Vec::new();
    for &x in indices {
        match ends.iter().find(|&&e| (x - e).abs() <= 1e-12 * e.abs().max(1.0)) {
            Some(&e) => {
                out.push((e - ENDPOINT_OFFSET, Some(x)));
                out.push((e + ENDPOINT_OFFSET, Some(x)));
            }
            None => out.push((x, None)),
        }
    }
    out
}

/// Evaluates the constant named by `scan` at every index.
pub fn scan_indices(
    w: &Weight,
    scan: ScanKind,
    indices: &[f64],
    family: &SearchFamily,
    predicted: Option<IndexRange>,
) -> Result<ScanTable> {
    let mut rows = Vec::new();
    for (index, shifted_from) in avoid_endpoints(indices, predicted.as_ref()) {
        let est = match scan {
            ScanKind::Ap => ap_constant(w, index, family)?,
            ScanKind::Rhr => rhr_constant(w, index, family)?,
            ScanKind::Tau { p } => {
                let wt = w.powered(index)?;
                ap_constant(&wt, p, &family_like(family, &wt))?
            }
        };
        rows.push(ScanRow {
            index,
            value: est.value,
            status: est.status,
            predicted_in: predicted.map(|r| r.contains(index)),
            shifted_from,
        });
    }
    Ok(ScanTable {
        scan,
        weight: w.clone(),
        predicted,
        rows,
    })
}

/// Default family for `w` carrying over the depth and cap of `template`.
fn family_like(template: &SearchFamily, w: &Weight) -> SearchFamily {
    SearchFamily::for_weight(w)
        .with_refinement(template.refinement_depth)
        .with_cap(template.cap)
}
