//! Distributional (level-set) inequalities behind the `A_1` and `RH_∞`
//! range results, checked with exact level sets.
//!
//! * super-level: `∫_{w>λ} w ≤ c λ |{w>λ}|` for `λ ≥ inf_I w` (reverse Chebyshev);
//! * sub-level: `λ |{w<λ}| ≤ c ∫_{w<λ} w` for `λ ≤ sup_I w`;
//! * the layer-cake identities for the truncation `w_β = max(w, β)` that turn
//!   the sub-level inequality into a negative-moment bound;
//! * the maximal-interval decomposition of a finite union of open intervals.

use serde::{Deserialize, Serialize};

use crate::constants::{float_or_inf, SearchFamily};
use crate::error::{Error, Result};
use crate::weights::{quadrature, Interval, Weight};

/// Default number of λ values per scan.
pub const DEFAULT_LAMBDAS: usize = 256;
/// Relative inward nudge applied to both ends of a λ grid.
pub const NUDGE: f64 = 1e-12;
/// Dilation factors standing in for `σ ↘ 1`.
pub const SIGMA_LADDER: [f64; 4] = [1.5, 1.25, 1.1, 1.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Super,
    Sub,
}

/// One row of a scan; the CSV projection uses exactly these columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub lambda: f64,
    pub measure: f64,
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScan {
    pub kind: LevelKind,
    pub interval: Interval,
    pub records: Vec<LevelRecord>,
    pub worst_ratio: f64,
    pub worst_lambda: f64,
}

impl LevelScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,measure,integral,ratio\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.lambda, r.measure, r.integral, r.ratio));
        }
        out
    }
}

/// `∫_{w>λ} w / (λ |{w>λ}|)` on `I`; `None` for an empty level set.
pub fn super_level_record(w: &Weight, i: &Interval, lambda: f64) -> Result<Option<LevelRecord>> {
    let set = w.super_level(lambda, i)?;
    if set.measure <= 0.0 {
        return Ok(None);
    }
    Ok(Some(LevelRecord {
        lambda,
        measure: set.measure,
        integral: set.integral,
        ratio: set.integral / (lambda * set.measure),
    }))
}

/// `λ |{w<λ}| / ∫_{w<λ} w` on `I`; `None` for an empty level set.
pub fn sub_level_record(w: &Weight, i: &Interval, lambda: f64) -> Result<Option<LevelRecord>> {
    let set = w.sub_level(lambda, i)?;
    if set.measure <= 0.0 {
        return Ok(None);
    }
    let ratio = if set.integral > 0.0 {
        lambda * set.measure / set.integral
    } else {
        f64::INFINITY
    };
    Ok(Some(LevelRecord {
        lambda,
        measure: set.measure,
        integral: set.integral,
        ratio,
    }))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(|k| (l + (h - l) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Finite λ range `[lo, hi]` standing in for `[inf, sup]`: infinite sups are
/// replaced by `max(inf, 1)·1e12`, zero infs by `sup·1e-12`.
fn lambda_span(inf: f64, sup: f64) -> (f64, f64) {
    let hi = if sup.is_finite() { sup } else { inf.max(1.0) * 1e12 };
    let lo = if inf > 0.0 { inf } else { hi * 1e-12 };
    (lo * (1.0 + NUDGE), hi * (1.0 - NUDGE))
}

fn finish(kind: LevelKind, interval: Interval, records: Vec<LevelRecord>) -> LevelScan {
    let (worst_ratio, worst_lambda) = records
        .iter()
        .fold((f64::NEG_INFINITY, f64::NAN), |(r, l), rec| if rec.ratio > r { (rec.ratio, rec.lambda) } else { (r, l) });
    LevelScan {
        kind,
        interval,
        records,
        worst_ratio,
        worst_lambda,
    }
}

/// Record for a weight that is a.e. constant on `I`: the only admissible λ
/// is the common value, with the level set taken as all of `I`.
fn flat_record(w: &Weight, i: &Interval, value: f64) -> Result<LevelRecord> {
    let integral = w.integrate_power(1.0, i)?.value().unwrap_or(f64::INFINITY);
    Ok(LevelRecord {
        lambda: value,
        measure: i.len(),
        integral,
        ratio: integral / (value * i.len()),
    })
}

/// Scans `∫_{w>λ} w / (λ|{w>λ}|)` over `n` log-spaced `λ ∈ [inf_I w, sup_I w)`.
pub fn check_super_level(w: &Weight, i: &Interval, n: usize) -> Result<LevelScan> {
    let inf = w.ess_inf(i)?;
    let sup = w.ess_sup(i)?;
    if inf == sup {
        return Ok(finish(LevelKind::Super, *i, vec![flat_record(w, i, inf)?]));
    }
    let (lo, hi) = lambda_span(inf, sup);
    let mut records = Vec::with_capacity(n);
    for lambda in log_grid(lo, hi, n) {
        if let Some(r) = super_level_record(w, i, lambda)? {
            records.push(r);
        }
    }
    Ok(finish(LevelKind::Super, *i, records))
}

/// Scans `λ|{w<λ}| / ∫_{w<λ} w` over `n` log-spaced `λ ∈ (inf_I w, sup_I w]`.
pub fn check_sub_level(w: &Weight, i: &Interval, n: usize) -> Result<LevelScan> {
    let inf = w.ess_inf(i)?;
    let sup = w.ess_sup(i)?;
    if inf == sup {
        let mut r = flat_record(w, i, sup)?;
        r.ratio = 1.0 / r.ratio;
        return Ok(finish(LevelKind::Sub, *i, vec![r]));
    }
    let (lo, hi) = lambda_span(inf, sup);
    let mut records = Vec::with_capacity(n);
    for lambda in log_grid(lo, hi, n) {
        if let Some(r) = sub_level_record(w, i, lambda)? {
            records.push(r);
        }
    }
    Ok(finish(LevelKind::Sub, *i, records))
}

/// Worst ratio over every interval of a search family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyLevelScan {
    pub kind: LevelKind,
    pub worst_ratio: f64,
    pub worst_interval: Interval,
    pub worst_lambda: f64,
    pub intervals_scanned: usize,
}

/// Runs the super- or sub-level scan on every interval of `family`.
pub fn scan_family(w: &Weight, family: &SearchFamily, kind: LevelKind, n: usize) -> Result<FamilyLevelScan> {
    let intervals = family.intervals(w);
    let mut best: Option<FamilyLevelScan> = None;
    for i in &intervals {
        let scan = match kind {
            LevelKind::Super => check_super_level(w, i, n)?,
            LevelKind::Sub => check_sub_level(w, i, n)?,
        };
        if scan.records.is_empty() {
            continue;
        }
        if best.as_ref().is_none_or(|b| scan.worst_ratio > b.worst_ratio) {
            best = Some(FamilyLevelScan {
                kind,
                worst_ratio: scan.worst_ratio,
                worst_interval: *i,
                worst_lambda: scan.worst_lambda,
                intervals_scanned: 0,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidParameter("no interval produced a non-empty level set".into()))?;
    best.intervals_scanned = intervals.len();
    Ok(best)
}

/// Both sides of the two layer-cake identities for `w_β`, plus the
/// negative-moment bound they yield.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub r: f64,
    pub beta: f64,
    /// `λ_I = sup_I w`.
    pub lambda_sup: f64,
    /// `∫_I w_β^{-(r-2)}`, closed form.
    pub negative_moment: f64,
    /// `∫_β^{λ_I} λ^{1-r} |{w_β<λ} ∩ I| dλ` by quadrature over λ.
    pub left_layer: f64,
    /// `(∫_I w_β^{-(r-2)} − |I| λ_I^{-(r-2)}) / (r-2)`.
    pub left_closed: f64,
    pub left_residual: f64,
    /// `∫_β^∞ λ^{-r} ∫_{{w_β<λ} ∩ I} w_β dλ` by quadrature over λ.
    pub right_layer: f64,
    /// `∫_I w_β^{-(r-2)} / (r-1)`.
    pub right_closed: f64,
    pub right_residual: f64,
    /// Constant used in the sub-level inequality, if supplied.
    pub c: Option<f64>,
    /// `c (r-2) < r-1`.
    pub applicable: bool,
    /// `1 - c (r-2)/(r-1)`.
    #[serde(with = "float_or_inf")]
    pub moment_constant: f64,
    /// `|I| / (C λ_I^{r-2})`.
    #[serde(with = "float_or_inf")]
    pub moment_bound: f64,
    /// `left_layer ≤ c · right_layer`.
    pub layer_inequality_holds: bool,
    /// `negative_moment ≤ moment_bound` (only meaningful when applicable).
    pub moment_bound_holds: bool,
}

/// Quadrature of `g` over `[lo, hi]`, split at `cuts`.
fn integrate_split<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, cuts: &[f64]) -> Result<f64> {
    let mut pts = vec![lo, hi];
    pts.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += quadrature::integrate(&g, w[0], w[1], 1e-12, quadrature::DEFAULT_BUDGET)?;
    }
    Ok(total)
}

fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if b == 0.0 {
        d
    } else {
        d / b.abs()
    }
}

/// Evaluates both layer-cake identities for `w_β` on `I` and, given `c`, the
/// resulting bound on `∫_I w_β^{-(r-2)}`.
pub fn verify_moment_identity(w: &Weight, i: &Interval, r: f64, beta: f64, c: Option<f64>) -> Result<MomentReport> {
    if !(r.is_finite() && r > 2.0) {
        return Err(Error::InvalidParameter(format!("r must exceed 2, got {r}")));
    }
    let lambda_sup = w.ess_sup(i)?;
    if !lambda_sup.is_finite() {
        return Err(Error::InvalidParameter(format!("sup of w on {i} is infinite")));
    }
    if !(beta > 0.0 && beta < lambda_sup) {
        return Err(Error::InvalidParameter(format!("need 0 < beta < sup w = {lambda_sup}, got {beta}")));
    }
    let wb = Weight::truncation(w.clone(), beta)?;
    let alpha = r - 2.0;
    let negative_moment = wb
        .integrate_power(-alpha, i)?
        .value()
        .ok_or_else(|| Error::InvalidParameter("truncated negative moment diverged".into()))?;
    let len = i.len();

    // kinks of λ ↦ |{w_β < λ}| sit at piece-endpoint values of w_β
    let mut cuts: Vec<f64> = Vec::new();
    for p in wb.form().pieces() {
        for x in [p.lo, p.hi] {
            if i.contains(x) {
                if let Ok(v) = wb.form().value(x) {
                    cuts.push(v);
                }
            }
        }
    }

    let measure = |lambda: f64| wb.sub_level(lambda, i).map(|s| s.measure).unwrap_or(f64::NAN);
    let mass = |lambda: f64| wb.sub_level(lambda, i).map(|s| s.integral).unwrap_or(f64::NAN);

    let left_layer = integrate_split(|l| l.powf(1.0 - r) * measure(l), beta, lambda_sup, &cuts)?;
    let left_closed = (negative_moment - len * lambda_sup.powf(-alpha)) / alpha;

    let total_mass = wb.integrate_power(1.0, i)?.value().unwrap_or(f64::INFINITY);
    let tail = total_mass * lambda_sup.powf(1.0 - r) / (r - 1.0);
    let right_layer = integrate_split(|l| l.powf(-r) * mass(l), beta, lambda_sup, &cuts)? + tail;
    let right_closed = negative_moment / (r - 1.0);

    let (applicable, moment_constant, moment_bound, layer_ok, bound_ok) = match c {
        Some(c) => {
            let applicable = c * alpha < r - 1.0;
            let k = 1.0 - c * alpha / (r - 1.0);
            let bound = if applicable { len / (k * lambda_sup.powf(alpha)) } else { f64::INFINITY };
            let layer_ok = left_layer <= c * right_layer * (1.0 + 1e-9);
            let bound_ok = applicable && negative_moment <= bound * (1.0 + 1e-9);
            (applicable, k, bound, layer_ok, bound_ok)
        }
        None => (false, f64::NAN, f64::INFINITY, false, false),
    };

    Ok(MomentReport {
        r,
        beta,
        lambda_sup,
        negative_moment,
        left_layer,
        left_closed,
        left_residual: rel(left_layer, left_closed),
        right_layer,
        right_closed,
        right_residual: rel(right_layer, right_closed),
        c,
        applicable,
        moment_constant,
        moment_bound,
        layer_inequality_holds: layer_ok,
        moment_bound_holds: bound_ok,
    })
}

/// Certificate for one maximal component `I_j` of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCertificate {
    pub component: Interval,
    /// `|I_j ∖ G|`, zero for a genuine component.
    pub uncovered: f64,
    /// `(σ, |σ I_j ∖ G|)` over [`SIGMA_LADDER`].
    pub dilations: Vec<(f64, f64)>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// `|G| = |I|`: handled by the trivial branch, no covering needed.
    pub full: bool,
    pub measure: f64,
    pub components: Vec<ComponentCertificate>,
}

fn overlap_with(g: &[(f64, f64)], a: f64, b: f64) -> f64 {
    g.iter().map(|&(x, y)| (y.min(b) - x.max(a)).max(0.0)).sum()
}

/// Maximal intervals of a normalised finite union of open intervals
/// `G ⊂ I` (sorted, non-empty pieces, separated by positive gaps), each with
/// its dilation certificate.
pub fn interval_components(g: &[(f64, f64)], i: &Interval) -> Result<ComponentReport> {
    for (k, &(a, b)) in g.iter().enumerate() {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("piece {k} ({a}, {b}) is empty")));
        }
        if a < i.a() || b > i.b() {
            return Err(Error::InvalidParameter(format!("piece {k} ({a}, {b}) leaves {i}")));
        }
        if k > 0 && a <= g[k - 1].1 {
            return Err(Error::InvalidParameter(format!(
                "pieces {} and {k} overlap or touch: input is not normalised",
                k - 1
            )));
        }
    }
    let measure: f64 = g.iter().map(|&(a, b)| b - a).sum();
    let full = g.len() == 1 && g[0].0 == i.a() && g[0].1 == i.b();
    let components = g
        .iter()
        .map(|&(a, b)| {
            let comp = Interval::new(a, b).expect("validated");
            let uncovered = comp.len() - overlap_with(g, a, b);
            let dilations: Vec<(f64, f64)> = SIGMA_LADDER
                .iter()
                .map(|&s| {
                    let d = comp.dilate(s);
                    (s, d.len() - overlap_with(g, d.a(), d.b()))
                })
                .collect();
            let certified = uncovered <= 0.0 && dilations.iter().all(|&(_, m)| m > 0.0);
            ComponentCertificate {
                component: comp,
                uncovered: uncovered.max(0.0),
                dilations,
                certified,
            }
        })
        .collect();
    Ok(ComponentReport {
        full,
        measure,
        components,
    })
}
