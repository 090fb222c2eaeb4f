//! Characteristic constants `A_1`, `RH_∞`, `A_p`, `RH_r` and the punctured
//! `A_1` constant, estimated as suprema of the defining ratio over interval
//! families.
//!
//! Every reported value is a supremum over a finite (refined) family, i.e. a
//! lower bound for the true constant. Homogeneous weights (`w(λx) = λ^α w(x)`)
//! use a one-parameter shape family anchored at a fixed scale; everything else
//! uses a two-parameter endpoint grid. Intervals with an endpoint at the
//! origin are part of both families, so non-integrable singularities show up
//! as exactly divergent integrals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{Integral, Interval, Weight};

/// Default divergence cap.
pub const DEFAULT_CAP: f64 = 1e6;
/// Growth factor required under one refinement step before a capped value
/// is declared divergent.
pub const GROWTH_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Diverged,
    AtResolution,
}

/// Serde helpers writing non-finite floats as the strings `"inf"` / `"-inf"`.
pub mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

/// Description of the family a supremum was taken over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub family: String,
    pub grid_points: usize,
    pub refinement_depth: usize,
    pub intervals_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    /// Supremum of the ratio over the family; `+∞` when an integral diverged.
    #[serde(with = "float_or_inf")]
    pub value: f64,
    pub status: Status,
    /// Interval attaining `value`.
    pub witness: Interval,
    pub resolution: Resolution,
    /// Always true: the value is a supremum over a finite family.
    pub lower_bound: bool,
}

impl ConstantEstimate {
    pub fn is_converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn is_diverged(&self) -> bool {
        self.status == Status::Diverged
    }
}

/// The set of admissible intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    /// Exclude intervals with the origin in their interior.
    pub punctured: bool,
}

impl Domain {
    pub fn of(w: &Weight) -> Self {
        let (lo, hi) = w.domain();
        Domain {
            lo,
            hi,
            punctured: false,
        }
    }

    fn admits(&self, a: f64, b: f64) -> bool {
        a >= self.lo && b <= self.hi && a < b && !(self.punctured && a < 0.0 && b > 0.0)
    }

    fn describe(&self) -> String {
        let base = match (self.lo, self.hi) {
            (lo, hi) if lo == 0.0 && hi == f64::INFINITY => "R+".to_string(),
            (lo, hi) if lo == f64::NEG_INFINITY && hi == f64::INFINITY => "R".to_string(),
            (lo, hi) if lo == f64::NEG_INFINITY && hi == 0.0 => "R-".to_string(),
            (lo, hi) => format!("[{lo}, {hi}]"),
        };
        if self.punctured && self.lo < 0.0 && self.hi > 0.0 {
            format!("{base} minus 0")
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Parameterization {
    /// Intervals normalised so the endpoint of largest modulus is `±anchor`;
    /// the other endpoint runs over `0` and `points` log-spaced ratios in
    /// `[t_min, 1)` on each admissible side. Valid for homogeneous weights.
    Shape { points: usize, t_min: f64, anchor: f64 },
    /// All endpoint pairs from `{0, ±log-spaced [lo, hi], breakpoints,
    /// domain endpoints}`.
    Grid { points: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchFamily {
    pub domain: Domain,
    pub param: Parameterization,
    pub refinement_depth: usize,
    pub cap: f64,
}

const REFINE_POINTS: usize = 16;

impl SearchFamily {
    /// Default family: shape reduction for homogeneous weights, otherwise a
    /// 64-point two-parameter grid over `[1e-6, 1e6]`; refinement depth 4.
    pub fn for_weight(w: &Weight) -> Self {
        Self::on_domain(w, Domain::of(w))
    }

    /// Default family restricted to intervals avoiding the origin.
    pub fn punctured_for(w: &Weight) -> Self {
        Self::on_domain(
            w,
            Domain {
                punctured: true,
                ..Domain::of(w)
            },
        )
    }

    fn on_domain(w: &Weight, domain: Domain) -> Self {
        let param = if w.form().homogeneous_exponent().is_some() {
            Parameterization::Shape {
                points: 256,
                t_min: 1e-12,
                anchor: 1.0,
            }
        } else {
            Parameterization::Grid {
                points: 64,
                lo: 1e-6,
                hi: 1e6,
            }
        };
        SearchFamily {
            domain,
            param,
            refinement_depth: 4,
            cap: DEFAULT_CAP,
        }
    }

    pub fn with_refinement(mut self, depth: usize) -> Self {
        self.refinement_depth = depth;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_points(mut self, n: usize) -> Self {
        match &mut self.param {
            Parameterization::Shape { points, .. } | Parameterization::Grid { points, .. } => *points = n,
        }
        self
    }

    /// One refinement step of the family itself: denser and wider.
    pub fn refined(&self) -> Self {
        let param = match self.param {
            Parameterization::Shape { points, t_min, anchor } => Parameterization::Shape {
                points: points * 2,
                t_min: (t_min * 1e-6).max(1e-300),
                anchor,
            },
            Parameterization::Grid { points, lo, hi } => Parameterization::Grid {
                points: points * 2,
                lo: lo * 1e-3,
                hi: hi * 1e3,
            },
        };
        SearchFamily {
            param,
            refinement_depth: self.refinement_depth + 1,
            ..*self
        }
    }

    fn points(&self) -> usize {
        match self.param {
            Parameterization::Shape { points, .. } | Parameterization::Grid { points, .. } => points,
        }
    }

    fn describe(&self) -> String {
        match self.param {
            Parameterization::Shape { points, t_min, anchor } => format!(
                "shape family on {}: {points} log-spaced ratios in [{t_min:e}, 1) plus 0, anchor {anchor}",
                self.domain.describe()
            ),
            Parameterization::Grid { points, lo, hi } => format!(
                "endpoint grid on {}: {points} log-spaced scales in [{lo:e}, {hi:e}] plus 0 and breakpoints",
                self.domain.describe()
            ),
        }
    }

    /// Every interval of the unrefined family.
    pub fn intervals(&self, w: &Weight) -> Vec<Interval> {
        match self.param {
            Parameterization::Shape { .. } => self
                .shape_axes()
                .iter()
                .flat_map(|axis| axis.params.iter().filter_map(|&t| axis.interval(t)))
                .collect(),
            Parameterization::Grid { .. } => {
                let pts = self.grid_points(w);
                let mut out = Vec::new();
                for (i, &a) in pts.iter().enumerate() {
                    for &b in &pts[i + 1..] {
                        if self.domain.admits(a, b) {
                            out.push(Interval::new(a, b).expect("sorted distinct finite points"));
                        }
                    }
                }
                out
            }
        }
    }

    fn shape_axes(&self) -> Vec<ShapeAxis> {
        let Parameterization::Shape { points, t_min, anchor } = self.param else {
            return Vec::new();
        };
        let ratios: Vec<f64> = std::iter::once(0.0).chain(log_space(t_min, 1.0, points, false)).collect();
        let d = self.domain;
        let has_pos = d.hi > 0.0;
        let has_neg = d.lo < 0.0;
        let crossing = has_pos && has_neg && !d.punctured;
        let mut axes = Vec::new();
        // anchored at +A, free left endpoint a = s·A
        if has_pos {
            let mut params: Vec<f64> = ratios.clone();
            if crossing {
                params.extend(ratios[1..].iter().map(|t| -t));
                params.push(-1.0);
            }
            params.sort_by(f64::total_cmp);
            axes.push(ShapeAxis {
                anchor,
                right_anchored: true,
                params,
            });
        }
        // anchored at -A, free right endpoint b = s·A
        if has_neg {
            let mut params: Vec<f64> = ratios.iter().map(|t| -t).collect();
            if crossing {
                params.extend(ratios[1..].iter().copied());
            }
            params.sort_by(f64::total_cmp);
            axes.push(ShapeAxis {
                anchor,
                right_anchored: false,
                params,
            });
        }
        axes
    }

    fn grid_points(&self, w: &Weight) -> Vec<f64> {
        let Parameterization::Grid { points, lo, hi } = self.param else {
            return Vec::new();
        };
        let d = self.domain;
        let mut pts: Vec<f64> = Vec::new();
        for x in log_space(lo, hi, points, true) {
            pts.push(x);
            pts.push(-x);
        }
        pts.push(0.0);
        pts.extend(w.form().breakpoints());
        if d.lo.is_finite() {
            pts.push(d.lo);
        }
        if d.hi.is_finite() {
            pts.push(d.hi);
        }
        if d.lo.is_finite() && d.hi.is_finite() {
            let n = points.max(2);
            pts.extend((0..n).map(|i| d.lo + (d.hi - d.lo) * i as f64 / (n - 1) as f64));
        }
        pts.retain(|&x| x >= d.lo && x <= d.hi && x.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

struct ShapeAxis {
    anchor: f64,
    right_anchored: bool,
    params: Vec<f64>,
}

impl ShapeAxis {
    fn interval(&self, s: f64) -> Option<Interval> {
        let (a, b) = if self.right_anchored {
            (s * self.anchor, self.anchor)
        } else {
            (-self.anchor, s * self.anchor)
        };
        Interval::new(a, b).ok()
    }
}

/// `n` points log-spaced from `lo` towards `hi`; `hi` itself included only
/// when `inclusive`.
fn log_space(lo: f64, hi: f64, n: usize, inclusive: bool) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.ln(), hi.ln());
    let denom = if inclusive { (n.max(2) - 1) as f64 } else { n as f64 };
    (0..n).map(move |i| (l + (h - l) * i as f64 / denom).exp())
}

/// Points strictly between `lo` and `hi`, log-spaced when both are positive
/// (or both negative), linear otherwise.
fn subdivide(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let same_sign = (lo > 0.0 && hi > 0.0) || (lo < 0.0 && hi < 0.0);
    (1..=n)
        .map(|i| {
            let u = i as f64 / (n + 1) as f64;
            if same_sign {
                let sign = lo.signum();
                sign * ((lo.abs().ln() + (hi.abs().ln() - lo.abs().ln()) * u).exp())
            } else {
                lo + (hi - lo) * u
            }
        })
        .filter(|&x| x > lo.min(hi) && x < lo.max(hi))
        .collect()
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    interval: Interval,
}

impl Best {
    /// Larger value wins; ties go to the smaller left endpoint.
    fn better(&self, other: &Best) -> bool {
        other.value > self.value || (other.value == self.value && other.interval.a() < self.interval.a())
    }
}

/// Evaluates `ratio` on every interval, concurrently, and reduces in input
/// order so the result matches a sequential sweep.
fn sweep<F>(intervals: &[Interval], ratio: &F) -> Result<Option<Best>>
where
    F: Fn(&Interval) -> Result<f64> + Sync,
{
    let values: Vec<Result<f64>> = intervals.par_iter().map(ratio).collect();
    let mut best: Option<Best> = None;
    for (i, v) in intervals.iter().zip(values) {
        let cand = Best {
            value: v?,
            interval: *i,
        };
        if cand.value.is_nan() {
            return Err(Error::InvalidParameter(format!("ratio is undefined on {i}")));
        }
        match &best {
            Some(b) if !b.better(&cand) => {}
            _ => best = Some(cand),
        }
    }
    Ok(best)
}

fn merge(best: Option<Best>, cand: Option<Best>) -> Option<Best> {
    match (best, cand) {
        (Some(b), Some(c)) => Some(if b.better(&c) { c } else { b }),
        (b, None) => b,
        (None, c) => c,
    }
}

/// Supremum of `ratio` over the family, with local refinement around the
/// running best. Returns the best value, its interval and the evaluation count.
fn family_sup<F>(family: &SearchFamily, w: &Weight, ratio: &F) -> Result<(Best, usize)>
where
    F: Fn(&Interval) -> Result<f64> + Sync,
{
    let mut evaluated = 0;
    let mut best: Option<Best> = None;
    match family.param {
        Parameterization::Shape { .. } => {
            for axis in family.shape_axes() {
                let intervals: Vec<Interval> = axis.params.iter().filter_map(|&s| axis.interval(s)).collect();
                evaluated += intervals.len();
                let mut axis_best = sweep(&intervals, ratio)?;
                if axis_best.is_none() {
                    continue;
                }
                // bracket around the best parameter, then zoom
                let param_of = |iv: &Interval| {
                    if axis.right_anchored {
                        iv.a() / axis.anchor
                    } else {
                        iv.b() / axis.anchor
                    }
                };
                let mut sorted = axis.params.clone();
                for _ in 0..family.refinement_depth {
                    let Some(b) = axis_best else { break };
                    if !b.value.is_finite() {
                        break;
                    }
                    let s = param_of(&b.interval);
                    let idx = sorted.partition_point(|&x| x < s);
                    let lo = if idx > 0 { sorted[idx - 1] } else { s };
                    let hi = sorted.get(idx + 1).copied().unwrap_or(s);
                    let mut sub = subdivide(lo, s, REFINE_POINTS / 2);
                    sub.extend(subdivide(s, hi, REFINE_POINTS / 2));
                    let intervals: Vec<Interval> = sub.iter().filter_map(|&x| axis.interval(x)).collect();
                    evaluated += intervals.len();
                    axis_best = merge(axis_best, sweep(&intervals, ratio)?);
                    sorted.extend(sub);
                    sorted.sort_by(f64::total_cmp);
                }
                best = merge(best, axis_best);
            }
        }
        Parameterization::Grid { .. } => {
            let pts = family.grid_points(w);
            let intervals = family.intervals(w);
            evaluated += intervals.len();
            best = sweep(&intervals, ratio)?;
            let mut a_pts = pts.clone();
            let mut b_pts = pts;
            for _ in 0..family.refinement_depth {
                let Some(b) = best else { break };
                if !b.value.is_finite() {
                    break;
                }
                let local = |pts: &Vec<f64>, x: f64| {
                    let idx = pts.partition_point(|&p| p < x);
                    let lo = if idx > 0 { pts[idx - 1] } else { x };
                    let hi = pts.get(idx + 1).copied().unwrap_or(x);
                    let mut sub = subdivide(lo, x, 4);
                    sub.push(x);
                    sub.extend(subdivide(x, hi, 4));
                    sub
                };
                let sa = local(&a_pts, b.interval.a());
                let sb = local(&b_pts, b.interval.b());
                let mut intervals = Vec::new();
                for &a in &sa {
                    for &bb in &sb {
                        if family.domain.admits(a, bb) {
                            if let Ok(iv) = Interval::new(a, bb) {
                                intervals.push(iv);
                            }
                        }
                    }
                }
                evaluated += intervals.len();
                best = merge(best, sweep(&intervals, ratio)?);
                a_pts.extend(sa);
                a_pts.sort_by(f64::total_cmp);
                a_pts.dedup();
                b_pts.extend(sb);
                b_pts.sort_by(f64::total_cmp);
                b_pts.dedup();
            }
        }
    }
    let best = best.ok_or_else(|| Error::InvalidParameter("search family contains no admissible interval".into()))?;
    Ok((best, evaluated))
}

/// Supremum of an arbitrary interval ratio over a family, with the
/// divergence policy applied: an infinite ratio (divergent integral, zero
/// infimum, unbounded supremum) is `Diverged` outright; a finite value above
/// the cap is `Diverged` only if one refinement step of the family grows it
/// at least [`GROWTH_FACTOR`]-fold, else `AtResolution`.
pub fn estimate_sup<F>(w: &Weight, family: &SearchFamily, ratio: F) -> Result<ConstantEstimate>
where
    F: Fn(&Interval) -> Result<f64> + Sync,
{
    let (best, evaluated) = family_sup(family, w, &ratio)?;
    let resolution = Resolution {
        family: family.describe(),
        grid_points: family.points(),
        refinement_depth: family.refinement_depth,
        intervals_evaluated: evaluated,
    };
    let (value, witness, status) = if !best.value.is_finite() {
        (f64::INFINITY, best.interval, Status::Diverged)
    } else if best.value > family.cap {
        let finer = family.refined();
        let (next, _) = family_sup(&finer, w, &ratio)?;
        if next.value >= GROWTH_FACTOR * best.value {
            (next.value, next.interval, Status::Diverged)
        } else {
            (best.value, best.interval, Status::AtResolution)
        }
    } else {
        (best.value.max(1.0), best.interval, Status::Converged)
    };
    Ok(ConstantEstimate {
        value,
        status,
        witness,
        resolution,
        lower_bound: true,
    })
}

fn finite_or_inf(i: Integral) -> f64 {
    i.value().unwrap_or(f64::INFINITY)
}

/// `avg_I w / inf_I w`.
pub fn a1_ratio(w: &Weight, i: &Interval) -> Result<f64> {
    let avg = finite_or_inf(w.average_power(1.0, i)?);
    let inf = w.ess_inf(i)?;
    Ok(if inf == 0.0 || avg.is_infinite() { f64::INFINITY } else { avg / inf })
}

/// `sup_I w / avg_I w`.
pub fn rhinf_ratio(w: &Weight, i: &Interval) -> Result<f64> {
    let avg = finite_or_inf(w.average_power(1.0, i)?);
    let sup = w.ess_sup(i)?;
    Ok(if sup.is_infinite() || avg.is_infinite() { f64::INFINITY } else { sup / avg })
}

fn check_index(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be a finite real > 1, got {v}")))
    }
}

/// `avg_I w · (avg_I w^{1-p'})^{p-1}`.
pub fn ap_ratio(w: &Weight, p: f64, i: &Interval) -> Result<f64> {
    check_index("p", p)?;
    let avg = finite_or_inf(w.average_power(1.0, i)?);
    let dual = finite_or_inf(w.average_power(-1.0 / (p - 1.0), i)?);
    if avg.is_infinite() || dual.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(avg * dual.powf(p - 1.0))
}

/// `(avg_I w^r)^{1/r} / avg_I w`.
pub fn rhr_ratio(w: &Weight, r: f64, i: &Interval) -> Result<f64> {
    check_index("r", r)?;
    let avg = finite_or_inf(w.average_power(1.0, i)?);
    let avg_r = finite_or_inf(w.average_power(r, i)?);
    if avg.is_infinite() || avg_r.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(avg_r.powf(1.0 / r) / avg)
}

pub fn a1_constant(w: &Weight, family: &SearchFamily) -> Result<ConstantEstimate> {
    estimate_sup(w, family, |i| a1_ratio(w, i))
}

pub fn rhinf_constant(w: &Weight, family: &SearchFamily) -> Result<ConstantEstimate> {
    estimate_sup(w, family, |i| rhinf_ratio(w, i))
}

pub fn ap_constant(w: &Weight, p: f64, family: &SearchFamily) -> Result<ConstantEstimate> {
    check_index("p", p)?;
    estimate_sup(w, family, |i| ap_ratio(w, p, i))
}

pub fn rhr_constant(w: &Weight, r: f64, family: &SearchFamily) -> Result<ConstantEstimate> {
    check_index("r", r)?;
    estimate_sup(w, family, |i| rhr_ratio(w, r, i))
}

/// `A_1` constant over intervals not containing the origin in their interior.
pub fn punctured_a1_constant(w: &Weight) -> Result<ConstantEstimate> {
    a1_constant(w, &SearchFamily::punctured_for(w))
}

/// One interval's outcome in [`doubling_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingRecord {
    pub interval: Interval,
    /// `(1/|I|) ∫_I w^p`.
    pub average: f64,
    /// `(2/|I_0|) ∫_{I_0} w^p` with `I_0 = [-m, m]`, `m = max(|a|, |b|)`.
    pub doubled_hull_average: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub p: f64,
    pub records: Vec<DoublingRecord>,
    pub all_hold: bool,
}

/// For intervals straddling the origin, compares the `w^p` average against
/// twice the average over the symmetric hull `I_0`, the first step of
/// transferring half-line reverse Hölder bounds to the whole line.
pub fn doubling_check(w: &Weight, p: f64, intervals: &[Interval]) -> Result<DoublingReport> {
    let mut records = Vec::new();
    for i in intervals.iter().filter(|i| i.a() < 0.0 && i.b() > 0.0) {
        let m = i.a().abs().max(i.b());
        let hull = Interval::new(-m, m)?;
        let average = finite_or_inf(w.average_power(p, i)?);
        let doubled_hull_average = 2.0 * finite_or_inf(w.average_power(p, &hull)?);
        records.push(DoublingRecord {
            interval: *i,
            average,
            doubled_hull_average,
            holds: average <= doubled_hull_average * (1.0 + 1e-12),
        });
    }
    let all_hold = records.iter().all(|r| r.holds);
    Ok(DoublingReport { p, records, all_hold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Piece;

    fn default(w: &Weight) -> SearchFamily {
        SearchFamily::for_weight(w)
    }

    #[test]
    fn a1_of_power() {
        let w = Weight::power(-0.5).unwrap();
        let e = a1_constant(&w, &default(&w)).unwrap();
        assert_eq!(e.status, Status::Converged);
        assert!((e.value - 2.0).abs() < 1e-12);
        assert_eq!(e.witness.a(), 0.0);
        let one = Weight::constant();
        assert_eq!(a1_constant(&one, &default(&one)).unwrap().value, 1.0);
    }

    #[test]
    fn a1_of_increasing_power_diverges() {
        let w = Weight::power(0.5).unwrap();
        assert!(a1_constant(&w, &default(&w)).unwrap().is_diverged());
    }

    #[test]
    fn rhinf_of_powers() {
        for (alpha, c) in [(2.0, 3.0), (1.0, 2.0), (0.0, 1.0)] {
            let w = Weight::power(alpha).unwrap();
            let e = rhinf_constant(&w, &default(&w)).unwrap();
            assert!((e.value - c).abs() < 1e-12, "alpha {alpha}: {}", e.value);
        }
    }

    #[test]
    fn ap_examples() {
        let w = Weight::power(1.0).unwrap();
        let e = ap_constant(&w, 3.0, &default(&w)).unwrap();
        // sup over t of 2(1+t)/(1+√t)^2 is attained at t = 0
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!(ap_constant(&w, 2.0, &default(&w)).unwrap().is_diverged());
        let one = Weight::constant();
        assert_eq!(ap_constant(&one, 1.7, &default(&one)).unwrap().value, 1.0);
    }

    #[test]
    fn ap_shape_oracle() {
        // independent closed form of the A_3 ratio of x on [t, 1]
        let oracle = |t: f64| 2.0 * (1.0 + t) / (1.0 + t.sqrt()).powi(2);
        let w = Weight::power(1.0).unwrap();
        for t in [0.0, 1e-6, 0.01, 0.3, 0.9] {
            let r = ap_ratio(&w, 3.0, &Interval::new(t, 1.0).unwrap()).unwrap();
            assert!((r - oracle(t)).abs() < 1e-12 * oracle(t), "t={t}");
        }
    }

    #[test]
    fn rhr_examples() {
        let w = Weight::power(-0.5).unwrap();
        assert!(rhr_constant(&w, 2.1, &default(&w)).unwrap().is_diverged());
        let e = rhr_constant(&w, 1.5, &default(&w)).unwrap();
        assert!(e.is_converged());
        // shape-grid oracle: sup at t = 0, 4^{2/3}/2
        assert!((e.value - 1.259_921_049_894_873_2).abs() < 1e-12);
        let one = Weight::constant();
        assert_eq!(rhr_constant(&one, 3.0, &default(&one)).unwrap().value, 1.0);
    }

    #[test]
    fn invalid_indices_rejected() {
        let w = Weight::constant();
        assert!(ap_constant(&w, 1.0, &default(&w)).is_err());
        assert!(rhr_constant(&w, f64::NAN, &default(&w)).is_err());
    }

    #[test]
    fn punctured_vs_full_line() {
        let w = Weight::abs_power(-0.5).unwrap();
        let punct = punctured_a1_constant(&w).unwrap();
        assert!((punct.value - 2.0).abs() < 1e-12);
        let full = a1_constant(&w, &default(&w)).unwrap();
        // sup of 2(1+u)/(1+u^2) over u = sqrt(|a|/b) in [0,1] is 1 + √2
        assert!((full.value - (1.0 + 2f64.sqrt())).abs() < 1e-6, "{}", full.value);
        assert!(full.value <= 4.0);
        assert!(full.witness.a() < 0.0 && full.witness.b() > 0.0);
    }

    fn step_weight() -> Weight {
        Weight::piecewise(vec![
            Piece {
                lo: 0.0,
                hi: 1.0,
                exponent: 0.0,
                scale: 1.0,
            },
            Piece {
                lo: 1.0,
                hi: f64::INFINITY,
                exponent: 0.0,
                scale: 2.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn piecewise_a1_matches_brute_force_grid() {
        // oracle: dense endpoint grid with its own closed-form ratio
        let ratio = |a: f64, b: f64| {
            let mass = (b.min(1.0) - a.min(1.0)) + 2.0 * (b.max(1.0) - a.max(1.0));
            let inf = if a < 1.0 { 1.0 } else { 2.0 };
            mass / (b - a) / inf
        };
        let mut pts: Vec<f64> = (0..=400).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 400.0)).collect();
        pts.push(0.0);
        pts.push(1.0);
        pts.sort_by(f64::total_cmp);
        let mut oracle: f64 = 0.0;
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                oracle = oracle.max(ratio(a, b));
            }
        }
        let w = step_weight();
        let e = a1_constant(&w, &default(&w)).unwrap();
        assert!(e.is_converged());
        assert!(e.value <= 2.0);
        assert!((e.value - oracle).abs() < 1e-5, "estimate {} oracle {oracle}", e.value);
    }

    #[test]
    fn cap_without_growth_is_at_resolution() {
        // x^{-1/2}: ratio 2 everywhere near 0; cap below it, refinement cannot double it
        let w = Weight::power(-0.5).unwrap();
        let fam = default(&w).with_cap(1.5);
        assert_eq!(a1_constant(&w, &fam).unwrap().status, Status::AtResolution);
    }

    #[test]
    fn witness_reproduces_value() {
        let w = step_weight();
        let e = rhinf_constant(&w, &default(&w)).unwrap();
        let again = rhinf_ratio(&w, &e.witness).unwrap();
        assert!((again - e.value).abs() <= 1e-9 * e.value);
    }

    #[test]
    fn doubling_step_holds_for_abs_power() {
        let w = Weight::abs_power(-0.5).unwrap();
        let fam = default(&w);
        let report = doubling_check(&w, 1.5, &fam.intervals(&w)).unwrap();
        assert!(!report.records.is_empty());
        assert!(report.all_hold);
    }

    #[test]
    fn estimate_serializes_infinite_value() {
        let w = Weight::power(-0.5).unwrap();
        let e = rhr_constant(&w, 2.5, &default(&w)).unwrap();
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"value\":\"inf\""));
        let back: ConstantEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.value, f64::INFINITY);
    }
}
