//! Symbolic weights and their calculus.
//!
//! A [`Weight`] is built from power laws by products, real exponents and
//! truncation from below. The family is closed under those operations in
//! piecewise-power normal form ([`PiecewiseForm`]), so every integral,
//! essential extremum and level set is computed in closed form. An adaptive
//! quadrature route ([`Weight::integrate_power_adaptive`]) is kept as an
//! independent cross-check.

mod form;
pub mod parse;
pub mod quadrature;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use form::{LevelSet, Piece, PiecewiseForm};

/// A finite interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }

    /// Intersection, if it has positive length.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let a = self.a.max(other.a);
        let b = self.b.min(other.b);
        (a < b).then_some(Interval { a, b })
    }

    /// The concentric interval of `factor` times the length.
    pub fn dilate(&self, factor: f64) -> Interval {
        let half = 0.5 * factor * self.len();
        let c = self.midpoint();
        Interval {
            a: c - half,
            b: c + half,
        }
    }

    pub fn scale(&self, lambda: f64) -> Interval {
        Interval {
            a: self.a * lambda,
            b: self.b * lambda,
        }
    }

    /// Clips to `[lo, hi]`; `None` if nothing of positive length remains.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Interval> {
        let a = self.a.max(lo);
        let b = self.b.min(hi);
        (a < b).then_some(Interval { a, b })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

/// Result of an integral: divergence is an ordinary value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integral {
    Finite(f64),
    Divergent,
}

impl Integral {
    pub fn value(self) -> Option<f64> {
        match self {
            Integral::Finite(v) => Some(v),
            Integral::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Integral::Divergent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Inf,
    Sup,
}

/// Piecewise power with user-supplied pieces; validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePower {
    pieces: Vec<Piece>,
}

impl PiecewisePower {
    /// Pieces must be sorted, contiguous and have positive finite scales.
    /// Overlaps and gaps are rejected.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidWeight("piecewise weight needs at least one piece".into()));
        }
        for p in &pieces {
            if p.lo.is_nan() || p.hi.is_nan() || p.lo >= p.hi {
                return Err(Error::InvalidWeight(format!("piece [{}, {}] is empty", p.lo, p.hi)));
            }
            if !(p.scale.is_finite() && p.scale > 0.0) {
                return Err(Error::InvalidWeight(format!("piece scale {} must be positive", p.scale)));
            }
            if !p.exponent.is_finite() {
                return Err(Error::InvalidWeight(format!("piece exponent {} is not finite", p.exponent)));
            }
        }
        for w in pieces.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::InvalidWeight(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
            if w[1].lo > w[0].hi {
                return Err(Error::InvalidWeight(format!(
                    "gap between {} and {}: the domain must be an interval",
                    w[0].hi, w[1].lo
                )));
            }
        }
        Ok(PiecewisePower { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
}

/// The variants of the symbolic family.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `x^α` on `[0, ∞)`.
    Power(f64),
    /// `|x|^α` on ℝ.
    AbsPower(f64),
    /// `scale·|x|^α` on each piece.
    Piecewise(PiecewisePower),
    /// `base · factor^exponent`.
    Product {
        base: Box<Weight>,
        factor: Box<Weight>,
        exponent: f64,
    },
    /// `max(base, floor)`.
    Truncation { base: Box<Weight>, floor: f64 },
}

/// An immutable weight together with its cached normal form.
#[derive(Debug, Clone)]
pub struct Weight {
    kind: WeightKind,
    form: PiecewiseForm,
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight(format!("{name} {v} is not finite")))
    }
}

impl Weight {
    pub fn power(alpha: f64) -> Result<Self> {
        finite("exponent", alpha)?;
        let form = PiecewiseForm::from_pieces(vec![Piece {
            lo: 0.0,
            hi: f64::INFINITY,
            exponent: alpha,
            scale: 1.0,
        }]);
        Ok(Weight {
            kind: WeightKind::Power(alpha),
            form,
        })
    }

    pub fn abs_power(alpha: f64) -> Result<Self> {
        finite("exponent", alpha)?;
        let form = PiecewiseForm::from_pieces(vec![Piece {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            exponent: alpha,
            scale: 1.0,
        }]);
        Ok(Weight {
            kind: WeightKind::AbsPower(alpha),
            form,
        })
    }

    /// The constant weight 1 on `[0, ∞)`.
    pub fn constant() -> Self {
        Self::power(0.0).expect("zero exponent is valid")
    }

    pub fn piecewise(pieces: Vec<Piece>) -> Result<Self> {
        let pw = PiecewisePower::new(pieces)?;
        let form = PiecewiseForm::from_pieces(pw.pieces.clone());
        Ok(Weight {
            kind: WeightKind::Piecewise(pw),
            form,
        })
    }

    pub fn product(base: Weight, factor: Weight, exponent: f64) -> Result<Self> {
        finite("product exponent", exponent)?;
        let form = base.form.mul(&factor.form.pow(exponent))?;
        Ok(Weight {
            kind: WeightKind::Product {
                base: Box::new(base),
                factor: Box::new(factor),
                exponent,
            },
            form,
        })
    }

    pub fn truncation(base: Weight, floor: f64) -> Result<Self> {
        if !(floor.is_finite() && floor > 0.0) {
            return Err(Error::InvalidWeight(format!("truncation floor {floor} must be positive")));
        }
        let form = base.form.truncate(floor);
        Ok(Weight {
            kind: WeightKind::Truncation {
                base: Box::new(base),
                floor,
            },
            form,
        })
    }

    /// `self^tau` on the same domain, as `|x|^0 · self^tau`.
    pub fn powered(&self, tau: f64) -> Result<Self> {
        Self::product(Self::abs_power(0.0)?, self.clone(), tau)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn form(&self) -> &PiecewiseForm {
        &self.form
    }

    /// Closure of the domain, `(lo, hi)`, possibly infinite.
    pub fn domain(&self) -> (f64, f64) {
        self.form.domain()
    }

    /// Pointwise value, computed recursively from the variant tree (not from
    /// the normal form).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo <= x && x <= hi) {
            return Err(Error::OutsideDomain { x, lo, hi });
        }
        match &self.kind {
            WeightKind::Power(alpha) | WeightKind::AbsPower(alpha) => power_at(x.abs(), *alpha, x),
            WeightKind::Piecewise(pw) => {
                let p = pw
                    .pieces
                    .iter()
                    .find(|p| p.lo <= x && x <= p.hi)
                    .ok_or(Error::OutsideDomain { x, lo, hi })?;
                Ok(p.scale * power_at(x.abs(), p.exponent, x)?)
            }
            WeightKind::Product {
                base,
                factor,
                exponent,
            } => {
                let u = base.evaluate(x)?;
                let v = factor.evaluate(x)?;
                let ve = if *exponent == 0.0 { 1.0 } else { v.powf(*exponent) };
                if ve.is_infinite() {
                    return Err(Error::Singular { x });
                }
                Ok(u * ve)
            }
            WeightKind::Truncation { base, floor } => Ok(base.evaluate(x)?.max(*floor)),
        }
    }

    fn check_interval(&self, i: &Interval) -> Result<()> {
        let (lo, hi) = self.domain();
        if i.a < lo || i.b > hi {
            return Err(Error::IntervalOutsideDomain {
                a: i.a,
                b: i.b,
                lo,
                hi,
            });
        }
        Ok(())
    }

    /// Exact `∫_I w^s`, or `Divergent` at a non-integrable singularity.
    pub fn integrate_power(&self, s: f64, i: &Interval) -> Result<Integral> {
        self.form.integral(s, i.a, i.b)
    }

    /// `(1/|I|) ∫_I w^s`.
    pub fn average_power(&self, s: f64, i: &Interval) -> Result<Integral> {
        Ok(match self.integrate_power(s, i)? {
            Integral::Finite(v) => Integral::Finite(v / i.len()),
            Integral::Divergent => Integral::Divergent,
        })
    }

    /// `∫_I w^s` by adaptive quadrature on pointwise values. Fails with
    /// [`Error::AtResolution`] when the tolerance is not met within the
    /// subdivision budget, which is what a divergent integral produces.
    pub fn integrate_power_adaptive(&self, s: f64, i: &Interval, rel_tol: f64) -> Result<f64> {
        self.check_interval(i)?;
        let f = |x: f64| self.evaluate(x).map(|v| v.powf(s)).unwrap_or(f64::NAN);
        // split at breakpoints so each panel is smooth
        let mut cuts = vec![i.a, i.b];
        cuts.extend(self.form.breakpoints().into_iter().filter(|&x| x > i.a && x < i.b));
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += quadrature::integrate(f, w[0], w[1], rel_tol, quadrature::DEFAULT_BUDGET)?;
        }
        Ok(total)
    }

    /// Essential infimum or supremum over `I`; may be `0` or `+∞`.
    pub fn extremum(&self, i: &Interval, which: ExtremumKind) -> Result<f64> {
        match which {
            ExtremumKind::Inf => self.form.ess_inf(i.a, i.b),
            ExtremumKind::Sup => self.form.ess_sup(i.a, i.b),
        }
    }

    pub fn ess_inf(&self, i: &Interval) -> Result<f64> {
        self.form.ess_inf(i.a, i.b)
    }

    pub fn ess_sup(&self, i: &Interval) -> Result<f64> {
        self.form.ess_sup(i.a, i.b)
    }

    /// `{x ∈ I : w(x) > λ}`.
    pub fn super_level(&self, lambda: f64, i: &Interval) -> Result<LevelSet> {
        self.form.level_set(lambda, i.a, i.b, true)
    }

    /// `{x ∈ I : w(x) < λ}`.
    pub fn sub_level(&self, lambda: f64, i: &Interval) -> Result<LevelSet> {
        self.form.level_set(lambda, i.a, i.b, false)
    }

    pub fn is_constant(&self) -> bool {
        self.form.pieces().iter().all(|p| p.exponent == 0.0 && p.scale == self.form.pieces()[0].scale)
    }
}

fn power_at(t: f64, alpha: f64, x: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return if alpha > 0.0 { Ok(0.0) } else { Err(Error::Singular { x }) };
    }
    Ok(t.powf(alpha))
}

/// Free-function form of [`Weight::evaluate`].
pub fn evaluate(w: &Weight, x: f64) -> Result<f64> {
    w.evaluate(x)
}

/// Free-function form of [`Weight::integrate_power`].
pub fn integrate_power(w: &Weight, s: f64, i: &Interval) -> Result<Integral> {
    w.integrate_power(s, i)
}

/// Free-function form of [`Weight::extremum`].
pub fn extremum(w: &Weight, i: &Interval, which: ExtremumKind) -> Result<f64> {
    w.extremum(i, which)
}
