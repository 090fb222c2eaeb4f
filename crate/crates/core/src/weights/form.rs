//! Piecewise-power normal form.
//!
//! Every weight in the symbolic family reduces to a finite list of pieces
//! `scale * |x|^exponent` on contiguous intervals, each piece lying in a
//! single closed half-line. On such a piece the weight is monotone in `|x|`,
//! so integrals, essential extrema and level sets all have closed forms.

use serde::{Deserialize, Serialize};

use super::Integral;
use crate::error::{Error, Result};

/// One monotone piece: `scale * |x|^exponent` for `x` in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub exponent: f64,
    pub scale: f64,
}

impl Piece {
    /// Endpoints in `|x|` coordinates, ordered.
    fn abs_span(&self, a: f64, b: f64) -> (f64, f64) {
        if b <= 0.0 {
            (-b, -a)
        } else {
            (a, b)
        }
    }

    fn negative(&self) -> bool {
        self.hi <= 0.0
    }

    /// Value at `|x| = t`, with the limits at 0 and infinity.
    fn value_abs(&self, t: f64) -> f64 {
        if self.exponent == 0.0 {
            return self.scale;
        }
        if t == 0.0 {
            return if self.exponent > 0.0 { 0.0 } else { f64::INFINITY };
        }
        if t.is_infinite() {
            return if self.exponent > 0.0 { f64::INFINITY } else { 0.0 };
        }
        self.scale * t.powf(self.exponent)
    }

    /// `|x|` where the piece crosses level `lambda` (exponent must be non-zero).
    fn crossing(&self, lambda: f64) -> f64 {
        (lambda / self.scale).powf(1.0 / self.exponent)
    }

    /// Maps an `|x|`-interval back to signed coordinates.
    fn signed(&self, lo_abs: f64, hi_abs: f64) -> (f64, f64) {
        if self.negative() {
            (-hi_abs, -lo_abs)
        } else {
            (lo_abs, hi_abs)
        }
    }

    /// Integral of `(piece)^s` over `[a, b]` (a sub-interval of the piece).
    fn integral(&self, s: f64, a: f64, b: f64) -> Integral {
        let (lo, hi) = self.abs_span(a, b);
        let factor = self.scale.powf(s);
        match abs_power_integral(self.exponent * s, lo, hi) {
            Integral::Finite(v) => Integral::Finite(factor * v),
            Integral::Divergent => Integral::Divergent,
        }
    }
}

/// `∫_lo^hi t^gamma dt` for `0 <= lo < hi <= ∞`.
pub(crate) fn abs_power_integral(gamma: f64, lo: f64, hi: f64) -> Integral {
    if hi <= lo {
        return Integral::Finite(0.0);
    }
    if gamma == 0.0 {
        return if hi.is_infinite() {
            Integral::Divergent
        } else {
            Integral::Finite(hi - lo)
        };
    }
    let g = gamma + 1.0;
    if hi.is_infinite() {
        if g >= 0.0 || lo == 0.0 {
            return Integral::Divergent;
        }
        return Integral::Finite(-lo.powf(g) / g);
    }
    if lo == 0.0 {
        if g <= 0.0 {
            return Integral::Divergent;
        }
        return Integral::Finite(hi.powf(g) / g);
    }
    let log_ratio = (lo / hi).ln();
    if g == 0.0 {
        return Integral::Finite(-log_ratio);
    }
    // hi^g (1 - (lo/hi)^g) / g, written to avoid cancellation on short intervals
    Integral::Finite(hi.powf(g) * -(g * log_ratio).exp_m1() / g)
}

/// A set of disjoint intervals together with its measure and the integral of
/// the weight over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub components: Vec<(f64, f64)>,
    pub measure: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseForm {
    pieces: Vec<Piece>,
}

fn probe(x0: f64, x1: f64) -> f64 {
    match (x0.is_finite(), x1.is_finite()) {
        (true, true) => 0.5 * (x0 + x1),
        (false, true) => x1 - 1.0,
        (true, false) => x0 + 1.0,
        (false, false) => 0.0,
    }
}

impl PiecewiseForm {
    /// Builds a normal form, splitting at 0 and merging equal neighbours.
    /// The pieces must be sorted and contiguous.
    pub(crate) fn from_pieces(raw: Vec<Piece>) -> Self {
        let mut pieces = Vec::with_capacity(raw.len() + 1);
        for p in raw {
            if p.lo < 0.0 && p.hi > 0.0 {
                pieces.push(Piece { hi: 0.0, ..p });
                pieces.push(Piece { lo: 0.0, ..p });
            } else {
                pieces.push(p);
            }
        }
        let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if let Some(last) = merged.last_mut() {
                let same = last.exponent == p.exponent && last.scale == p.scale;
                let across_zero = last.hi == 0.0;
                if same && !across_zero && last.hi == p.lo {
                    last.hi = p.hi;
                    continue;
                }
                if same && last.exponent == 0.0 && last.hi == p.lo {
                    // constants are monotone on either side of the origin
                    last.hi = p.hi;
                    continue;
                }
            }
            merged.push(p);
        }
        PiecewiseForm { pieces: merged }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi)
    }

    /// Interior breakpoints of the form.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.lo).collect()
    }

    /// `Some(exponent)` when the weight is homogeneous, i.e. `w(λx) = λ^α w(x)`
    /// for every `λ > 0`: a single exponent on full half-lines.
    pub fn homogeneous_exponent(&self) -> Option<f64> {
        let first = self.pieces[0].exponent;
        let full_half_lines = self.pieces.iter().all(|p| {
            (p.lo == 0.0 && p.hi == f64::INFINITY) || (p.lo == f64::NEG_INFINITY && p.hi == 0.0)
        });
        let constant = self.pieces.len() == 1 && first == 0.0;
        let single_exponent = self.pieces.iter().all(|p| p.exponent == first);
        let spans_origin_side = {
            let (lo, hi) = self.domain();
            (lo == 0.0 || lo == f64::NEG_INFINITY) && (hi == 0.0 || hi == f64::INFINITY)
        };
        if single_exponent && (full_half_lines || (constant && spans_origin_side)) {
            Some(first)
        } else {
            None
        }
    }

    fn check_span(&self, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if a < lo || b > hi {
            return Err(Error::IntervalOutsideDomain { a, b, lo, hi });
        }
        Ok(())
    }

    /// Pieces overlapping `[a, b]` in positive length, with the clipped span.
    fn overlapping(&self, a: f64, b: f64) -> impl Iterator<Item = (&Piece, f64, f64)> {
        self.pieces.iter().filter_map(move |p| {
            let lo = p.lo.max(a);
            let hi = p.hi.min(b);
            (hi > lo).then_some((p, lo, hi))
        })
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let piece = self
            .pieces
            .iter()
            .find(|p| p.lo <= x && x <= p.hi)
            .ok_or(Error::OutsideDomain { x, lo, hi })?;
        let v = piece.value_abs(x.abs());
        if v.is_infinite() {
            return Err(Error::Singular { x });
        }
        Ok(v)
    }

    /// `∫_a^b w^s`, exact.
    pub fn integral(&self, s: f64, a: f64, b: f64) -> Result<Integral> {
        self.check_span(a, b)?;
        let mut total = 0.0;
        for (p, lo, hi) in self.overlapping(a, b) {
            match p.integral(s, lo, hi) {
                Integral::Finite(v) => total += v,
                Integral::Divergent => return Ok(Integral::Divergent),
            }
        }
        Ok(Integral::Finite(total))
    }

    /// Essential infimum over `[a, b]`.
    pub fn ess_inf(&self, a: f64, b: f64) -> Result<f64> {
        self.check_span(a, b)?;
        Ok(self
            .overlapping(a, b)
            .map(|(p, lo, hi)| {
                let (l, h) = p.abs_span(lo, hi);
                p.value_abs(l).min(p.value_abs(h))
            })
            .fold(f64::INFINITY, f64::min))
    }

    /// Essential supremum over `[a, b]`.
    pub fn ess_sup(&self, a: f64, b: f64) -> Result<f64> {
        self.check_span(a, b)?;
        Ok(self
            .overlapping(a, b)
            .map(|(p, lo, hi)| {
                let (l, h) = p.abs_span(lo, hi);
                p.value_abs(l).max(p.value_abs(h))
            })
            .fold(0.0, f64::max))
    }

    /// `{x in [a,b] : w(x) > lambda}` (super) or `{w(x) < lambda}` (sub).
    pub fn level_set(&self, lambda: f64, a: f64, b: f64, superlevel: bool) -> Result<LevelSet> {
        self.check_span(a, b)?;
        let mut parts: Vec<(f64, f64, f64)> = Vec::new();
        for (p, lo, hi) in self.overlapping(a, b) {
            let (l, h) = p.abs_span(lo, hi);
            let span = if p.exponent == 0.0 {
                let inside = if superlevel { p.scale > lambda } else { p.scale < lambda };
                inside.then_some((l, h))
            } else {
                let x = p.crossing(lambda);
                // w increasing in |x| iff exponent > 0; super-level is the upper tail then
                let upper_tail = (p.exponent > 0.0) == superlevel;
                let (sl, sh) = if upper_tail { (l.max(x), h) } else { (l, h.min(x)) };
                (sh > sl).then_some((sl, sh))
            };
            if let Some((sl, sh)) = span {
                let (x0, x1) = p.signed(sl, sh);
                let integral = match p.integral(1.0, x0, x1) {
                    Integral::Finite(v) => v,
                    Integral::Divergent => f64::INFINITY,
                };
                parts.push((x0, x1, integral));
            }
        }
        let mut components: Vec<(f64, f64)> = Vec::new();
        let mut measure = 0.0;
        let mut integral = 0.0;
        for (x0, x1, v) in parts {
            measure += x1 - x0;
            integral += v;
            match components.last_mut() {
                Some(last) if last.1 >= x0 => last.1 = last.1.max(x1),
                _ => components.push((x0, x1)),
            }
        }
        Ok(LevelSet {
            components,
            measure,
            integral,
        })
    }

    /// `self^e`.
    pub(crate) fn pow(&self, e: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                exponent: p.exponent * e,
                scale: p.scale.powf(e),
                ..*p
            })
            .collect();
        Self::from_pieces(pieces)
    }

    fn piece_at(&self, x: f64) -> &Piece {
        self.pieces
            .iter()
            .find(|p| p.lo <= x && x <= p.hi)
            .expect("probe point inside domain")
    }

    /// Pointwise product, on the intersection of the two domains.
    pub(crate) fn mul(&self, other: &Self) -> Result<Self> {
        let (l1, h1) = self.domain();
        let (l2, h2) = other.domain();
        let lo = l1.max(l2);
        let hi = h1.min(h2);
        if hi <= lo {
            return Err(Error::InvalidWeight(format!(
                "product factors have disjoint domains [{l1}, {h1}] and [{l2}, {h2}]"
            )));
        }
        let mut cuts: Vec<f64> = vec![lo, hi];
        cuts.extend(self.breakpoints());
        cuts.extend(other.breakpoints());
        if lo < 0.0 && hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.retain(|&x| x >= lo && x <= hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .map(|w| {
                let x = probe(w[0], w[1]);
                let p = self.piece_at(x);
                let q = other.piece_at(x);
                Piece {
                    lo: w[0],
                    hi: w[1],
                    exponent: p.exponent + q.exponent,
                    scale: p.scale * q.scale,
                }
            })
            .collect();
        Ok(Self::from_pieces(pieces))
    }

    /// `max(self, floor)`.
    pub(crate) fn truncate(&self, floor: f64) -> Self {
        let mut pieces = Vec::with_capacity(self.pieces.len() * 2);
        for p in &self.pieces {
            if p.exponent == 0.0 {
                pieces.push(Piece {
                    scale: p.scale.max(floor),
                    ..*p
                });
                continue;
            }
            let (l, h) = p.abs_span(p.lo, p.hi);
            let x = p.crossing(floor);
            let flat = Piece {
                exponent: 0.0,
                scale: floor,
                ..*p
            };
            // |x|-ranges where the piece is below the floor
            let (below_lo, below_hi) = if p.exponent > 0.0 { (l, h.min(x)) } else { (l.max(x), h) };
            let mut segs: Vec<(f64, f64, Piece)> = Vec::new();
            if below_hi <= below_lo {
                segs.push((l, h, *p));
            } else if p.exponent > 0.0 {
                segs.push((l, below_hi, flat));
                if below_hi < h {
                    segs.push((below_hi, h, *p));
                }
            } else {
                if l < below_lo {
                    segs.push((l, below_lo, *p));
                }
                segs.push((below_lo, h, flat));
            }
            if p.negative() {
                segs.reverse();
            }
            for (sl, sh, q) in segs {
                let (x0, x1) = p.signed(sl, sh);
                pieces.push(Piece { lo: x0, hi: x1, ..q });
            }
        }
        Self::from_pieces(pieces)
    }
}
