//! Weight-spec mini-language.
//!
//! ```text
//! spec   := "pow:" num                       x^α on [0, ∞)
//!         | "abspow:" num                    |x|^α on ℝ
//!         | "piecewise:[" piece (";" piece)* "]"
//!         | "product:" spec "*" spec "^" num base · factor^e
//!         | "trunc:" spec "@" num            max(base, β)
//!         | "(" spec ")"
//! piece  := "(" num "," num "," num "," num ")"   (lo, hi, α, scale)
//! num    := decimal float, or "inf" / "-inf"
//! ```
//!
//! Whitespace between tokens is ignored. The `Display` impl prints the
//! canonical form, which parses back to an equal weight; serde uses the
//! same string.

use std::fmt;
use std::str::FromStr;

use super::{Piece, Weight, WeightKind};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let bytes = self.rest().as_bytes();
        let mut n = 0;
        if n < bytes.len() && (bytes[n] == b'+' || bytes[n] == b'-') {
            n += 1;
        }
        if self.rest()[n..].starts_with("inf") {
            n += 3;
        } else {
            while n < bytes.len() && (bytes[n].is_ascii_digit() || bytes[n] == b'.') {
                n += 1;
            }
            if n < bytes.len() && (bytes[n] == b'e' || bytes[n] == b'E') {
                n += 1;
                if n < bytes.len() && (bytes[n] == b'+' || bytes[n] == b'-') {
                    n += 1;
                }
                while n < bytes.len() && bytes[n].is_ascii_digit() {
                    n += 1;
                }
            }
        }
        let text = &self.rest()[..n];
        match text.parse::<f64>() {
            Ok(v) if !v.is_nan() => {
                self.pos += n;
                Ok(v)
            }
            _ => self.err(format!("expected a number, found `{}`", self.rest().chars().take(12).collect::<String>())),
        }
    }

    fn wrap<T>(&self, start: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::InvalidWeight(msg) => Error::Parse { pos: start, msg },
            other => other,
        })
    }

    fn spec(&mut self) -> Result<Weight> {
        self.skip_ws();
        let start = self.pos;
        if self.eat("(") {
            let w = self.spec()?;
            self.expect(")")?;
            return Ok(w);
        }
        if self.eat("pow:") {
            let a = self.number()?;
            return self.wrap(start, Weight::power(a));
        }
        if self.eat("abspow:") {
            let a = self.number()?;
            return self.wrap(start, Weight::abs_power(a));
        }
        if self.eat("piecewise:") {
            self.expect("[")?;
            let mut pieces = Vec::new();
            loop {
                self.expect("(")?;
                let lo = self.number()?;
                self.expect(",")?;
                let hi = self.number()?;
                self.expect(",")?;
                let exponent = self.number()?;
                self.expect(",")?;
                let scale = self.number()?;
                self.expect(")")?;
                pieces.push(Piece {
                    lo,
                    hi,
                    exponent,
                    scale,
                });
                if !self.eat(";") {
                    break;
                }
            }
            self.expect("]")?;
            return self.wrap(start, Weight::piecewise(pieces));
        }
        if self.eat("product:") {
            let base = self.spec()?;
            self.expect("*")?;
            let factor = self.spec()?;
            self.expect("^")?;
            let e = self.number()?;
            return self.wrap(start, Weight::product(base, factor, e));
        }
        if self.eat("trunc:") {
            let base = self.spec()?;
            self.expect("@")?;
            let floor = self.number()?;
            return self.wrap(start, Weight::truncation(base, floor));
        }
        self.err("expected one of pow:, abspow:, piecewise:, product:, trunc:")
    }
}

/// Parses a weight spec string.
pub fn parse_weight(src: &str) -> Result<Weight> {
    let mut p = Parser { src, pos: 0 };
    let w = p.spec()?;
    p.skip_ws();
    if p.pos != src.len() {
        return p.err("trailing input");
    }
    Ok(w)
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_weight(s)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            WeightKind::Power(a) => write!(f, "pow:{a}"),
            WeightKind::AbsPower(a) => write!(f, "abspow:{a}"),
            WeightKind::Piecewise(pw) => {
                write!(f, "piecewise:[")?;
                for (i, p) in pw.pieces().iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "({},{},{},{})", p.lo, p.hi, p.exponent, p.scale)?;
                }
                write!(f, "]")
            }
            WeightKind::Product {
                base,
                factor,
                exponent,
            } => write!(f, "product:{base}*{factor}^{exponent}"),
            WeightKind::Truncation { base, floor } => write!(f, "trunc:{base}@{floor}"),
        }
    }
}

impl serde::Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_weight(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_every_variant() {
        for src in [
            "pow:-0.5",
            "abspow:0.001",
            "piecewise:[(0,1,0,1);(1,inf,0,2)]",
            "product:pow:1*pow:-1.5^0.3333333333333333",
            "trunc:pow:-0.5@2",
            "product:trunc:pow:1@0.5*product:pow:0*abspow:2^3^-2",
        ] {
            let w = parse_weight(src).unwrap();
            assert_eq!(w.to_string(), src, "canonical print of {src}");
        }
    }

    #[test]
    fn whitespace_and_parens() {
        let w = parse_weight(" product: (pow: 1) * pow:-1.5 ^ 0.5 ").unwrap();
        assert_eq!(w.to_string(), "product:pow:1*pow:-1.5^0.5");
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_weight("pow:abc") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_weight("pow:1 extra").is_err());
        assert!(parse_weight("trunc:pow:1@-1").is_err());
        assert!(parse_weight("piecewise:[(0,2,0,1);(1,3,0,1)]").is_err());
        assert!(parse_weight("cube:1").is_err());
    }

    fn exponent() -> impl Strategy<Value = f64> {
        prop_oneof![(-20i32..20).prop_map(|n| n as f64 / 8.0), -3.0f64..3.0]
    }

    fn weight_tree() -> impl Strategy<Value = Weight> {
        let leaf = prop_oneof![
            exponent().prop_map(|a| Weight::power(a).unwrap()),
            exponent().prop_map(|a| Weight::abs_power(a).unwrap()),
            (0.1f64..5.0, exponent(), 0.1f64..4.0, exponent(), 0.1f64..4.0).prop_map(|(b, a1, s1, a2, s2)| {
                Weight::piecewise(vec![
                    Piece {
                        lo: 0.0,
                        hi: b,
                        exponent: a1,
                        scale: s1,
                    },
                    Piece {
                        lo: b,
                        hi: f64::INFINITY,
                        exponent: a2,
                        scale: s2,
                    },
                ])
                .unwrap()
            }),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone(), exponent())
                    .prop_filter_map("domains intersect", |(b, f, e)| Weight::product(b, f, e).ok()),
                (inner, 0.01f64..10.0).prop_map(|(b, floor)| Weight::truncation(b, floor).unwrap()),
            ]
        })
    }

    #[test]
    fn serde_uses_spec_strings() {
        let w = parse_weight("trunc:pow:-0.5@2").unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "\"trunc:pow:-0.5@2\"");
        let back: Weight = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    proptest! {
        #[test]
        fn canonical_printer_round_trips(w in weight_tree()) {
            let printed = w.to_string();
            let back = parse_weight(&printed).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert_eq!(back.to_string(), printed);
        }
    }
}
