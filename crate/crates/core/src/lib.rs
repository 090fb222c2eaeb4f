//! Characteristic constants of Muckenhoupt `A_p` and reverse Hölder `RH_r`
//! weights, the sharp index ranges they imply, and numerical verification
//! of the distributional inequalities behind them.

pub mod constants;
pub mod distributional;
pub mod dyadic;
pub mod error;
pub mod factorization;
pub mod scan;
pub mod sharp_ranges;
pub mod weights;

pub use error::{Error, Result};
pub use weights::{parse::parse_weight, ExtremumKind, Integral, Interval, Piece, Weight, WeightKind};
