//! Occupation-odds values `R = Pr[in] / Pr[out]`.
//!
//! A vertex pinned "in" has infinite odds. Representing that case as a
//! distinct variant keeps IEEE infinity out of the tree recursion: the only
//! thing an infinite child ratio ever does is zero out its factor.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Ratio {
    Finite(f64),
    Infinite,
}

impl Ratio {
    /// Odds of a marginal probability `p` in `[0, 1]`; `p = 1` maps to `Infinite`.
    pub fn from_marginal(p: f64) -> Ratio {
        debug_assert!((0.0..=1.0).contains(&p));
        if p >= 1.0 {
            Ratio::Infinite
        } else {
            Ratio::Finite(p / (1.0 - p))
        }
    }

    /// The factor `1 / (R + 1)` contributed to a parent in the tree recursion.
    pub fn recursion_factor(self) -> f64 {
        match self {
            Ratio::Finite(r) => 1.0 / (r + 1.0),
            Ratio::Infinite => 0.0,
        }
    }

    /// Back to the marginal scale `R / (R + 1)`.
    pub fn to_marginal(self) -> f64 {
        match self {
            Ratio::Finite(r) => r / (r + 1.0),
            Ratio::Infinite => 1.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(r) => Some(r),
            Ratio::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Ratio::Infinite)
    }
}
