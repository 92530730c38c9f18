//! Bands and constants fixed once from a high-resolution parabola sweep.
//!
//! The sweep covered the weakly comparable grid of [`lemma_grid`] at two cell
//! edges (two and four cells across the thinnest bracket direction). Observed
//! ranges, for reference:
//!
//! | ratio            | observed     |
//! |------------------|--------------|
//! | doubling         | 6.3 .. 13.1  |
//! | fibre 1          | 0.80 .. 1.20 |
//! | fibre 2          | 0.40 .. 0.84 |
//! | Pi extent        | 2.0 .. 2.25  |
//! | mixed norm       | 1.13 .. 1.85 |
//! | testing quotient | 0.50 .. 0.99 |
//! | slab constant    | 0.55 .. 0.79 |
//!
//! Each band leaves at least a factor of two of headroom on either side.

use serde::{Deserialize, Serialize};

use crate::ccball::{LemmaRatios, MAX_DELTA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Band { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

pub const DOUBLING: Band = Band::new(4.0, 32.0);
pub const FIBRE: Band = Band::new(0.25, 4.0);
pub const PI_EXTENT: Band = Band::new(1.0, 4.0);
pub const MIXED_NORM: Band = Band::new(0.5, 4.0);
pub const TESTING_QUOTIENT: Band = Band::new(0.25, 2.0);

/// `max_t f(t) <= SLAB_C |B| / delta1`.
pub const SLAB_C: f64 = 1.5;

/// Upper bound for the restricted weak-type ratio of ball pairs at `(5/3, 3, 3)`.
pub const RWT_INTERIOR: f64 = 1.0;

/// Triple used for the lemma sweep.
pub const LEMMA_TRIPLE: (f64, f64, f64) = (5.0 / 3.0, 3.0, 3.0);

/// Cells across the thinnest direction at the base resolution.
pub const CELLS_ACROSS: f64 = 2.0;

/// Names and bands of the five lemma ratios (the two fibre ratios share one band).
pub fn ratio_bands(r: &LemmaRatios) -> [(&'static str, f64, Band); 6] {
    [
        ("doubling", r.doubling, DOUBLING),
        ("fibre1", r.fibre1, FIBRE),
        ("fibre2", r.fibre2, FIBRE),
        ("pi_extent", r.pi_extent, PI_EXTENT),
        ("mixed_norm", r.mixed_norm, MIXED_NORM),
        ("testing_quotient", r.testing_quotient, TESTING_QUOTIENT),
    ]
}

/// `(theta, delta1, delta2 = delta1^theta)` for `theta in {0.5, 0.75, 1}` and
/// `delta1 = 2^-3 .. 2^-5`, without pairs whose doubled ball exceeds the
/// largest admissible radius.
pub fn lemma_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for theta in [0.5, 0.75, 1.0] {
        for j in 3..=5 {
            let d1 = 2f64.powi(-j);
            let d2 = d1.powf(theta);
            if 2.0 * d1.max(d2) <= MAX_DELTA {
                out.push((theta, d1, d2));
            }
        }
    }
    out
}
