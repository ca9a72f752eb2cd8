//! Shared fixtures for the criterion benches.

use ris_corr::{make_grid, MotionState, RisGrid};

pub const LAMBDA: f64 = 0.1;

/// Square aperture of `side` wavelengths sampled every `spacing` wavelengths.
pub fn square_grid(side: f64, spacing: f64) -> RisGrid {
    make_grid(
        side * LAMBDA,
        side * LAMBDA,
        spacing * LAMBDA,
        spacing * LAMBDA,
        LAMBDA,
    )
    .expect("valid grid")
}

/// Oblique motion used throughout the benches.
pub fn oblique_motion() -> MotionState {
    MotionState::new(
        1.0,
        std::f64::consts::PI / 36.0,
        4.0 * std::f64::consts::PI / 9.0,
    )
    .expect("valid motion")
}
