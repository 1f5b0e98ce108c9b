//! The full single-map pipeline: distortion, optimal direction, window.

use serde::Serialize;

use crate::error::Result;
use crate::linalg3::{distortion_report, DiagonalMap, DistortionReport};
use crate::rank_one::{optimal_direction, taylor_coefficients, OptimalDirection, TaylorCoefficients};
use crate::window::{window, ConcavityWindow};

/// Everything computed for one diagonal map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisBundle {
    pub a: f64,
    pub b: f64,
    pub distortion: DistortionReport,
    pub optimal_direction: OptimalDirection,
    pub taylor: TaylorCoefficients,
    pub window: ConcavityWindow,
    pub h_lam: f64,
    pub jump_ratio: f64,
}

pub fn analyze(a: f64, b: f64) -> Result<AnalysisBundle> {
    let map = DiagonalMap::new(a, b)?;
    let distortion = distortion_report(&map.matrix())?;
    let direction = optimal_direction(&map)?;
    let taylor = taylor_coefficients(&map, &direction.params());
    let window = window(&map)?;
    let h_lam = window.h_lam();
    Ok(AnalysisBundle {
        a,
        b,
        distortion,
        optimal_direction: direction,
        taylor,
        window,
        h_lam,
        jump_ratio: distortion.h / h_lam,
    })
}
