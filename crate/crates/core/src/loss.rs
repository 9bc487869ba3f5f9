//! Dice loss between a probability map and a binary target, with its
//! analytic gradient.

use crate::error::{Error, Result};
use crate::proposal::ProbabilityMap;
use crate::raster::BinaryMap;

/// Weight of the box-refinement and mask terms in [`total_loss`].
pub const DEFAULT_AUX_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    /// `dL/dS`, row-major, same shape as the input map.
    pub gradient: Vec<f64>,
    /// `I = sum(S * G)`.
    pub intersection: f64,
    /// `U = sum(S) + sum(G)`.
    pub union: f64,
}

/// `L = 1 - 2 I / U` with `I = sum(S * G)` and `U = sum(S) + sum(G)`.
///
/// No smoothing term is added. When `U = 0` the loss and its gradient are
/// zero. Cells where `valid` is 0 are left out of every sum and get a zero
/// gradient.
pub fn dice_loss(
    s: &ProbabilityMap,
    g: &BinaryMap,
    valid: Option<&BinaryMap>,
) -> Result<LossResult> {
    if s.height() != g.height() || s.width() != g.width() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{} vs target {}x{}",
            s.height(),
            s.width(),
            g.height(),
            g.width()
        )));
    }
    if let Some(v) = valid {
        g.check_same_shape(v)?;
    }
    let keep = |i: usize| valid.is_none_or(|v| v.as_slice()[i] != 0);
    let sv = s.as_slice();
    let gv = g.as_slice();

    let mut intersection = 0.0;
    let mut union = 0.0;
    for i in (0..sv.len()).filter(|&i| keep(i)) {
        let gi = f64::from(gv[i]);
        intersection += sv[i] * gi;
        union += sv[i] + gi;
    }
    if union == 0.0 {
        return Ok(LossResult {
            value: 0.0,
            gradient: vec![0.0; sv.len()],
            intersection,
            union,
        });
    }
    let shared = 2.0 * intersection / (union * union);
    let gradient = (0..sv.len())
        .map(|i| {
            if keep(i) {
                shared - 2.0 * f64::from(gv[i]) / union
            } else {
                0.0
            }
        })
        .collect();
    Ok(LossResult {
        value: 1.0 - 2.0 * intersection / union,
        gradient,
        intersection,
        union,
    })
}

/// `L = L_s + a1 L_rcnn + a2 L_mask` for externally computed terms.
pub fn total_loss(seg: f64, rcnn: f64, mask: f64, rcnn_weight: f64, mask_weight: f64) -> f64 {
    seg + rcnn_weight * rcnn + mask_weight * mask
}
