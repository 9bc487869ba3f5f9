//! RoI feature extraction over axis-aligned boxes and polygon masking of
//! the sampled grids.

use crate::error::{Error, Result};
use crate::geometry::{AxisAlignedBox, Point, Polygon};
use crate::proposal::ProbabilityMap;

/// Spatial size of RoI grids and polygon masks.
pub const MASK_SIZE: usize = 32;

/// A `C x H x W` feature tensor, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::ShapeMismatch(format!(
                "feature grid {channels}x{height}x{width} has a zero dimension"
            )));
        }
        if values.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite feature value".into()));
        }
        Ok(Self {
            channels,
            height,
            width,
            values,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for row in 0..height {
                for col in 0..width {
                    values.push(f(c, row, col));
                }
            }
        }
        Self::new(channels, height, width, values)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.height + row) * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Zero outside the grid.
    fn get_padded(&self, channel: usize, row: i64, col: i64) -> f64 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0.0
        } else {
            self.get(channel, row as usize, col as usize)
        }
    }

    /// Bilinear value at a continuous point, in the pixel-center frame
    /// (pixel `(i, j)` is sampled exactly at `(j + 0.5, i + 0.5)`).
    pub fn bilinear(&self, channel: usize, x: f64, y: f64) -> f64 {
        let gx = x - 0.5;
        let gy = y - 0.5;
        let x0 = gx.floor();
        let y0 = gy.floor();
        let fx = gx - x0;
        let fy = gy - y0;
        let (c0, r0) = (x0 as i64, y0 as i64);
        let v00 = self.get_padded(channel, r0, c0);
        let v01 = self.get_padded(channel, r0, c0 + 1);
        let v10 = self.get_padded(channel, r0 + 1, c0);
        let v11 = self.get_padded(channel, r0 + 1, c0 + 1);
        let top = v00 + fx * (v01 - v00);
        let bottom = v10 + fx * (v11 - v10);
        top + fy * (bottom - top)
    }
}

/// Sampling settings for [`roi_align_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiAlignConfig {
    pub out_size: usize,
    /// Feature-map pixels per image pixel.
    pub spatial_scale: f64,
    /// Samples per bin along each axis, averaged.
    pub samples_per_bin: usize,
}

impl Default for RoiAlignConfig {
    fn default() -> Self {
        Self {
            out_size: MASK_SIZE,
            spatial_scale: 1.0,
            samples_per_bin: 1,
        }
    }
}

/// A `C x S x S` grid sampled from a box.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiGrid {
    channels: usize,
    size: usize,
    values: Vec<f64>,
    source_box: AxisAlignedBox,
}

impl RoiGrid {
    pub fn new(
        channels: usize,
        size: usize,
        values: Vec<f64>,
        source_box: AxisAlignedBox,
    ) -> Result<Self> {
        if channels == 0 || size == 0 || values.len() != channels * size * size {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {channels}x{size}x{size} RoI grid",
                values.len()
            )));
        }
        Ok(Self {
            channels,
            size,
            values,
            source_box,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn source_box(&self) -> AxisAlignedBox {
        self.source_box
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.values[(channel * self.size + row) * self.size + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A binary `S x S` polygon mask aligned to a box.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonMask {
    size: usize,
    values: Vec<u8>,
    source_box: AxisAlignedBox,
}

impl PolygonMask {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn source_box(&self) -> AxisAlignedBox {
        self.source_box
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.size + col] != 0
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.values
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    /// The mask as a soft mask with values in `{0, 1}`.
    pub fn to_soft(&self) -> SoftMask {
        SoftMask {
            size: self.size,
            values: self.values.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

/// An `S x S` grid of probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    size: usize,
    values: Vec<f64>,
}

impl SoftMask {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size == 0 || values.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {size}x{size} mask",
                values.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::out_of_range("mask probability", bad, 0.0, 1.0));
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Center of bin `(row, col)` of an `n x n` partition of `b`.
fn bin_point(b: &AxisAlignedBox, n: usize, row: usize, col: usize, sub: (f64, f64)) -> Point {
    let bw = b.width() / n as f64;
    let bh = b.height() / n as f64;
    Point::new(
        b.x_min + (col as f64 + sub.0) * bw,
        b.y_min + (row as f64 + sub.1) * bh,
    )
}

fn check_box(b: &AxisAlignedBox) -> Result<()> {
    if b.width() > 0.0 && b.height() > 0.0 {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "degenerate RoI box {:?}",
            b.to_array()
        )))
    }
}

/// Bilinear RoI align with one sample at each of the `32 x 32` bin centers.
pub fn roi_align(features: &FeatureGrid, bbox: &AxisAlignedBox) -> Result<RoiGrid> {
    roi_align_with(features, bbox, &RoiAlignConfig::default())
}

pub fn roi_align_with(
    features: &FeatureGrid,
    bbox: &AxisAlignedBox,
    config: &RoiAlignConfig,
) -> Result<RoiGrid> {
    check_box(bbox)?;
    let n = config.out_size;
    let s = config.samples_per_bin;
    if n == 0 || s == 0 || config.spatial_scale.is_nan() || config.spatial_scale <= 0.0 {
        return Err(Error::ShapeMismatch(format!(
            "invalid RoI align config {config:?}"
        )));
    }
    let scaled = AxisAlignedBox {
        x_min: bbox.x_min * config.spatial_scale,
        y_min: bbox.y_min * config.spatial_scale,
        x_max: bbox.x_max * config.spatial_scale,
        y_max: bbox.y_max * config.spatial_scale,
    };
    let offsets: Vec<f64> = (0..s).map(|k| (k as f64 + 0.5) / s as f64).collect();
    let mut values = Vec::with_capacity(features.channels * n * n);
    for c in 0..features.channels {
        for row in 0..n {
            for col in 0..n {
                let mut acc = 0.0;
                for &oy in &offsets {
                    for &ox in &offsets {
                        let p = bin_point(&scaled, n, row, col, (ox, oy));
                        acc += features.bilinear(c, p.x, p.y);
                    }
                }
                values.push(if s == 1 { acc } else { acc / (s * s) as f64 });
            }
        }
    }
    RoiGrid::new(features.channels, n, values, *bbox)
}

/// Marks the bins of `bbox` whose centers fall inside `polygon`.
pub fn render_polygon_mask(polygon: &Polygon, bbox: &AxisAlignedBox) -> PolygonMask {
    render_polygon_mask_sized(polygon, bbox, MASK_SIZE)
}

pub fn render_polygon_mask_sized(
    polygon: &Polygon,
    bbox: &AxisAlignedBox,
    size: usize,
) -> PolygonMask {
    let mut values = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let p = bin_point(bbox, size, row, col, (0.5, 0.5));
            values.push(u8::from(polygon.contains(p)));
        }
    }
    PolygonMask {
        size,
        values,
        source_box: *bbox,
    }
}

/// Samples a probability map over `bbox` into a soft mask.
pub fn sample_soft_mask(
    map: &ProbabilityMap,
    bbox: &AxisAlignedBox,
    size: usize,
) -> Result<SoftMask> {
    let grid = FeatureGrid {
        channels: 1,
        height: map.height(),
        width: map.width(),
        values: map.as_slice().to_vec(),
    };
    let config = RoiAlignConfig {
        out_size: size,
        ..Default::default()
    };
    let roi = roi_align_with(&grid, bbox, &config)?;
    SoftMask::new(
        size,
        roi.values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
    )
}

/// `R = R0 * M`: cells outside the polygon become exactly `0.0`, cells
/// inside keep their bits.
pub fn hard_roi_mask(roi: &RoiGrid, mask: &PolygonMask) -> Result<RoiGrid> {
    if roi.size != mask.size {
        return Err(Error::ShapeMismatch(format!(
            "RoI grid is {0}x{0}, mask is {1}x{1}",
            roi.size, mask.size
        )));
    }
    if roi.source_box != mask.source_box {
        return Err(Error::ShapeMismatch(format!(
            "RoI box {:?} differs from mask box {:?}",
            roi.source_box.to_array(),
            mask.source_box.to_array()
        )));
    }
    let plane = roi.size * roi.size;
    let values = roi
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| if mask.values[i % plane] != 0 { v } else { 0.0 })
        .collect();
    Ok(RoiGrid {
        values,
        ..roi.clone()
    })
}

/// Element-wise product with a probability grid. Signed zeros are
/// normalized to `+0.0`, so a binary soft mask reproduces
/// [`hard_roi_mask`] exactly.
pub fn soft_roi_mask(roi: &RoiGrid, prob: &SoftMask) -> Result<RoiGrid> {
    if roi.size != prob.size {
        return Err(Error::ShapeMismatch(format!(
            "RoI grid is {0}x{0}, mask is {1}x{1}",
            roi.size, prob.size
        )));
    }
    let plane = roi.size * roi.size;
    let values = roi
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let m = v * prob.values[i % plane];
            if m == 0.0 {
                0.0
            } else {
                m
            }
        })
        .collect();
    Ok(RoiGrid {
        values,
        ..roi.clone()
    })
}
