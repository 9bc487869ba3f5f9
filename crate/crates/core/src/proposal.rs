//! Polygon proposals from a text probability map: binarize, group
//! connected regions, trace their contours and dilate them back.

use crate::error::{ensure_in_range, ensure_positive, Error, Result};
use crate::geometry::{AxisAlignedBox, Polygon};
use crate::raster::{check_dims, connected_components, trace_from, BinaryMap};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_UNCLIP_RATIO: f64 = 3.0;
pub const DEFAULT_MIN_AREA: f64 = 9.0;

/// An `H x W` grid of probabilities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(height, width)?;
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width} map",
                values.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::out_of_range("probability", bad, 0.0, 1.0));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(height, width, values)
    }

    pub fn from_binary(map: &BinaryMap) -> Self {
        Self {
            height: map.height(),
            width: map.width(),
            values: map.as_slice().iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// `B[i, j] = 1` iff `S[i, j] >= t`.
pub fn binarize(map: &ProbabilityMap, threshold: f64) -> Result<BinaryMap> {
    ensure_in_range("threshold", threshold, 0.0, 1.0)?;
    let data = map
        .values
        .iter()
        .map(|&v| u8::from(v >= threshold))
        .collect();
    BinaryMap::from_vec(map.height, map.width, data)
}

/// Dilation distance `d' = A' r' / L'` for a shrunk region.
pub fn unclip_offset(area: f64, perimeter: f64, ratio: f64) -> Result<f64> {
    ensure_positive("area", area)?;
    ensure_positive("perimeter", perimeter)?;
    ensure_positive("unclip ratio", ratio)?;
    Ok(area * ratio / perimeter)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalParams {
    pub threshold: f64,
    pub unclip_ratio: f64,
    /// Components with fewer pixels are dropped as noise.
    pub min_area: f64,
}

impl Default for ProposalParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            unclip_ratio: DEFAULT_UNCLIP_RATIO,
            min_area: DEFAULT_MIN_AREA,
        }
    }
}

impl ProposalParams {
    pub fn validate(&self) -> Result<()> {
        ensure_in_range("threshold", self.threshold, 0.0, 1.0)?;
        ensure_positive("unclip ratio", self.unclip_ratio)?;
        if self.min_area.is_nan() || self.min_area < 0.0 {
            return Err(Error::out_of_range(
                "min area",
                self.min_area,
                0.0,
                f64::INFINITY,
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    /// The dilated proposal polygon.
    pub polygon: Polygon,
    /// Traced contour of the thresholded component.
    pub shrunk_region: Polygon,
    /// Minimum axis-aligned box of `polygon`.
    pub bbox: AxisAlignedBox,
    /// Mean probability over the component's pixels.
    pub score: f64,
}

/// Runs the full proposal pipeline. Proposals come out in component
/// discovery (raster-scan) order.
pub fn extract_proposals(map: &ProbabilityMap, params: &ProposalParams) -> Result<Vec<Proposal>> {
    params.validate()?;
    let binary = binarize(map, params.threshold)?;
    let labels = connected_components(&binary);
    let k = labels.count() as usize;

    let mut first_pixel = vec![usize::MAX; k];
    let mut pixel_count = vec![0usize; k];
    let mut prob_sum = vec![0.0f64; k];
    for (idx, &l) in labels.as_slice().iter().enumerate() {
        if l == 0 {
            continue;
        }
        let c = l as usize - 1;
        if first_pixel[c] == usize::MAX {
            first_pixel[c] = idx;
        }
        pixel_count[c] += 1;
        prob_sum[c] += map.values[idx];
    }

    let mut proposals = Vec::new();
    for c in 0..k {
        if (pixel_count[c] as f64) < params.min_area {
            continue;
        }
        let shrunk_region = trace_from(&labels, c as u32 + 1, first_pixel[c])?;
        let d = unclip_offset(
            shrunk_region.area(),
            shrunk_region.perimeter(),
            params.unclip_ratio,
        )?;
        let Some(polygon) = shrunk_region.offset(d).into_iter().next() else {
            continue;
        };
        proposals.push(Proposal {
            bbox: polygon.bounding_box(),
            polygon,
            shrunk_region,
            score: (prob_sum[c] / pixel_count[c] as f64).clamp(0.0, 1.0),
        });
    }
    Ok(proposals)
}

/// Channel count and spatial size of a feature tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadLayer {
    Conv {
        kernel: usize,
        stride: usize,
        padding: usize,
        out_channels: usize,
    },
    Deconv {
        kernel: usize,
        stride: usize,
        padding: usize,
        out_channels: usize,
    },
    BatchNorm,
    Relu,
    Sigmoid,
}

impl HeadLayer {
    pub fn apply(&self, s: TensorShape) -> TensorShape {
        match *self {
            HeadLayer::Conv {
                kernel,
                stride,
                padding,
                out_channels,
            } => TensorShape {
                channels: out_channels,
                height: (s.height + 2 * padding - kernel) / stride + 1,
                width: (s.width + 2 * padding - kernel) / stride + 1,
            },
            HeadLayer::Deconv {
                kernel,
                stride,
                padding,
                out_channels,
            } => TensorShape {
                channels: out_channels,
                height: (s.height - 1) * stride + kernel - 2 * padding,
                width: (s.width - 1) * stride + kernel - 2 * padding,
            },
            HeadLayer::BatchNorm | HeadLayer::Relu | HeadLayer::Sigmoid => s,
        }
    }
}

/// Channels of the fused feature map fed to the prediction head.
pub const FUSED_CHANNELS: usize = 256;

/// Segmentation prediction head, from the fused `H/4 x W/4` map to the
/// `1 x H x W` probability map.
pub const PREDICTION_HEAD: [HeadLayer; 8] = [
    HeadLayer::Conv {
        kernel: 3,
        stride: 1,
        padding: 1,
        out_channels: 64,
    },
    HeadLayer::BatchNorm,
    HeadLayer::Relu,
    HeadLayer::Deconv {
        kernel: 2,
        stride: 2,
        padding: 0,
        out_channels: 64,
    },
    HeadLayer::BatchNorm,
    HeadLayer::Relu,
    HeadLayer::Deconv {
        kernel: 2,
        stride: 2,
        padding: 0,
        out_channels: 1,
    },
    HeadLayer::Sigmoid,
];

/// Output shape of [`PREDICTION_HEAD`] for a fused map of the given size.
pub fn predict_head_shape(fused_height: usize, fused_width: usize) -> Result<TensorShape> {
    check_dims(fused_height, fused_width)?;
    let input = TensorShape {
        channels: FUSED_CHANNELS,
        height: fused_height,
        width: fused_width,
    };
    Ok(PREDICTION_HEAD
        .iter()
        .fold(input, |s, layer| layer.apply(s)))
}
