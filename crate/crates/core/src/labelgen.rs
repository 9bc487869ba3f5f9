//! Shrunk binary segmentation targets from polygon annotations.

use crate::error::{ensure_in_range, ensure_positive, Error, Result};
use crate::geometry::Polygon;
use crate::raster::{fill_polygon, BinaryMap};

/// Default shrink ratio `r`.
pub const DEFAULT_SHRINK_RATIO: f64 = 0.4;

/// Annotation polygons may overhang the canvas by this much.
pub const CANVAS_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TextInstance {
    pub polygon: Polygon,
    pub transcription: String,
    /// Unreadable region: excluded from labels and from scoring.
    pub ignore: bool,
}

impl TextInstance {
    pub fn new(polygon: Polygon, transcription: impl Into<String>, ignore: bool) -> Result<Self> {
        let transcription = transcription.into();
        if transcription.is_empty() && !ignore {
            return Err(Error::InvalidAnnotation(
                "empty transcription on a non-ignored instance".into(),
            ));
        }
        Ok(Self {
            polygon,
            transcription,
            ignore,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub width: usize,
    pub height: usize,
    pub instances: Vec<TextInstance>,
}

impl AnnotationSet {
    pub fn new(width: usize, height: usize, instances: Vec<TextInstance>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidAnnotation(format!(
                "canvas {width}x{height} has zero extent"
            )));
        }
        let (w, h) = (width as f64, height as f64);
        for (k, inst) in instances.iter().enumerate() {
            let bb = inst.polygon.bounding_box();
            let t = CANVAS_TOLERANCE;
            if bb.x_min < -t || bb.y_min < -t || bb.x_max > w + t || bb.y_max > h + t {
                return Err(Error::InvalidAnnotation(format!(
                    "instance {k} lies outside the {width}x{height} canvas"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            instances,
        })
    }
}

/// Shrink distance `d = A (1 - r^2) / L`.
pub fn shrink_offset(area: f64, perimeter: f64, ratio: f64) -> Result<f64> {
    ensure_positive("area", area)?;
    ensure_positive("perimeter", perimeter)?;
    ensure_in_range("shrink ratio", ratio, 0.0, 1.0)?;
    Ok(area * (1.0 - ratio * ratio) / perimeter)
}

/// Shrinks `polygon` by its own [`shrink_offset`]. Empty when it vanishes.
pub fn shrink_polygon(polygon: &Polygon, ratio: f64) -> Result<Vec<Polygon>> {
    let d = shrink_offset(polygon.area(), polygon.perimeter(), ratio)?;
    Ok(polygon.offset(-d))
}

/// Binary segmentation label: the union of the rasterized shrunk polygons
/// of every non-ignored instance, on the annotation canvas.
pub fn make_seg_label(ann: &AnnotationSet, ratio: f64) -> Result<BinaryMap> {
    make_seg_label_on(ann, ratio, ann.height, ann.width)
}

/// Like [`make_seg_label`] on an explicit `height x width` canvas.
pub fn make_seg_label_on(
    ann: &AnnotationSet,
    ratio: f64,
    height: usize,
    width: usize,
) -> Result<BinaryMap> {
    ensure_in_range("shrink ratio", ratio, 0.0, 1.0)?;
    let mut label = BinaryMap::zeros(height, width)?;
    for inst in ann.instances.iter().filter(|i| !i.ignore) {
        for piece in shrink_polygon(&inst.polygon, ratio)? {
            fill_polygon(&mut label, &piece);
        }
    }
    Ok(label)
}
