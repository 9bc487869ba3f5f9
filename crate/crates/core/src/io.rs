//! File formats: annotation / proposal / prediction JSON, the `SPNF` raw
//! tensor container, grayscale PNG maps and lexicon text files.
//!
//! Floats go through `serde_json`, which writes the shortest decimal that
//! parses back to the same `f64`, so JSON round trips are bit-exact.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, GrayImage, ImageBuffer, ImageEncoder, PixelWithColorType};
use serde::{Deserialize, Serialize};

use crate::bench::{DetectionResult, Lexicon, LexiconKind};
use crate::error::{Error, Result};
use crate::geometry::{AxisAlignedBox, Polygon};
use crate::labelgen::{AnnotationSet, TextInstance};
use crate::proposal::{ProbabilityMap, Proposal};
use crate::raster::BinaryMap;
use crate::roi::{FeatureGrid, RoiGrid};

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    polygon: Vec<[f64; 2]>,
    #[serde(default)]
    transcription: String,
    #[serde(default)]
    ignore: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    width: usize,
    height: usize,
    instances: Vec<InstanceRecord>,
}

fn instance_error(index: usize, err: Error) -> Error {
    let reason = match err {
        Error::InvalidPolygon(r) => r,
        other => other.to_string(),
    };
    Error::InstancePolygon { index, reason }
}

pub fn parse_annotations(text: &str) -> Result<AnnotationSet> {
    let rec: AnnotationRecord = serde_json::from_str(text)?;
    let instances = rec
        .instances
        .into_iter()
        .enumerate()
        .map(|(k, inst)| {
            let polygon = Polygon::from_xy(&inst.polygon).map_err(|e| instance_error(k, e))?;
            TextInstance::new(polygon, inst.transcription, inst.ignore)
                .map_err(|e| Error::InvalidAnnotation(format!("instance {k}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    AnnotationSet::new(rec.width, rec.height, instances)
}

pub fn annotations_to_json(ann: &AnnotationSet) -> String {
    let rec = AnnotationRecord {
        width: ann.width,
        height: ann.height,
        instances: ann
            .instances
            .iter()
            .map(|i| InstanceRecord {
                polygon: i.polygon.to_xy(),
                transcription: i.transcription.clone(),
                ignore: i.ignore,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&rec).expect("annotation records serialize")
}

pub fn read_annotations(path: &Path) -> Result<AnnotationSet> {
    parse_annotations(&fs::read_to_string(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct ProposalRecord {
    polygon: Vec<[f64; 2]>,
    shrunk: Vec<[f64; 2]>,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    score: f64,
}

pub fn proposals_to_json(proposals: &[Proposal]) -> String {
    let recs: Vec<ProposalRecord> = proposals
        .iter()
        .map(|p| ProposalRecord {
            polygon: p.polygon.to_xy(),
            shrunk: p.shrunk_region.to_xy(),
            bbox: p.bbox.to_array(),
            score: p.score,
        })
        .collect();
    serde_json::to_string_pretty(&recs).expect("proposal records serialize")
}

pub fn parse_proposals(text: &str) -> Result<Vec<Proposal>> {
    let recs: Vec<ProposalRecord> = serde_json::from_str(text)?;
    recs.into_iter()
        .enumerate()
        .map(|(k, r)| {
            let [x0, y0, x1, y1] = r.bbox;
            Ok(Proposal {
                polygon: Polygon::from_xy(&r.polygon).map_err(|e| instance_error(k, e))?,
                shrunk_region: Polygon::from_xy(&r.shrunk).map_err(|e| instance_error(k, e))?,
                bbox: AxisAlignedBox::new(x0, y0, x1, y1)?,
                score: r.score,
            })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRecord {
    polygon: Vec<[f64; 2]>,
    #[serde(default = "default_score")]
    score: f64,
    #[serde(default)]
    transcription: String,
}

fn default_score() -> f64 {
    1.0
}

/// Parses a prediction list. Proposal files are accepted too: extra fields
/// are ignored, a missing score counts as 1 and a missing transcription as
/// empty.
pub fn parse_predictions(text: &str) -> Result<Vec<DetectionResult>> {
    let recs: Vec<PredictionRecord> = serde_json::from_str(text)?;
    recs.into_iter()
        .enumerate()
        .map(|(k, r)| {
            Ok(DetectionResult {
                polygon: Polygon::from_xy(&r.polygon).map_err(|e| instance_error(k, e))?,
                transcription: r.transcription,
                score: r.score,
            })
        })
        .collect()
}

pub fn predictions_to_json(dets: &[DetectionResult]) -> String {
    let recs: Vec<PredictionRecord> = dets
        .iter()
        .map(|d| PredictionRecord {
            polygon: d.polygon.to_xy(),
            score: d.score,
            transcription: d.transcription.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&recs).expect("prediction records serialize")
}

pub const TENSOR_MAGIC: [u8; 4] = *b"SPNF";
const TENSOR_HEADER_LEN: usize = 16;

/// Serializes a channel-major `C x H x W` tensor. Values are narrowed to
/// `f32`.
pub fn encode_tensor(
    channels: usize,
    height: usize,
    width: usize,
    values: &[f64],
) -> Result<Vec<u8>> {
    if values.len() != channels * height * width {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a {channels}x{height}x{width} tensor",
            values.len()
        )));
    }
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::TensorFormat(format!("dimension {v} exceeds 32 bits")))
    };
    let mut out = Vec::with_capacity(TENSOR_HEADER_LEN + 4 * values.len());
    out.extend_from_slice(&TENSOR_MAGIC);
    for d in [channels, height, width] {
        out.extend_from_slice(&dim(d)?.to_le_bytes());
    }
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Parses a tensor file into `(channels, height, width, values)`.
pub fn decode_tensor(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    if bytes.len() < TENSOR_HEADER_LEN {
        return Err(Error::TensorFormat(format!(
            "header needs {TENSOR_HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if bytes[..4] != TENSOR_MAGIC {
        return Err(Error::TensorFormat(format!("bad magic {:?}", &bytes[..4])));
    }
    let dim =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    let expected = c
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::TensorFormat(format!("dimensions {c}x{h}x{w} overflow")))?;
    let payload = &bytes[TENSOR_HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::TensorFormat(format!(
            "payload for {c}x{h}x{w} needs {expected} bytes, found {}",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    Ok((c, h, w, values))
}

pub fn encode_feature_grid(grid: &FeatureGrid) -> Vec<u8> {
    encode_tensor(
        grid.channels(),
        grid.height(),
        grid.width(),
        grid.as_slice(),
    )
    .expect("grid shape is consistent")
}

pub fn decode_feature_grid(bytes: &[u8]) -> Result<FeatureGrid> {
    let (c, h, w, values) = decode_tensor(bytes)?;
    FeatureGrid::new(c, h, w, values)
}

pub fn encode_roi_grid(grid: &RoiGrid) -> Vec<u8> {
    encode_tensor(grid.channels(), grid.size(), grid.size(), grid.as_slice())
        .expect("grid shape is consistent")
}

/// PNG bytes with fixed encoder settings.
pub fn encode_png<P>(img: &ImageBuffer<P, Vec<u8>>) -> Result<Vec<u8>>
where
    P: PixelWithColorType<Subpixel = u8>,
{
    let mut buf = Vec::new();
    PngEncoder::new_with_quality(
        Cursor::new(&mut buf),
        CompressionType::Default,
        FilterType::Adaptive,
    )
    .write_image(img.as_raw(), img.width(), img.height(), P::COLOR_TYPE)?;
    Ok(buf)
}

/// Decodes a PNG that must be 8-bit single-channel.
pub fn decode_gray_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    match img {
        DynamicImage::ImageLuma8(g) => Ok(g),
        other => Err(Error::ImageFormat(format!(
            "expected 8-bit grayscale, found {:?}",
            other.color()
        ))),
    }
}

pub fn read_gray_png(path: &Path) -> Result<GrayImage> {
    decode_gray_png(&fs::read(path)?)
}

/// 255 for label pixels, 0 elsewhere.
pub fn binary_to_gray(map: &BinaryMap) -> GrayImage {
    let data = map
        .as_slice()
        .iter()
        .map(|&v| if v != 0 { 255 } else { 0 })
        .collect();
    GrayImage::from_raw(map.width() as u32, map.height() as u32, data).expect("sized from map")
}

/// Pixel value `v` becomes probability `v / 255`.
pub fn gray_to_probability(img: &GrayImage) -> Result<ProbabilityMap> {
    let (w, h) = img.dimensions();
    ProbabilityMap::from_fn(h as usize, w as usize, |r, c| {
        f64::from(img.get_pixel(c as u32, r as u32)[0]) / 255.0
    })
}

pub fn read_lexicon(path: &Path, kind: LexiconKind) -> Result<Lexicon> {
    Ok(Lexicon::from_text(&fs::read_to_string(path)?, kind))
}

/// An image on disk with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub image_path: PathBuf,
    pub annotations: AnnotationSet,
}

impl DatasetItem {
    pub fn load(image_path: &Path, annotation_path: &Path) -> Result<Self> {
        if !image_path.is_file() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("image {} not found", image_path.display()),
            )));
        }
        Ok(Self {
            image_path: image_path.to_path_buf(),
            annotations: read_annotations(annotation_path)?,
        })
    }
}
