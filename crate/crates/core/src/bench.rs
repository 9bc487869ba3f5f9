//! Rotated benchmark construction and the detection / end-to-end
//! evaluation protocol.
//!
//! Matching follows the usual incidental-text rules: detections are taken
//! in descending score order, each claims the unmatched ground truth of
//! highest IoU when that IoU reaches the threshold, and detections lying
//! mostly inside an ignored ("don't care") region are dropped before
//! scoring.

use std::cmp::Ordering;

use image::{ImageBuffer, Pixel};

use crate::error::{Error, Result};
use crate::geometry::{cos_sin_deg, intersection_area, polygon_iou, Point, Polygon};
use crate::labelgen::{AnnotationSet, TextInstance};

/// Rotation angles of the rotated benchmark, in degrees.
pub const BENCHMARK_ANGLES: [f64; 6] = [15.0, 30.0, 45.0, 60.0, 75.0, 90.0];

/// Size of the canvas that holds a `width x height` image rotated by
/// `angle_deg` without cropping.
pub fn rotated_canvas_size(width: u32, height: u32, angle_deg: f64) -> (u32, u32) {
    let (c, s) = cos_sin_deg(angle_deg);
    let (c, s) = (c.abs(), s.abs());
    let (w, h) = (f64::from(width), f64::from(height));
    // absorb rounding noise before taking the ceiling
    let fit = |v: f64| (v - 1e-9).ceil().max(1.0) as u32;
    (fit(w * c + h * s), fit(w * s + h * c))
}

/// Rotates an image about its center onto an expanded canvas. Bilinear
/// resampling; uncovered pixels are black.
pub fn rotate_image<P>(img: &ImageBuffer<P, Vec<u8>>, angle_deg: f64) -> ImageBuffer<P, Vec<u8>>
where
    P: Pixel<Subpixel = u8>,
{
    let (w, h) = img.dimensions();
    let (nw, nh) = rotated_canvas_size(w, h, angle_deg);
    let (c, s) = cos_sin_deg(angle_deg);
    let center = Point::new(f64::from(w) / 2.0, f64::from(h) / 2.0);
    let new_center = Point::new(f64::from(nw) / 2.0, f64::from(nh) / 2.0);
    let channels = P::CHANNEL_COUNT as usize;
    let src = img.as_raw();
    let (w, h) = (w as i64, h as i64);
    let texel = |row: i64, col: i64, ch: usize| -> f64 {
        if row < 0 || col < 0 || row >= h || col >= w {
            0.0
        } else {
            f64::from(src[(row * w + col) as usize * channels + ch])
        }
    };

    let mut out = vec![0u8; nw as usize * nh as usize * channels];
    for row in 0..nh as usize {
        for col in 0..nw as usize {
            let dx = col as f64 + 0.5 - new_center.x;
            let dy = row as f64 + 0.5 - new_center.y;
            // inverse rotation back into the source frame
            let sx = center.x + dx * c + dy * s;
            let sy = center.y - dx * s + dy * c;
            let gx = sx - 0.5;
            let gy = sy - 0.5;
            let (x0, y0) = (gx.floor(), gy.floor());
            let (fx, fy) = (gx - x0, gy - y0);
            let (c0, r0) = (x0 as i64, y0 as i64);
            let base = (row * nw as usize + col) * channels;
            for ch in 0..channels {
                let v00 = texel(r0, c0, ch);
                let v01 = texel(r0, c0 + 1, ch);
                let v10 = texel(r0 + 1, c0, ch);
                let v11 = texel(r0 + 1, c0 + 1, ch);
                let top = v00 + fx * (v01 - v00);
                let bottom = v10 + fx * (v11 - v10);
                let v = top + fy * (bottom - top);
                out[base + ch] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    ImageBuffer::from_raw(nw, nh, out).expect("buffer sized from canvas")
}

/// Applies the same rigid motion as [`rotate_image`] to a polygon.
pub fn rotate_annotation_polygon(
    poly: &Polygon,
    width: u32,
    height: u32,
    angle_deg: f64,
) -> Polygon {
    let (nw, nh) = rotated_canvas_size(width, height, angle_deg);
    let center = Point::new(f64::from(width) / 2.0, f64::from(height) / 2.0);
    poly.rotate(angle_deg, center).translate(
        f64::from(nw) / 2.0 - center.x,
        f64::from(nh) / 2.0 - center.y,
    )
}

/// Rotates an image and its annotations together onto an expanded canvas.
pub fn rotate_item<P>(
    img: &ImageBuffer<P, Vec<u8>>,
    ann: &AnnotationSet,
    angle_deg: f64,
) -> Result<(ImageBuffer<P, Vec<u8>>, AnnotationSet)>
where
    P: Pixel<Subpixel = u8>,
{
    if !(-180.0..=180.0).contains(&angle_deg) {
        return Err(Error::out_of_range("angle", angle_deg, -180.0, 180.0));
    }
    let (w, h) = img.dimensions();
    if (w as usize, h as usize) != (ann.width, ann.height) {
        return Err(Error::ShapeMismatch(format!(
            "image is {w}x{h}, annotations are {}x{}",
            ann.width, ann.height
        )));
    }
    let rotated = rotate_image(img, angle_deg);
    let instances = ann
        .instances
        .iter()
        .map(|inst| TextInstance {
            polygon: rotate_annotation_polygon(&inst.polygon, w, h, angle_deg),
            ..inst.clone()
        })
        .collect();
    let (nw, nh) = rotated.dimensions();
    let ann = AnnotationSet::new(nw as usize, nh as usize, instances)?;
    Ok((rotated, ann))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub polygon: Polygon,
    /// Empty for detection-only output.
    pub transcription: String,
    pub score: f64,
}

/// How transcriptions are compared in end-to-end scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextNormalization {
    pub case_insensitive: bool,
    pub strip_punctuation: bool,
}

impl Default for TextNormalization {
    fn default() -> Self {
        Self {
            case_insensitive: true,
            strip_punctuation: true,
        }
    }
}

pub fn normalize_transcription(text: &str, rules: &TextNormalization) -> String {
    let t = if rules.strip_punctuation {
        text.trim_matches(|c: char| !c.is_alphanumeric())
    } else {
        text
    };
    if rules.case_insensitive {
        t.to_lowercase()
    } else {
        t.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// A detection covered by an ignored region beyond this fraction of its
    /// own area is left out of precision.
    pub ignore_overlap: f64,
    pub normalization: TextNormalization,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            ignore_overlap: 0.5,
            normalization: TextNormalization::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub gt: usize,
    pub det: usize,
    pub iou: f64,
}

/// Matching outcome for one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageMatch {
    pub matches: Vec<Match>,
    /// Matches that also count for the task being scored.
    pub correct: usize,
    /// Non-ignored ground truths.
    pub care_gt: usize,
    /// Detections not discarded by ignored regions.
    pub kept_det: usize,
    pub ignored_gt: usize,
    pub ignored_det: usize,
}

/// Greedy one-to-one IoU matching of detections to ground truths.
pub fn match_detections(
    gts: &[TextInstance],
    dets: &[DetectionResult],
    config: &EvalConfig,
) -> ImageMatch {
    let ignored: Vec<&Polygon> = gts
        .iter()
        .filter(|g| g.ignore)
        .map(|g| &g.polygon)
        .collect();
    let discarded: Vec<bool> = dets
        .iter()
        .map(|d| {
            let area = d.polygon.area();
            ignored
                .iter()
                .any(|g| intersection_area(&d.polygon, g) / area > config.ignore_overlap)
        })
        .collect();

    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| !discarded[i]).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut taken = vec![false; gts.len()];
    let mut matches = Vec::new();
    for &di in &order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt.ignore || taken[gi] {
                continue;
            }
            let iou = polygon_iou(&dets[di].polygon, &gt.polygon);
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, iou)) = best {
            if iou >= config.iou_threshold {
                taken[gi] = true;
                matches.push(Match {
                    gt: gi,
                    det: di,
                    iou,
                });
            }
        }
    }
    let ignored_gt = gts.iter().filter(|g| g.ignore).count();
    let ignored_det = discarded.iter().filter(|&&d| d).count();
    ImageMatch {
        correct: matches.len(),
        matches,
        care_gt: gts.len() - ignored_gt,
        kept_det: dets.len() - ignored_det,
        ignored_gt,
        ignored_det,
    }
}

/// End-to-end matching: a polygon match counts only when the (optionally
/// lexicon-corrected) transcription equals the ground truth after
/// normalization.
pub fn match_end_to_end(
    gts: &[TextInstance],
    dets: &[DetectionResult],
    config: &EvalConfig,
    lexicon: Option<&Lexicon>,
) -> Result<ImageMatch> {
    let mut m = match_detections(gts, dets, config);
    let mut correct = 0;
    for mt in &m.matches {
        let predicted = match lexicon {
            Some(lex) => lexicon_correct(&dets[mt.det].transcription, lex)?,
            None => dets[mt.det].transcription.clone(),
        };
        let norm = |s: &str| normalize_transcription(s, &config.normalization);
        if norm(&predicted) == norm(&gts[mt.gt].transcription) {
            correct += 1;
        }
    }
    m.correct = correct;
    Ok(m)
}

/// Marks ground truths that are not alphanumeric words of three or more
/// characters as ignored, for word-spotting evaluation.
pub fn word_spotting_filter(gts: &[TextInstance]) -> Vec<TextInstance> {
    gts.iter()
        .map(|g| {
            let qualifies = g.transcription.chars().count() >= 3
                && g.transcription.chars().all(char::is_alphanumeric);
            TextInstance {
                ignore: g.ignore || !qualifies,
                ..g.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// Correct matches across the dataset.
    pub matched: usize,
    /// Non-ignored ground truths.
    pub total_gt: usize,
    /// Detections kept after ignore filtering.
    pub total_det: usize,
    pub ignored_gt: usize,
    pub ignored_det: usize,
    /// `(image index, match)` for every polygon match.
    pub matches: Vec<(usize, Match)>,
}

/// Micro-averaged precision, recall and F-measure over per-image results.
/// Zero denominators give zero metrics.
pub fn aggregate(images: &[ImageMatch]) -> EvalReport {
    let matched: usize = images.iter().map(|m| m.correct).sum();
    let total_gt: usize = images.iter().map(|m| m.care_gt).sum();
    let total_det: usize = images.iter().map(|m| m.kept_det).sum();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(matched, total_det);
    let recall = ratio(matched, total_gt);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    EvalReport {
        precision,
        recall,
        f_measure,
        matched,
        total_gt,
        total_det,
        ignored_gt: images.iter().map(|m| m.ignored_gt).sum(),
        ignored_det: images.iter().map(|m| m.ignored_det).sum(),
        matches: images
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.matches.iter().map(move |&mt| (i, mt)))
            .collect(),
    }
}

/// Dataset-level detection metrics.
pub fn detection_metrics(images: &[ImageMatch]) -> EvalReport {
    aggregate(images)
}

/// End-to-end metrics for one image.
pub fn e2e_metrics(
    gts: &[TextInstance],
    dets: &[DetectionResult],
    config: &EvalConfig,
    lexicon: Option<&Lexicon>,
) -> Result<EvalReport> {
    Ok(aggregate(&[match_end_to_end(gts, dets, config, lexicon)?]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconKind {
    /// A short per-image list.
    Strong,
    /// All words of the test set.
    Weak,
    /// A large vocabulary shared by every image.
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    words: Vec<String>,
    kind: LexiconKind,
}

impl Lexicon {
    /// Drops blank entries and case-insensitive duplicates (first spelling
    /// wins).
    pub fn new<I, S>(words: I, kind: LexiconKind) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::HashSet::new();
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_string())
            .filter(|w| !w.is_empty() && seen.insert(w.to_lowercase()))
            .collect();
        Self { words, kind }
    }

    /// One word per line.
    pub fn from_text(text: &str, kind: LexiconKind) -> Self {
        Self::new(text.lines(), kind)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn kind(&self) -> LexiconKind {
        self.kind
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Character-level edit distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Largest normalized edit distance at which a lexicon word still replaces
/// the prediction.
pub const MAX_CORRECTION_DISTANCE: f64 = 0.5;

/// Replaces `pred` with the closest lexicon word (case-insensitive edit
/// distance, ties broken lexicographically). `pred` is kept when even the
/// best word is further than [`MAX_CORRECTION_DISTANCE`] after dividing by
/// the longer length.
pub fn lexicon_correct(pred: &str, lexicon: &Lexicon) -> Result<String> {
    if lexicon.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    let p = pred.to_lowercase();
    let (dist, word) = lexicon
        .words
        .iter()
        .map(|w| (levenshtein(&p, &w.to_lowercase()), w))
        .min_by(|(da, wa), (db, wb)| da.cmp(db).then_with(|| wa.cmp(wb)))
        .expect("lexicon is non-empty");
    let longest = p.chars().count().max(word.chars().count()).max(1);
    if dist as f64 / longest as f64 > MAX_CORRECTION_DISTANCE {
        Ok(pred.to_string())
    } else {
        Ok(word.clone())
    }
}
