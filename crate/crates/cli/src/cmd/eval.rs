use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spotgeom::bench::{
    aggregate, match_detections, match_end_to_end, word_spotting_filter, EvalConfig, ImageMatch,
    Lexicon, LexiconKind, TextNormalization,
};
use spotgeom::io::{parse_predictions, read_annotations, read_lexicon};

use crate::failure::{AtPath, CliResult, Failure};
use crate::files::{list_files, read_text, stem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Polygon detection only.
    Det,
    /// Detection plus transcription.
    E2e,
    /// End-to-end restricted to alphanumeric words of 3+ characters.
    Spotting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Strong,
    Weak,
    Generic,
}

impl From<KindArg> for LexiconKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Strong => LexiconKind::Strong,
            KindArg::Weak => LexiconKind::Weak,
            KindArg::Generic => LexiconKind::Generic,
        }
    }
}

/// Score predictions against ground truth and print the metrics as JSON.
#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value_t = Task::Det)]
    pub task: Task,
    /// Annotation JSON, or a directory keyed by file stem.
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction or proposal JSON, or a directory keyed by file stem.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, env = "SPOTGEOM_IOU", default_value_t = 0.5)]
    pub iou: f64,
    /// Fraction of a detection's area an ignored region must cover to drop
    /// the detection.
    #[arg(long, env = "SPOTGEOM_IGNORE_OVERLAP", default_value_t = 0.5)]
    pub ignore_overlap: f64,
    /// Word list shared by every image.
    #[arg(long, conflicts_with = "lexicon_dir")]
    pub lexicon: Option<PathBuf>,
    /// Directory of per-image word lists named `<stem>.txt`.
    #[arg(long)]
    pub lexicon_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Generic)]
    pub lexicon_kind: KindArg,
    /// Compare transcriptions case-sensitively.
    #[arg(long)]
    pub case_sensitive: bool,
    /// Keep leading and trailing punctuation when comparing transcriptions.
    #[arg(long)]
    pub keep_punctuation: bool,
}

#[derive(Debug, Serialize)]
struct Summary {
    precision: f64,
    recall: f64,
    f_measure: f64,
    matched: usize,
    total_gt: usize,
    total_det: usize,
}

struct Item {
    key: String,
    gt: PathBuf,
    pred: PathBuf,
}

fn pair_items(gt: &Path, pred: &Path) -> CliResult<Vec<Item>> {
    match (gt.is_dir(), pred.is_dir()) {
        (false, false) => Ok(vec![Item {
            key: stem(gt),
            gt: gt.to_path_buf(),
            pred: pred.to_path_buf(),
        }]),
        (true, true) => {
            let gts = list_files(gt, "json")?;
            let preds = list_files(pred, "json")?;
            let gt_keys: BTreeSet<String> = gts.iter().map(|p| stem(p)).collect();
            let pred_keys: BTreeSet<String> = preds.iter().map(|p| stem(p)).collect();
            let no_pred: Vec<&String> = gt_keys.difference(&pred_keys).collect();
            let no_gt: Vec<&String> = pred_keys.difference(&gt_keys).collect();
            if !no_pred.is_empty() || !no_gt.is_empty() {
                return Err(Failure::invalid(format!(
                    "key mismatch: missing predictions for {no_pred:?}; missing ground truth for {no_gt:?}"
                )));
            }
            Ok(gts
                .into_iter()
                .map(|g| {
                    let key = stem(&g);
                    let pred = pred.join(format!("{key}.json"));
                    Item { key, gt: g, pred }
                })
                .collect())
        }
        _ => Err(Failure::invalid(
            "--gt and --pred must both be files or both be directories",
        )),
    }
}

fn score_item(
    item: &Item,
    args: &EvalArgs,
    config: &EvalConfig,
    shared: Option<&Lexicon>,
) -> CliResult<ImageMatch> {
    let ann = read_annotations(&item.gt).at(&item.gt)?;
    let dets = parse_predictions(&read_text(&item.pred)?).at(&item.pred)?;
    let own_lexicon = match &args.lexicon_dir {
        Some(dir) => {
            let path = dir.join(format!("{}.txt", item.key));
            Some(read_lexicon(&path, args.lexicon_kind.into()).at(&path)?)
        }
        None => None,
    };
    let lexicon = own_lexicon.as_ref().or(shared);
    match args.task {
        Task::Det => Ok(match_detections(&ann.instances, &dets, config)),
        Task::E2e => Ok(match_end_to_end(&ann.instances, &dets, config, lexicon).at(&item.pred)?),
        Task::Spotting => {
            let gts = word_spotting_filter(&ann.instances);
            Ok(match_end_to_end(&gts, &dets, config, lexicon).at(&item.pred)?)
        }
    }
}

pub fn run(args: &EvalArgs) -> CliResult {
    for (name, v) in [("iou", args.iou), ("ignore overlap", args.ignore_overlap)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::invalid(format!(
                "{name} out of range: {v} not in [0, 1]"
            )));
        }
    }
    let config = EvalConfig {
        iou_threshold: args.iou,
        ignore_overlap: args.ignore_overlap,
        normalization: TextNormalization {
            case_insensitive: !args.case_sensitive,
            strip_punctuation: !args.keep_punctuation,
        },
    };
    let shared = match &args.lexicon {
        Some(p) => Some(read_lexicon(p, args.lexicon_kind.into()).at(p)?),
        None => None,
    };
    let items = pair_items(&args.gt, &args.pred)?;
    let per_image = items
        .par_iter()
        .map(|item| score_item(item, args, &config, shared.as_ref()))
        .collect::<CliResult<Vec<_>>>()?;
    let report = aggregate(&per_image);
    let summary = Summary {
        precision: report.precision,
        recall: report.recall,
        f_measure: report.f_measure,
        matched: report.matched,
        total_gt: report.total_gt,
        total_det: report.total_det,
    };
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(())
}
