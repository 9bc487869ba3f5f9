use std::path::{Path, PathBuf};

use clap::Args;
use spotgeom::io::{binary_to_gray, encode_png, read_annotations};
use spotgeom::labelgen::{make_seg_label_on, DEFAULT_SHRINK_RATIO};

use crate::failure::{AtPath, CliResult};
use crate::files::{parse_canvas, run_batch};

/// Render shrunk segmentation labels as 8-bit PNGs (255 = text).
#[derive(Debug, Args)]
pub struct LabelgenArgs {
    /// Annotation JSON file, or a directory of them.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output PNG, or output directory for directory input.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "SPOTGEOM_SHRINK_RATIO", default_value_t = DEFAULT_SHRINK_RATIO)]
    pub shrink_ratio: f64,
    /// Label size as HxW; defaults to the annotation canvas.
    #[arg(long, value_parser = parse_canvas)]
    pub canvas: Option<(usize, usize)>,
}

fn label_png(path: &Path, args: &LabelgenArgs) -> CliResult<Vec<u8>> {
    let ann = read_annotations(path).at(path)?;
    let (h, w) = args.canvas.unwrap_or((ann.height, ann.width));
    let label = make_seg_label_on(&ann, args.shrink_ratio, h, w)?;
    Ok(encode_png(&binary_to_gray(&label))?)
}

pub fn run(args: &LabelgenArgs) -> CliResult {
    run_batch(&args.annotations, "json", &args.out, "png", |p| {
        label_png(p, args)
    })?;
    Ok(())
}
