use std::path::PathBuf;

use clap::{Args, ValueEnum};
use spotgeom::io::{
    decode_feature_grid, encode_roi_grid, gray_to_probability, parse_proposals, read_gray_png,
};
use spotgeom::roi::{
    hard_roi_mask, render_polygon_mask, roi_align_with, sample_soft_mask, soft_roi_mask,
    RoiAlignConfig, MASK_SIZE,
};

use crate::failure::{AtPath, CliResult, Failure, EXIT_INDEX};
use crate::files::{read_bytes, read_text, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskMode {
    /// Binary polygon mask.
    Hard,
    /// Probability map sampled over the box.
    Soft,
}

/// Sample one proposal's RoI from a feature tensor and mask it.
#[derive(Debug, Args)]
pub struct MaskroiArgs {
    /// Feature tensor (SPNF file, C x H x W).
    #[arg(long)]
    pub features: PathBuf,
    /// Proposal JSON as written by `propose`.
    #[arg(long)]
    pub proposals: PathBuf,
    /// Zero-based proposal index.
    #[arg(long)]
    pub index: usize,
    /// Output SPNF file (C x 32 x 32).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, env = "SPOTGEOM_MASK_MODE", default_value_t = MaskMode::Hard)]
    pub mode: MaskMode,
    /// Probability PNG for soft masking.
    #[arg(long, required_if_eq("mode", "soft"))]
    pub segmap: Option<PathBuf>,
    /// Feature pixels per image pixel.
    #[arg(long, env = "SPOTGEOM_SPATIAL_SCALE", default_value_t = 1.0)]
    pub spatial_scale: f64,
}

pub fn run(args: &MaskroiArgs) -> CliResult {
    let features = decode_feature_grid(&read_bytes(&args.features)?).at(&args.features)?;
    let proposals = parse_proposals(&read_text(&args.proposals)?).at(&args.proposals)?;
    let proposal = proposals.get(args.index).ok_or_else(|| {
        Failure::new(
            EXIT_INDEX,
            format!(
                "proposal index {} out of range ({} proposals)",
                args.index,
                proposals.len()
            ),
        )
    })?;
    let config = RoiAlignConfig {
        spatial_scale: args.spatial_scale,
        ..Default::default()
    };
    let roi = roi_align_with(&features, &proposal.bbox, &config)?;
    let masked = match args.mode {
        MaskMode::Hard => hard_roi_mask(
            &roi,
            &render_polygon_mask(&proposal.polygon, &proposal.bbox),
        )?,
        MaskMode::Soft => {
            let path = args
                .segmap
                .as_ref()
                .expect("clap requires --segmap in soft mode");
            let map = gray_to_probability(&read_gray_png(path).at(path)?)?;
            soft_roi_mask(&roi, &sample_soft_mask(&map, &proposal.bbox, MASK_SIZE)?)?
        }
    };
    write_atomic(&args.out, &encode_roi_grid(&masked))
}
