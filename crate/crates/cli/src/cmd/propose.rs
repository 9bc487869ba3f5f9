use std::path::{Path, PathBuf};

use clap::Args;
use spotgeom::io::{gray_to_probability, proposals_to_json, read_gray_png};
use spotgeom::proposal::{
    extract_proposals, ProposalParams, DEFAULT_MIN_AREA, DEFAULT_THRESHOLD, DEFAULT_UNCLIP_RATIO,
};

use crate::failure::{AtPath, CliResult, Failure};
use crate::files::run_batch;

/// Turn probability PNGs (value / 255) into polygon proposals.
#[derive(Debug, Args)]
pub struct ProposeArgs {
    /// Grayscale PNG, or a directory of them.
    #[arg(long)]
    pub segmap: PathBuf,
    /// Proposal JSON, or output directory for directory input.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "SPOTGEOM_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, env = "SPOTGEOM_UNCLIP_RATIO", default_value_t = DEFAULT_UNCLIP_RATIO)]
    pub unclip_ratio: f64,
    #[arg(long, env = "SPOTGEOM_MIN_AREA", default_value_t = DEFAULT_MIN_AREA)]
    pub min_area: f64,
    /// Douglas-Peucker tolerance applied to output polygons; 0 keeps every
    /// vertex.
    #[arg(long, env = "SPOTGEOM_SIMPLIFY_EPSILON", default_value_t = 0.0)]
    pub simplify_epsilon: f64,
}

fn propose(path: &Path, params: &ProposalParams, epsilon: f64) -> CliResult<Vec<u8>> {
    let img = read_gray_png(path).at(path)?;
    let map = gray_to_probability(&img)?;
    let mut proposals = extract_proposals(&map, params)?;
    if epsilon > 0.0 {
        for p in &mut proposals {
            p.polygon = p.polygon.simplify(epsilon);
            p.bbox = p.polygon.bounding_box();
        }
    }
    Ok(proposals_to_json(&proposals).into_bytes())
}

pub fn run(args: &ProposeArgs) -> CliResult {
    let params = ProposalParams {
        threshold: args.threshold,
        unclip_ratio: args.unclip_ratio,
        min_area: args.min_area,
    };
    params.validate()?;
    if args.simplify_epsilon.is_nan() || args.simplify_epsilon < 0.0 {
        return Err(Failure::invalid(format!(
            "simplify epsilon must be non-negative, got {}",
            args.simplify_epsilon
        )));
    }
    run_batch(&args.segmap, "png", &args.out, "json", |p| {
        propose(p, &params, args.simplify_epsilon)
    })?;
    Ok(())
}
