use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use image::DynamicImage;
use rayon::prelude::*;
use spotgeom::bench::{rotate_item, BENCHMARK_ANGLES};
use spotgeom::io::{annotations_to_json, encode_png, read_annotations};
use spotgeom::labelgen::AnnotationSet;

use crate::failure::{AtPath, CliResult, Failure};
use crate::files::{stem, write_atomic};

/// Rotate an image and its annotations onto an expanded canvas.
#[derive(Debug, Args)]
pub struct RotateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Single angle in degrees; positive angles turn clockwise on screen.
    #[arg(
        long,
        allow_negative_numbers = true,
        conflicts_with = "angles",
        required_unless_present = "angles"
    )]
    pub angle: Option<f64>,
    /// Comma-separated angle list, e.g. 15,30,45,60,75,90.
    #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true)]
    pub angles: Option<Vec<f64>>,
    /// Receives `<stem>_rot<angle>.png` and `.json` per angle.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn rotate_dynamic(
    img: &DynamicImage,
    ann: &AnnotationSet,
    angle: f64,
) -> CliResult<(Vec<u8>, AnnotationSet)> {
    Ok(match img {
        DynamicImage::ImageLuma8(i) => {
            let (o, a) = rotate_item(i, ann, angle)?;
            (encode_png(&o)?, a)
        }
        DynamicImage::ImageLumaA8(i) => {
            let (o, a) = rotate_item(i, ann, angle)?;
            (encode_png(&o)?, a)
        }
        DynamicImage::ImageRgb8(i) => {
            let (o, a) = rotate_item(i, ann, angle)?;
            (encode_png(&o)?, a)
        }
        other => {
            let (o, a) = rotate_item(&other.to_rgba8(), ann, angle)?;
            (encode_png(&o)?, a)
        }
    })
}

pub fn output_name(image: &Path, angle: f64) -> String {
    format!("{}_rot{angle}", stem(image))
}

pub fn run(args: &RotateArgs) -> CliResult {
    let angles = match (&args.angle, &args.angles) {
        (Some(a), _) => vec![*a],
        (None, Some(list)) if !list.is_empty() => list.clone(),
        _ => BENCHMARK_ANGLES.to_vec(),
    };
    let img = image::open(&args.image).at(&args.image)?;
    let ann = read_annotations(&args.annotations).at(&args.annotations)?;
    if (img.width() as usize, img.height() as usize) != (ann.width, ann.height) {
        return Err(Failure::invalid(format!(
            "image is {}x{} but annotations declare {}x{}",
            img.width(),
            img.height(),
            ann.width,
            ann.height
        )));
    }
    let outputs = angles
        .par_iter()
        .map(|&a| rotate_dynamic(&img, &ann, a))
        .collect::<CliResult<Vec<_>>>()?;
    fs::create_dir_all(&args.out_dir).at(&args.out_dir)?;
    for (&angle, (png, rotated)) in angles.iter().zip(&outputs) {
        let name = output_name(&args.image, angle);
        write_atomic(&args.out_dir.join(format!("{name}.png")), png)?;
        write_atomic(
            &args.out_dir.join(format!("{name}.json")),
            annotations_to_json(rotated).as_bytes(),
        )?;
    }
    Ok(())
}
