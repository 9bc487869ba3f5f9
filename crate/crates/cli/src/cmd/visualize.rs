use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{ArgGroup, Args};
use image::{DynamicImage, Rgb, RgbImage};
use spotgeom::geometry::Polygon;
use spotgeom::io::{encode_png, parse_proposals, read_annotations};

use crate::failure::{AtPath, CliResult};
use crate::files::{parse_canvas, read_text, write_atomic};

const STROKE: Rgb<u8> = Rgb([255, 0, 0]);
/// Spacing of the points plotted along each edge, in pixels.
const STROKE_STEP: f64 = 0.25;

/// Draw proposals or annotations over an image (PNG) or on a blank SVG
/// canvas when no image is given.
#[derive(Debug, Args)]
#[command(group(ArgGroup::new("shapes").required(true).args(["proposals", "annotations"])))]
pub struct VisualizeArgs {
    /// Background image; without it the output is SVG.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// SVG canvas as HxW; defaults to the annotation canvas or the extent
    /// of the proposals.
    #[arg(long, value_parser = parse_canvas)]
    pub canvas: Option<(usize, usize)>,
}

fn stroke(img: &mut RgbImage, poly: &Polygon) {
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    for (a, b) in poly.edges() {
        let steps = (a.distance(b) / STROKE_STEP).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let x = (a.x + t * (b.x - a.x)).floor() as i64;
            let y = (a.y + t * (b.y - a.y)).floor() as i64;
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.put_pixel(x as u32, y as u32, STROKE);
            }
        }
    }
}

/// One closed `<path>` per polygon.
pub fn render_svg(polygons: &[Polygon], height: usize, width: usize) -> String {
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    for poly in polygons {
        let mut d = String::new();
        for (i, v) in poly.vertices().iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{} {} ", v.x, v.y);
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            "  <path d=\"{d}\" fill=\"none\" stroke=\"red\" stroke-width=\"1\"/>"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn encode_dynamic(img: &DynamicImage) -> CliResult<Vec<u8>> {
    Ok(match img {
        DynamicImage::ImageLuma8(i) => encode_png(i)?,
        DynamicImage::ImageLumaA8(i) => encode_png(i)?,
        DynamicImage::ImageRgb8(i) => encode_png(i)?,
        DynamicImage::ImageRgba8(i) => encode_png(i)?,
        other => encode_png(&other.to_rgba8())?,
    })
}

pub fn run(args: &VisualizeArgs) -> CliResult {
    let (polygons, declared) = if let Some(p) = &args.proposals {
        let props = parse_proposals(&read_text(p)?).at(p)?;
        (
            props.into_iter().map(|p| p.polygon).collect::<Vec<_>>(),
            None,
        )
    } else {
        let p = args
            .annotations
            .as_ref()
            .expect("clap requires one shape source");
        let ann = read_annotations(p).at(p)?;
        let canvas = (ann.height, ann.width);
        (
            ann.instances.into_iter().map(|i| i.polygon).collect(),
            Some(canvas),
        )
    };

    let bytes = match &args.image {
        Some(path) => {
            let img = image::open(path).at(path)?;
            if polygons.is_empty() {
                encode_dynamic(&img)?
            } else {
                let mut rgb = img.to_rgb8();
                for poly in &polygons {
                    stroke(&mut rgb, poly);
                }
                encode_png(&rgb)?
            }
        }
        None => {
            let (h, w) = args.canvas.or(declared).unwrap_or_else(|| {
                polygons.iter().fold((1, 1), |(h, w), p| {
                    let b = p.bounding_box();
                    (
                        h.max(b.y_max.ceil() as usize),
                        w.max(b.x_max.ceil() as usize),
                    )
                })
            });
            render_svg(&polygons, h, w).into_bytes()
        }
    };
    write_atomic(&args.out, &bytes)
}
