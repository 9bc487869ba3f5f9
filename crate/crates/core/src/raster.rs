//! Polygon fill, connected-component labeling and contour tracing on
//! pixel grids.

use crate::error::{Error, Result};
use crate::geometry::{scanline_crossings, Point, Polygon};

/// An `H x W` grid of `{0, 1}` values in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BinaryMap {
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            data: vec![0; height * width],
        })
    }

    /// Builds a map from row-major values; any non-zero entry becomes 1.
    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width} map",
                data.len()
            )));
        }
        let data = data.into_iter().map(|v| u8::from(v != 0)).collect();
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut map = Self::zeros(height, width)?;
        for row in 0..height {
            for col in 0..width {
                map.data[row * width + col] = u8::from(f(row, col));
            }
        }
        Ok(map)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = u8::from(value);
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Pixel-wise OR with a map of the same size.
    pub fn union_with(&mut self, other: &BinaryMap) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a |= *b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &BinaryMap) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    pub(crate) fn check_same_shape(&self, other: &BinaryMap) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::ShapeMismatch(format!(
            "grid dimensions must be positive, got {height}x{width}"
        )));
    }
    Ok(())
}

/// Component labels; 0 is background and components are numbered `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of components `K`.
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.labels
    }

    /// Pixel counts indexed by `label - 1`.
    pub fn pixel_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.count as usize];
        for &l in &self.labels {
            if l > 0 {
                counts[l as usize - 1] += 1;
            }
        }
        counts
    }

    /// `(row, col)` of every pixel carrying `label`, in raster order.
    pub fn pixels(&self, label: u32) -> Vec<(usize, usize)> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }

    pub fn mask(&self, label: u32) -> BinaryMap {
        BinaryMap {
            height: self.height,
            width: self.width,
            data: self.labels.iter().map(|&l| u8::from(l == label)).collect(),
        }
    }

    fn is(&self, row: i64, col: i64, label: u32) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.labels[row as usize * self.width + col as usize] == label
    }
}

/// Sets every pixel whose center lies inside `poly` (boundary inclusive).
/// Pixels outside the canvas are ignored.
pub fn rasterize_polygon(poly: &Polygon, height: usize, width: usize) -> Result<BinaryMap> {
    let mut map = BinaryMap::zeros(height, width)?;
    fill_polygon(&mut map, poly);
    Ok(map)
}

/// ORs the pixel set of `poly` into `map`.
pub fn fill_polygon(map: &mut BinaryMap, poly: &Polygon) {
    let (height, width) = (map.height as i64, map.width as i64);
    let bb = poly.bounding_box();
    let row_lo = ((bb.y_min - 0.5).ceil() as i64).max(0);
    let row_hi = ((bb.y_max - 0.5).floor() as i64).min(height - 1);
    let set = |map: &mut BinaryMap, row: i64, col: i64| {
        if (0..height).contains(&row) && (0..width).contains(&col) {
            map.set(row as usize, col as usize, true);
        }
    };
    let mut xs = Vec::new();
    for row in row_lo..=row_hi {
        let y = row as f64 + 0.5;
        scanline_crossings(poly, y, &mut xs);
        // inside by parity: centers in [x0, x1), [x2, x3), ...
        for pair in xs.chunks_exact(2) {
            let c0 = ((pair[0] - 0.5).ceil() as i64).max(0);
            let c1 = ((pair[1] - 0.5).ceil() as i64).min(width);
            for col in c0..c1 {
                set(map, row, col);
            }
        }
        // centers that may sit exactly on a crossing edge
        for &x in &xs {
            let near = x - 0.5;
            for col in [near.floor() as i64, near.ceil() as i64] {
                if poly.contains(Point::new(col as f64 + 0.5, y)) {
                    set(map, row, col);
                }
            }
        }
    }
    // horizontal edges and vertices lying on a row of centers are boundary
    for (a, b) in poly.edges() {
        let row = a.y - 0.5;
        if row.fract() != 0.0 {
            continue;
        }
        if a.y == b.y {
            let c0 = (a.x.min(b.x) - 0.5).ceil() as i64;
            let c1 = (a.x.max(b.x) - 0.5).floor() as i64;
            for col in c0.max(0)..=c1.min(width - 1) {
                set(map, row as i64, col);
            }
        } else if (a.x - 0.5).fract() == 0.0 {
            set(map, row as i64, (a.x - 0.5) as i64);
        }
    }
}

/// Labels 8-connected foreground components with a two-pass union-find.
/// Labels follow raster-scan discovery order.
pub fn connected_components(b: &BinaryMap) -> LabelMap {
    let (h, w) = (b.height, b.width);
    let mut provisional = vec![0u32; h * w];
    // parent[0] is the unused background slot
    let mut parent: Vec<u32> = vec![0];

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }

    for row in 0..h {
        for col in 0..w {
            if !b.get(row, col) {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            let mut push = |l: u32| {
                if l != 0 {
                    neighbours[n] = l;
                    n += 1;
                }
            };
            if col > 0 {
                push(provisional[row * w + col - 1]);
            }
            if row > 0 {
                let above = (row - 1) * w;
                if col > 0 {
                    push(provisional[above + col - 1]);
                }
                push(provisional[above + col]);
                if col + 1 < w {
                    push(provisional[above + col + 1]);
                }
            }
            let label = if n == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                fresh
            } else {
                let mut root = find(&mut parent, neighbours[0]);
                for &l in &neighbours[1..n] {
                    let other = find(&mut parent, l);
                    if other != root {
                        let (lo, hi) = (root.min(other), root.max(other));
                        parent[hi as usize] = lo;
                        root = lo;
                    }
                }
                root
            };
            provisional[row * w + col] = label;
        }
    }

    let mut final_id = vec![0u32; parent.len()];
    let mut count = 0;
    let labels = provisional
        .iter()
        .map(|&l| {
            if l == 0 {
                return 0;
            }
            let root = find(&mut parent, l) as usize;
            if final_id[root] == 0 {
                count += 1;
                final_id[root] = count;
            }
            final_id[root]
        })
        .collect();
    LabelMap {
        height: h,
        width: w,
        labels,
        count,
    }
}

/// Traces the outer boundary of a component along pixel edges.
///
/// The walk keeps the component on its right-hand side (screen frame) and
/// turns toward diagonal neighbours, so 8-connected pixels stay inside one
/// ring. Interior holes are not traced.
pub fn trace_contour(labels: &LabelMap, label: u32) -> Result<Polygon> {
    if label == 0 {
        return Err(Error::UnknownLabel(label));
    }
    let start_idx = labels
        .labels
        .iter()
        .position(|&l| l == label)
        .ok_or(Error::UnknownLabel(label))?;
    trace_from(labels, label, start_idx)
}

/// Traces from the first pixel (in raster order) of `label`.
pub(crate) fn trace_from(labels: &LabelMap, label: u32, start_idx: usize) -> Result<Polygon> {
    let start = (
        (start_idx % labels.width) as i64,
        (start_idx / labels.width) as i64,
    );
    let fg = |cx: i64, cy: i64| labels.is(cy, cx, label);

    let mut vertices = vec![Point::new(start.0 as f64, start.1 as f64)];
    let (mut x, mut y) = start;
    let (mut dx, mut dy) = (1i64, 0i64);
    loop {
        x += dx;
        y += dy;
        // right-hand normal on screen
        let (rx, ry) = (-dy, dx);
        // pixel top-left corners of the two cells ahead of the vertex
        let ahead_left = cell_at(x, y, dx - rx, dy - ry);
        let ahead_right = cell_at(x, y, dx + rx, dy + ry);
        let (ndx, ndy) = if fg(ahead_left.0, ahead_left.1) {
            (dy, -dx)
        } else if fg(ahead_right.0, ahead_right.1) {
            (dx, dy)
        } else {
            (-dy, dx)
        };
        if (x, y) == start && (ndx, ndy) == (1, 0) {
            break;
        }
        if (ndx, ndy) != (dx, dy) {
            vertices.push(Point::new(x as f64, y as f64));
        }
        dx = ndx;
        dy = ndy;
    }
    Polygon::new(vertices)
}

/// Cell whose center is `vertex + (ox, oy) / 2`, for `ox, oy` in `{-1, 1}`.
fn cell_at(x: i64, y: i64, ox: i64, oy: i64) -> (i64, i64) {
    (x + (ox - 1) / 2, y + (oy - 1) / 2)
}
