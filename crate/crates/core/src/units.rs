//! Raw pixel units: K-means over-segmentation, per-unit features and the
//! unit adjacency graph.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::labels::{merge_small_regions, LabelGrid, RegionStats};
use crate::par;

const KMEANS_MAX_ITERS: usize = 10;
/// Default multiplier on the spatial scale `sqrt(n / (H·W))` in the unit K-means.
pub const DEFAULT_COMPACTNESS: f64 = 0.5;
/// Connected fragments below this fraction of the mean unit area are merged away.
const MIN_FRAGMENT_FRACTION: f64 = 0.25;

/// Assignment of every pixel to one of `unit_count` spatially connected units.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMap {
    grid: LabelGrid,
    unit_count: usize,
}

impl UnitMap {
    /// Validates density, non-emptiness and 4-connectivity of every unit.
    pub fn new(grid: LabelGrid) -> Result<Self> {
        if !grid.is_dense() {
            return Err(Error::invalid("unit labels must be dense"));
        }
        let unit_count = grid.distinct_count();
        if !grid.all_regions_connected() {
            return Err(Error::invalid("every unit must be 4-connected"));
        }
        Ok(UnitMap { grid, unit_count })
    }

    pub fn grid(&self) -> &LabelGrid {
        &self.grid
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    /// Pixel count of each unit.
    pub fn sizes(&self) -> Vec<usize> {
        self.grid.sizes()
    }
}

#[derive(Debug, Clone, Copy)]
struct Center {
    color: [f64; 3],
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, Default)]
struct ColorStats {
    count: usize,
    color: [f64; 3],
    sx: f64,
    sy: f64,
}

impl ColorStats {
    fn mean_color(&self) -> [f64; 3] {
        self.color.map(|c| c / self.count as f64)
    }
}

impl RegionStats for ColorStats {
    fn size(&self) -> usize {
        self.count
    }

    fn absorb(&mut self, other: &Self) {
        self.count += other.count;
        for c in 0..3 {
            self.color[c] += other.color[c];
        }
        self.sx += other.sx;
        self.sy += other.sy;
    }
}

fn grid_seeds(image: &ImageBuffer, n: usize) -> Vec<Center> {
    let (w, h) = (image.width(), image.height());
    let mut rows = ((n as f64 * h as f64 / w as f64).sqrt().round() as usize).clamp(1, n.min(h));
    while n.div_ceil(rows) > w {
        rows += 1;
    }
    let (base, extra) = (n / rows, n % rows);
    let gray = image.gray();
    let mut seeds = Vec::with_capacity(n);
    for r in 0..rows {
        let cols = base + usize::from(r < extra);
        let y = (r as f64 + 0.5) * h as f64 / rows as f64 - 0.5;
        for c in 0..cols {
            let x = (c as f64 + 0.5) * w as f64 / cols as f64 - 0.5;
            let px = (x.round() as usize).min(w - 1);
            let py = (y.round() as usize).min(h - 1);
            let (px, py) = lowest_gradient_near(&gray, w, h, px, py);
            seeds.push(Center { color: image.get(px, py), x: px as f64, y: py as f64 });
        }
    }
    seeds
}

/// Moves a seed off edges: the pixel of smallest squared gray gradient in the
/// 3×3 window, preferring the centre and then scan order on ties.
fn lowest_gradient_near(gray: &[f64], w: usize, h: usize, cx: usize, cy: usize) -> (usize, usize) {
    let grad = |x: usize, y: usize| {
        let g = |x: usize, y: usize| gray[y * w + x];
        let dx = g((x + 1).min(w - 1), y) - g(x.saturating_sub(1), y);
        let dy = g(x, (y + 1).min(h - 1)) - g(x, y.saturating_sub(1));
        dx * dx + dy * dy
    };
    let mut best = (grad(cx, cy), cx, cy);
    for y in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
        for x in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
            let g = grad(x, y);
            if g < best.0 {
                best = (g, x, y);
            }
        }
    }
    (best.1, best.2)
}

/// Lloyd iterations on (R, G, B, x·s, y·s). Returns per-pixel cluster ids.
fn kmeans_pixels(image: &ImageBuffer, n: usize, seed: u64, compactness: f64) -> Vec<u32> {
    let (w, h) = (image.width(), image.height());
    let s = compactness * (n as f64 / (w * h) as f64).sqrt();
    let s2 = s * s;
    let mut centers = grid_seeds(image, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assign = vec![u32::MAX; w * h];

    for _ in 0..KMEANS_MAX_ITERS {
        let mut next = vec![0u32; w * h];
        let cs = &centers;
        par::for_each_chunk_mut(&mut next, w * 8, |offset, chunk| {
            for (i, out) in chunk.iter_mut().enumerate() {
                let p = offset + i;
                let (x, y) = ((p % w) as f64, (p / w) as f64);
                let col = image.pixels()[p];
                let mut best = f64::INFINITY;
                let mut arg = 0u32;
                for (k, c) in cs.iter().enumerate() {
                    let d = s2 * ((x - c.x).powi(2) + (y - c.y).powi(2));
                    if d >= best {
                        continue;
                    }
                    let d = d + (col[0] - c.color[0]).powi(2) + (col[1] - c.color[1]).powi(2) + (col[2] - c.color[2]).powi(2);
                    if d < best {
                        best = d;
                        arg = k as u32;
                    }
                }
                *out = arg;
            }
        });
        let changed = next != assign;
        assign = next;
        if !changed {
            break;
        }

        let mut acc = vec![ColorStats::default(); n];
        for (p, &k) in assign.iter().enumerate() {
            let a = &mut acc[k as usize];
            let col = image.pixels()[p];
            a.count += 1;
            for c in 0..3 {
                a.color[c] += col[c];
            }
            a.sx += (p % w) as f64;
            a.sy += (p / w) as f64;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a.count > 0 {
                *c = Center { color: a.mean_color(), x: a.sx / a.count as f64, y: a.sy / a.count as f64 };
            } else {
                let p = rng.random_range(0..w * h);
                *c = Center { color: image.pixels()[p], x: (p % w) as f64, y: (p / w) as f64 };
            }
        }
    }
    assign
}

/// Over-segments `image` into roughly `n_requested` 4-connected units.
///
/// Pixels are clustered by K-means on `(R, G, B, c·s·x, c·s·y)` with
/// `s = sqrt(n / (H·W))` and `c` = [`DEFAULT_COMPACTNESS`], starting from grid
/// seeds nudged to the flattest pixel of their 3×3 window. Clusters are then split into connected fragments and fragments
/// under a quarter of the mean unit area are merged into the neighbouring
/// fragment of closest mean colour. Units are numbered in raster order of
/// their centroids. `seed` drives re-seeding of empty clusters.
pub fn oversegment(image: &ImageBuffer, n_requested: usize, seed: u64) -> Result<UnitMap> {
    oversegment_with(image, n_requested, seed, DEFAULT_COMPACTNESS)
}

/// [`oversegment`] with an explicit spatial weight; larger values give more
/// regular, less colour-faithful units.
pub fn oversegment_with(image: &ImageBuffer, n_requested: usize, seed: u64, compactness: f64) -> Result<UnitMap> {
    if !(compactness.is_finite() && compactness > 0.0) {
        return Err(Error::invalid(format!("compactness must be positive, got {compactness}")));
    }
    let (w, h) = (image.width(), image.height());
    if w < 2 || h < 2 {
        return Err(Error::invalid(format!("image must be at least 2x2, got {w}x{h}")));
    }
    if n_requested == 0 || n_requested > w * h {
        return Err(Error::invalid(format!("requested {n_requested} units for {} pixels", w * h)));
    }
    if n_requested == w * h {
        let grid = LabelGrid::new(w, h, (0..(w * h) as u32).collect())?;
        return Ok(UnitMap { grid, unit_count: w * h });
    }

    let clusters = LabelGrid::new(w, h, kmeans_pixels(image, n_requested, seed, compactness))?;
    let (fragments, count) = clusters.connected_components();
    let mut stats = vec![ColorStats::default(); count];
    for (p, &f) in fragments.labels().iter().enumerate() {
        let a = &mut stats[f as usize];
        let col = image.pixels()[p];
        a.count += 1;
        for c in 0..3 {
            a.color[c] += col[c];
        }
        a.sx += (p % w) as f64;
        a.sy += (p / w) as f64;
    }
    let min_size = (MIN_FRAGMENT_FRACTION * (w * h) as f64 / n_requested as f64).ceil() as usize;
    let (merged, stats) = merge_small_regions(&fragments, stats, min_size, |a, b| {
        let (ca, cb) = (a.mean_color(), b.mean_color());
        (0..3).map(|c| (ca[c] - cb[c]).powi(2)).sum::<f64>()
    });

    let mut order: Vec<usize> = (0..stats.len()).collect();
    let centroid = |i: usize| (stats[i].sy / stats[i].count as f64, stats[i].sx / stats[i].count as f64);
    order.sort_by(|&a, &b| {
        let (ya, xa) = centroid(a);
        let (yb, xb) = centroid(b);
        ya.total_cmp(&yb).then(xa.total_cmp(&xb)).then(a.cmp(&b))
    });
    let mut rank = vec![0u32; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32;
    }
    let grid = merged.map(|l| rank[l as usize]);
    let unit_count = order.len();
    Ok(UnitMap { grid, unit_count })
}

/// Feature extraction switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureOptions {
    /// Include the two local-contrast texture rows.
    pub texture: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions { texture: true }
    }
}

/// How a feature row combines over a union of units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Aggregate {
    Mean,
    /// Population variance of the per-pixel quantity whose mean sits in the given row.
    VarianceOf(usize),
}

/// Per-pixel quantities from which unit features are averaged.
struct PixelMaps {
    gray: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    local_std: Vec<f64>,
}

impl PixelMaps {
    fn new(image: &ImageBuffer) -> Self {
        let (w, h) = (image.width(), image.height());
        let gray = image.gray();
        let at = |x: isize, y: isize| {
            let x = x.clamp(0, w as isize - 1) as usize;
            let y = y.clamp(0, h as isize - 1) as usize;
            gray[y * w + x]
        };
        let mut grad_x = vec![0.0; w * h];
        let mut grad_y = vec![0.0; w * h];
        let mut local_std = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let p = y as usize * w + x as usize;
                grad_x[p] = 0.5 * (at(x + 1, y) - at(x - 1, y));
                grad_y[p] = 0.5 * (at(x, y + 1) - at(x, y - 1));
                let mut window = [0.0; 9];
                for (i, (dx, dy)) in (-1..=1).flat_map(|dy| (-1..=1).map(move |dx| (dx, dy))).enumerate() {
                    window[i] = at(x + dx, y + dy);
                }
                let mean = window.iter().sum::<f64>() / 9.0;
                local_std[p] = (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
            }
        }
        PixelMaps { gray, grad_x, grad_y, local_std }
    }
}

/// `d × n` feature matrix, one standardized column per unit. The raw
/// (pre-standardization) values and the per-row centring and scaling are
/// kept so that unions of units can be featurized consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    raw: DMatrix<f64>,
    names: Vec<&'static str>,
    aggregates: Vec<Aggregate>,
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps an already-prepared matrix (used directly as the solver input).
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix has non-finite entries"));
        }
        let d = data.nrows();
        Ok(FeatureMatrix {
            raw: data.clone(),
            data,
            names: vec!["custom"; d],
            aggregates: vec![Aggregate::Mean; d],
            center: vec![0.0; d],
            scale: vec![1.0; d],
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Feature values before row standardization.
    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn unit_count(&self) -> usize {
        self.data.ncols()
    }

    pub fn row_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    /// Raw features of the union of the given `(unit, pixel_count)` members.
    /// Mean rows are pixel-weighted means; variance rows use the law of
    /// total variance, so the result equals direct per-pixel evaluation.
    pub fn aggregate_raw(&self, members: &[(usize, usize)]) -> DVector<f64> {
        let total: f64 = members.iter().map(|&(_, c)| c as f64).sum();
        let mut out = DVector::zeros(self.dim());
        for (r, agg) in self.aggregates.iter().enumerate() {
            out[r] = match *agg {
                Aggregate::Mean => members.iter().map(|&(u, c)| c as f64 * self.raw[(r, u)]).sum::<f64>() / total,
                Aggregate::VarianceOf(m) => {
                    let mean = members.iter().map(|&(u, c)| c as f64 * self.raw[(m, u)]).sum::<f64>() / total;
                    let second = members
                        .iter()
                        .map(|&(u, c)| c as f64 * (self.raw[(r, u)] + self.raw[(m, u)].powi(2)))
                        .sum::<f64>()
                        / total;
                    (second - mean * mean).max(0.0)
                }
            };
        }
        out
    }

    /// Applies this matrix's row standardization to a raw column.
    pub fn standardize(&self, raw: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|r| if self.scale[r] == 0.0 { 0.0 } else { (raw[r] - self.center[r]) / self.scale[r] }),
        )
    }
}

/// Computes the per-unit feature columns:
/// gray, R, G, B, x, y, grad_x, grad_y, grad_mag, grad_dir and optionally
/// tex_mean, tex_var (mean and variance of the 3×3 local gray-level standard
/// deviation). Rows are z-scored; constant rows become zero.
pub fn extract_features(image: &ImageBuffer, units: &UnitMap, options: FeatureOptions) -> Result<FeatureMatrix> {
    let (w, h) = (image.width(), image.height());
    if units.width() != w || units.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "unit map {}x{} vs image {w}x{h}",
            units.width(),
            units.height()
        )));
    }
    let maps = PixelMaps::new(image);
    let mut names = vec!["gray", "r", "g", "b", "x", "y", "grad_x", "grad_y", "grad_mag", "grad_dir"];
    let mut aggregates = vec![Aggregate::Mean; names.len()];
    if options.texture {
        names.extend(["tex_mean", "tex_var"]);
        aggregates.extend([Aggregate::Mean, Aggregate::VarianceOf(10)]);
    }
    let d = names.len();
    let n = units.unit_count();

    let mut sums = DMatrix::<f64>::zeros(d, n);
    let mut counts = vec![0usize; n];
    for (p, &u) in units.grid().labels().iter().enumerate() {
        let u = u as usize;
        counts[u] += 1;
        let col = image.pixels()[p];
        let (gx, gy) = (maps.grad_x[p], maps.grad_y[p]);
        let vals = [
            maps.gray[p],
            col[0],
            col[1],
            col[2],
            (p % w) as f64,
            (p / w) as f64,
            gx,
            gy,
            gx.hypot(gy),
            gy.atan2(gx),
            maps.local_std[p],
            maps.local_std[p] * maps.local_std[p],
        ];
        for r in 0..d {
            sums[(r, u)] += vals[r];
        }
    }
    if let Some(u) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidState(format!("unit {u} is empty")));
    }
    let mut raw = sums;
    for (u, &c) in counts.iter().enumerate() {
        raw.column_mut(u).unscale_mut(c as f64);
    }
    if options.texture {
        for u in 0..n {
            let m = raw[(10, u)];
            raw[(11, u)] = (raw[(11, u)] - m * m).max(0.0);
        }
    }

    let mut center = vec![0.0; d];
    let mut scale = vec![0.0; d];
    let mut data = raw.clone();
    for r in 0..d {
        let row = raw.row(r);
        let mean = row.mean();
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        center[r] = mean;
        if sd <= 1e-12 * mean.abs().max(1.0) {
            data.row_mut(r).fill(0.0);
        } else {
            scale[r] = sd;
            data.row_mut(r).apply(|v| *v = (*v - mean) / sd);
        }
    }
    Ok(FeatureMatrix { data, raw, names, aggregates, center, scale })
}

/// Symmetric binary unit adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    omega: DMatrix<f64>,
}

impl AdjacencyMatrix {
    /// Validates symmetry, binary entries and the zero diagonal.
    pub fn from_matrix(omega: DMatrix<f64>) -> Result<Self> {
        if !omega.is_square() {
            return Err(Error::invalid("adjacency must be square"));
        }
        let n = omega.nrows();
        for i in 0..n {
            if omega[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("adjacency diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let v = omega[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!("adjacency entry ({i},{j}) = {v} is not binary")));
                }
                if v != omega[(j, i)] {
                    return Err(Error::invalid(format!("adjacency is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(AdjacencyMatrix { omega })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// ω_ij = 1 iff units i ≠ j share at least one 4-adjacent pixel pair.
pub fn unit_adjacency(units: &UnitMap) -> AdjacencyMatrix {
    let n = units.unit_count();
    let mut omega = DMatrix::zeros(n, n);
    for (a, b) in units.grid().adjacent_pairs() {
        omega[(a as usize, b as usize)] = 1.0;
        omega[(b as usize, a as usize)] = 1.0;
    }
    AdjacencyMatrix { omega }
}
