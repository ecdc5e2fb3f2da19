//! Integer label grids: connectivity, boundaries, small-region merging and
//! file formats (16-bit PNG, CSV).

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major `width × height` grid of integer labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelGrid {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelGrid {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("label grid must be non-empty"));
        }
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label grid {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(LabelGrid { width, height, labels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u32) -> Result<Self> {
        let labels = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &LabelGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct label values.
    pub fn distinct_count(&self) -> usize {
        self.labels.iter().collect::<BTreeSet<_>>().len()
    }

    /// True when the labels are exactly `0..distinct_count`.
    pub fn is_dense(&self) -> bool {
        self.max_label() as usize + 1 == self.distinct_count()
    }

    /// Relabels to `0..k` in order of first appearance (raster order).
    pub fn densified(&self) -> LabelGrid {
        let mut map = HashMap::new();
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let next = map.len() as u32;
                *map.entry(*l).or_insert(next)
            })
            .collect();
        LabelGrid { width: self.width, height: self.height, labels }
    }

    /// Replaces each label `l` with `f(l)`.
    pub fn map(&self, f: impl Fn(u32) -> u32) -> LabelGrid {
        LabelGrid { width: self.width, height: self.height, labels: self.labels.iter().map(|&l| f(l)).collect() }
    }

    /// Pixel counts per label; requires dense labels.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0usize; self.max_label() as usize + 1];
        for &l in &self.labels {
            s[l as usize] += 1;
        }
        s
    }

    /// Splits every label into its 4-connected components. Components are
    /// numbered densely in raster order of their first pixel.
    pub fn connected_components(&self) -> (LabelGrid, usize) {
        const UNSET: u32 = u32::MAX;
        let (w, h) = (self.width, self.height);
        let mut out = vec![UNSET; w * h];
        let mut stack = Vec::new();
        let mut next = 0u32;
        for start in 0..w * h {
            if out[start] != UNSET {
                continue;
            }
            let lab = self.labels[start];
            out[start] = next;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (x, y) = (p % w, p / w);
                let mut visit = |q: usize| {
                    if out[q] == UNSET && self.labels[q] == lab {
                        out[q] = next;
                        stack.push(q);
                    }
                };
                if x > 0 {
                    visit(p - 1);
                }
                if x + 1 < w {
                    visit(p + 1);
                }
                if y > 0 {
                    visit(p - w);
                }
                if y + 1 < h {
                    visit(p + w);
                }
            }
            next += 1;
        }
        (LabelGrid { width: w, height: h, labels: out }, next as usize)
    }

    /// True when every label forms a single 4-connected region.
    pub fn all_regions_connected(&self) -> bool {
        self.connected_components().1 == self.distinct_count()
    }

    /// A pixel is a boundary pixel when any 4-neighbour carries a different
    /// label. The image border alone does not make a boundary.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        let mut mask = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let l = self.labels[p];
                mask[p] = (x > 0 && self.labels[p - 1] != l)
                    || (x + 1 < w && self.labels[p + 1] != l)
                    || (y > 0 && self.labels[p - w] != l)
                    || (y + 1 < h && self.labels[p + w] != l);
            }
        }
        mask
    }

    /// Unordered pairs of distinct labels that touch through a 4-adjacent pixel pair.
    pub fn adjacent_pairs(&self) -> BTreeSet<(u32, u32)> {
        let (w, h) = (self.width, self.height);
        let mut pairs = BTreeSet::new();
        let mut add = |a: u32, b: u32| {
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        };
        for y in 0..h {
            for x in 0..w {
                let l = self.labels[y * w + x];
                if x + 1 < w {
                    add(l, self.labels[y * w + x + 1]);
                }
                if y + 1 < h {
                    add(l, self.labels[(y + 1) * w + x]);
                }
            }
        }
        pairs
    }

    pub fn write_png16(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if self.max_label() > u16::MAX as u32 {
            return Err(Error::invalid(format!("label {} does not fit a 16-bit PNG", self.max_label())));
        }
        let data: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(self.width as u32, self.height as u32, data)
            .expect("buffer size matches dimensions");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image { path: path.to_path_buf(), source })
    }

    pub fn read_png16(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
        let luma = img.to_luma16();
        let labels = luma.as_raw().iter().map(|&v| v as u32).collect();
        Self::new(luma.width() as usize, luma.height() as usize, labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io_err = |e: csv::Error| Error::Format { path: path.to_path_buf(), detail: e.to_string() };
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io_err)?;
        for row in self.labels.chunks(self.width) {
            wtr.write_record(row.iter().map(|l| l.to_string())).map_err(io_err)?;
        }
        wtr.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let fmt = |detail: String| Error::Format { path: path.to_path_buf(), detail };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| fmt(e.to_string()))?;
        let mut labels = Vec::new();
        let mut width = None;
        let mut height = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| fmt(e.to_string()))?;
            if width.is_some_and(|w| w != rec.len()) {
                return Err(fmt(format!("row {height} has {} columns", rec.len())));
            }
            width = Some(rec.len());
            for field in rec.iter() {
                labels.push(field.parse::<u32>().map_err(|e| fmt(format!("bad label {field:?}: {e}")))?);
            }
            height += 1;
        }
        Self::new(width.unwrap_or(0), height, labels)
    }

    /// Writes CSV for a `.csv` extension and 16-bit PNG otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if has_ext(path.as_ref(), "csv") {
            self.write_csv(path)
        } else {
            self.write_png16(path)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        if has_ext(path.as_ref(), "csv") {
            Self::read_csv(path)
        } else {
            Self::read_png16(path)
        }
    }
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Per-region statistics that can be combined when two regions merge.
pub(crate) trait RegionStats {
    fn size(&self) -> usize;
    fn absorb(&mut self, other: &Self);
}

/// Greedily merges every region smaller than `min_size` pixels into the
/// adjacent region closest under `dist`, smallest regions first. `regions`
/// must be dense and connected per label; `stats[i]` describes region `i`.
/// Returns the merged grid (dense, raster-ordered) and the surviving stats in
/// the new label order.
pub(crate) fn merge_small_regions<S, D>(regions: &LabelGrid, mut stats: Vec<S>, min_size: usize, dist: D) -> (LabelGrid, Vec<S>)
where
    S: RegionStats + Clone,
    D: Fn(&S, &S) -> f64,
{
    let count = stats.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for (a, b) in regions.adjacent_pairs() {
        adj[a as usize].insert(b as usize);
        adj[b as usize].insert(a as usize);
    }
    let mut parent: Vec<usize> = (0..count).collect();
    let mut queue: BTreeSet<(usize, usize)> =
        (0..count).filter(|&r| stats[r].size() < min_size).map(|r| (stats[r].size(), r)).collect();

    while let Some((size, r)) = queue.pop_first() {
        debug_assert_eq!(size, stats[r].size());
        let mut best: Option<(f64, usize)> = None;
        for &nb in &adj[r] {
            let d = dist(&stats[r], &stats[nb]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, nb));
            }
        }
        let Some((_, target)) = best else { continue };

        let old_size = stats[target].size();
        let absorbed = stats[r].clone();
        stats[target].absorb(&absorbed);
        parent[r] = target;
        let neighbours = std::mem::take(&mut adj[r]);
        for m in neighbours {
            adj[m].remove(&r);
            if m != target {
                adj[m].insert(target);
                adj[target].insert(m);
            }
        }
        if queue.remove(&(old_size, target)) || old_size < min_size {
            if stats[target].size() < min_size {
                queue.insert((stats[target].size(), target));
            }
        }
    }

    let root = |mut r: usize| {
        while parent[r] != r {
            r = parent[r];
        }
        r
    };
    let roots: Vec<usize> = (0..count).map(root).collect();
    let merged = regions.map(|l| roots[l as usize] as u32).densified();
    let mut order = vec![usize::MAX; count];
    for (&old, &new) in regions.labels().iter().zip(merged.labels()) {
        order[new as usize] = roots[old as usize];
    }
    let k = merged.max_label() as usize + 1;
    let kept = order[..k].iter().map(|&r| stats[r].clone()).collect();
    (merged, kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug)]
    struct Count(usize, f64);

    impl RegionStats for Count {
        fn size(&self) -> usize {
            self.0
        }
        fn absorb(&mut self, other: &Self) {
            self.1 = (self.1 * self.0 as f64 + other.1 * other.0 as f64) / (self.0 + other.0) as f64;
            self.0 += other.0;
        }
    }

    #[test]
    fn components_split_disconnected_labels() {
        // label 0 occupies both outer columns
        let g = LabelGrid::from_fn(3, 2, |x, _| if x == 1 { 1 } else { 0 }).unwrap();
        let (c, n) = g.connected_components();
        assert_eq!(n, 3);
        assert_eq!(c.labels(), &[0, 1, 2, 0, 1, 2]);
        assert!(!g.all_regions_connected());
    }

    #[test]
    fn diagonal_pixels_are_not_connected() {
        let g = LabelGrid::new(2, 2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(g.connected_components().1, 4);
    }

    #[test]
    fn boundary_mask_two_stripes() {
        let g = LabelGrid::from_fn(4, 4, |_, y| (y >= 2) as u32).unwrap();
        let m = g.boundary_mask();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(m[y * 4 + x], y == 1 || y == 2);
            }
        }
        let single = LabelGrid::new(3, 3, vec![5; 9]).unwrap();
        assert!(single.boundary_mask().iter().all(|b| !b));
    }

    #[test]
    fn densify_first_appearance() {
        let g = LabelGrid::new(4, 1, vec![7, 3, 7, 9]).unwrap();
        assert_eq!(g.densified().labels(), &[0, 1, 0, 2]);
        assert!(!g.is_dense());
        assert!(g.densified().is_dense());
    }

    #[test]
    fn merge_picks_closest_neighbour() {
        // regions: 0 (left, value 0.0), 1 (single pixel, value 0.9), 2 (right, value 1.0)
        let g = LabelGrid::new(5, 1, vec![0, 0, 1, 2, 2]).unwrap();
        let stats = vec![Count(2, 0.0), Count(1, 0.9), Count(2, 1.0)];
        let (m, s) = merge_small_regions(&g, stats, 2, |a, b| (a.1 - b.1).abs());
        assert_eq!(m.labels(), &[0, 0, 1, 1, 1]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].0, 3);
    }

    #[test]
    fn isolated_region_without_neighbours_survives() {
        let g = LabelGrid::new(2, 1, vec![0, 0]).unwrap();
        let (m, s) = merge_small_regions(&g, vec![Count(2, 0.0)], 10, |_, _| 0.0);
        assert_eq!(m.labels(), &[0, 0]);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn csv_and_png_io() {
        let dir = tempfile::tempdir().unwrap();
        let g = LabelGrid::from_fn(5, 3, |x, y| (x * 3 + y * 1000) as u32).unwrap();
        let csv = dir.path().join("l.csv");
        g.save(&csv).unwrap();
        assert_eq!(LabelGrid::load(&csv).unwrap(), g);
        let png = dir.path().join("l.png");
        g.save(&png).unwrap();
        assert_eq!(LabelGrid::load(&png).unwrap(), g);
        let big = LabelGrid::new(1, 1, vec![70_000]).unwrap();
        assert!(big.write_png16(dir.path().join("b.png")).is_err());
    }
}
