//! Affinity construction, normalized spectral clustering of units and
//! pixel-level repair of the resulting superpixels.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kmeans::{cluster_rows, densify};
use crate::labels::{merge_small_regions, LabelGrid, RegionStats};
use crate::units::{FeatureMatrix, UnitMap};

/// Degree assigned to units with no affinity so `D^{-1/2}` stays finite.
const ZERO_DEGREE: f64 = 1e-12;
const KMEANS_RESTARTS: usize = 10;

/// Symmetric non-negative affinity `G = (|Zᵀ| + |Z|) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    g: DMatrix<f64>,
}

impl AffinityGraph {
    pub fn from_matrix(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::invalid("affinity must be square"));
        }
        if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("affinity entries must be finite and non-negative"));
        }
        if g != g.transpose() {
            return Err(Error::invalid("affinity must be symmetric"));
        }
        Ok(AffinityGraph { g })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

pub fn affinity(z: &DMatrix<f64>) -> Result<AffinityGraph> {
    if !z.is_square() {
        return Err(Error::invalid("coding matrix must be square"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("affinity", "coding matrix has non-finite entries"));
    }
    let n = z.nrows();
    Ok(AffinityGraph { g: DMatrix::from_fn(n, n, |i, j| 0.5 * (z[(i, j)].abs() + z[(j, i)].abs())) })
}

/// Normalized spectral clustering of `g` into `k` groups.
///
/// Embeds units with the `k` eigenvectors of `I − D^{-1/2} G D^{-1/2}` of
/// smallest eigenvalue, normalizes rows, and runs seeded k-means++. Units
/// with no affinity at all receive their own provisional labels and the
/// remaining units are cut into `k` minus that many groups (at least one). Labels are
/// dense in order of first appearance.
pub fn ncut(g: &AffinityGraph, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot cut {n} units into {k} clusters")));
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }
    if k == n {
        return Ok((0..n).collect());
    }
    let m = g.matrix();
    let degree: Vec<f64> = (0..n).map(|i| m.row(i).sum()).collect();
    let connected: Vec<usize> = (0..n).filter(|&i| degree[i] > 0.0).collect();
    let isolated = n - connected.len();
    if isolated > 0 {
        log::debug!("ncut: {isolated} units have zero affinity");
    }

    let mut labels = vec![usize::MAX; n];
    // isolated units count toward k; the connected part gets what remains
    let clusters = if connected.is_empty() { 0 } else { k.saturating_sub(isolated).clamp(1, connected.len()) };
    if clusters > 0 {
        let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / d.max(ZERO_DEGREE).sqrt()).collect();
        let c = connected.len();
        let lsym = DMatrix::from_fn(c, c, |a, b| {
            let (i, j) = (connected[a], connected[b]);
            let off = inv_sqrt[i] * m[(i, j)] * inv_sqrt[j];
            if a == b {
                1.0 - off
            } else {
                -off
            }
        });
        let eig = SymmetricEigen::try_new(lsym, f64::EPSILON, 0)
            .ok_or_else(|| Error::numerical("ncut", "Laplacian eigendecomposition did not converge"))?;
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let mut embed = DMatrix::from_fn(c, clusters, |i, j| eig.eigenvectors[(i, order[j])]);
        for mut row in embed.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        let sub = cluster_rows(&embed, clusters, seed, KMEANS_RESTARTS);
        for (a, &i) in connected.iter().enumerate() {
            labels[i] = sub[a];
        }
    }
    let mut next = labels.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |&l| l + 1);
    for l in labels.iter_mut().filter(|l| **l == usize::MAX) {
        *l = next;
        next += 1;
    }
    Ok(densify(&labels))
}

/// Final pixel labeling: dense labels, every superpixel non-empty and 4-connected.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelLabeling {
    grid: LabelGrid,
    realized_k: usize,
}

impl SuperpixelLabeling {
    /// Validates density and connectivity.
    pub fn new(grid: LabelGrid) -> Result<Self> {
        if !grid.is_dense() {
            return Err(Error::invalid("superpixel labels must be dense"));
        }
        if !grid.all_regions_connected() {
            return Err(Error::invalid("every superpixel must be 4-connected"));
        }
        let realized_k = grid.distinct_count();
        Ok(SuperpixelLabeling { grid, realized_k })
    }

    pub fn grid(&self) -> &LabelGrid {
        &self.grid
    }

    pub fn realized_k(&self) -> usize {
        self.realized_k
    }

    pub fn into_grid(self) -> LabelGrid {
        self.grid
    }
}

/// Options for [`merge_isolated`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeOptions {
    /// Regions smaller than this fraction of `H·W/K` pixels are merged.
    pub min_size_fraction: f64,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions { min_size_fraction: 0.1 }
    }
}

#[derive(Clone)]
struct Region<'a> {
    size: usize,
    members: Vec<(usize, usize)>,
    feature: DVector<f64>,
    x: &'a FeatureMatrix,
}

impl RegionStats for Region<'_> {
    fn size(&self) -> usize {
        self.size
    }

    fn absorb(&mut self, other: &Self) {
        self.size += other.size;
        self.members.extend_from_slice(&other.members);
        self.feature = self.x.standardize(&self.x.aggregate_raw(&self.members));
    }
}

/// Lifts unit labels to pixels, splits every label into connected
/// components, and merges components below the minimum size into the
/// spatially adjacent component with the nearest standardized feature vector.
pub fn merge_isolated(unit_labels: &[usize], units: &UnitMap, x: &FeatureMatrix, options: MergeOptions) -> Result<SuperpixelLabeling> {
    let n = units.unit_count();
    if unit_labels.len() != n || x.unit_count() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} unit labels and {} feature columns for {n} units",
            unit_labels.len(),
            x.unit_count()
        )));
    }
    let k = unit_labels.iter().collect::<std::collections::BTreeSet<_>>().len();
    let pixels = units.grid().map(|u| unit_labels[u as usize] as u32);
    let (components, count) = pixels.connected_components();

    let sizes = units.sizes();
    let mut members: Vec<Vec<(usize, usize)>> = vec![Vec::new(); count];
    let mut seen = vec![false; n];
    for (&c, &u) in components.labels().iter().zip(units.grid().labels()) {
        if !seen[u as usize] {
            seen[u as usize] = true;
            members[c as usize].push((u as usize, sizes[u as usize]));
        }
    }
    let regions: Vec<Region> = members
        .into_iter()
        .map(|m| Region {
            size: m.iter().map(|&(_, s)| s).sum(),
            feature: x.standardize(&x.aggregate_raw(&m)),
            members: m,
            x,
        })
        .collect();

    let total = components.len() as f64;
    let min_size = (options.min_size_fraction * total / k as f64).ceil() as usize;
    let (merged, _) = merge_small_regions(&components, regions, min_size, |a, b| (&a.feature - &b.feature).norm_squared());
    SuperpixelLabeling::new(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageBuffer;
    use crate::units::{extract_features, FeatureOptions};

    #[test]
    fn affinity_small_cases() {
        let z = DMatrix::from_row_slice(2, 2, &[0., 1., -1., 0.]);
        assert_eq!(affinity(&z).unwrap().matrix(), &DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]));
        assert_eq!(affinity(&DMatrix::zeros(3, 3)).unwrap().matrix(), &DMatrix::zeros(3, 3));
        assert!(affinity(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn ncut_trivial_k() {
        let g = affinity(&DMatrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 1.0 })).unwrap();
        assert_eq!(ncut(&g, 1, 0).unwrap(), vec![0; 5]);
        assert_eq!(ncut(&g, 5, 0).unwrap(), vec![0, 1, 2, 3, 4]);
        assert!(ncut(&g, 6, 0).is_err());
        assert!(ncut(&g, 0, 0).is_err());
    }

    #[test]
    fn isolated_units_get_own_labels() {
        // units 0..3 fully connected, units 4 and 5 have no affinity
        let g = DMatrix::from_fn(6, 6, |i, j| if i != j && i < 4 && j < 4 { 1.0 } else { 0.0 });
        let labels = ncut(&AffinityGraph::from_matrix(g).unwrap(), 2, 0).unwrap();
        assert_ne!(labels[4], labels[5]);
        assert!(labels[..4].iter().all(|l| *l != labels[4] && *l != labels[5]));
    }

    fn solid_units(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> UnitMap {
        UnitMap::new(LabelGrid::from_fn(w, h, f).unwrap().densified()).unwrap()
    }

    #[test]
    fn connected_labeling_is_unchanged() {
        let img = ImageBuffer::from_fn(8, 8, |x, _| if x < 4 { [0.2; 3] } else { [0.8; 3] }).unwrap();
        let units = solid_units(8, 8, |x, y| (x / 4 + 2 * (y / 4)) as u32);
        let x = extract_features(&img, &units, FeatureOptions::default()).unwrap();
        let sp = merge_isolated(&[0, 1, 0, 1], &units, &x, MergeOptions::default()).unwrap();
        assert_eq!(sp.realized_k(), 2);
        assert_eq!(sp.grid(), &LabelGrid::from_fn(8, 8, |x, _| (x >= 4) as u32).unwrap());
    }

    #[test]
    fn single_pixel_is_absorbed_by_surrounding() {
        let img = ImageBuffer::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { [1.0; 3] } else { [0.0; 3] }).unwrap();
        let units = solid_units(5, 5, |x, y| (y * 5 + x) as u32);
        let x = extract_features(&img, &units, FeatureOptions::default()).unwrap();
        let labels: Vec<usize> = (0..25).map(|p| usize::from(p == 12)).collect();
        let sp = merge_isolated(&labels, &units, &x, MergeOptions::default()).unwrap();
        assert_eq!(sp.realized_k(), 1);
        assert!(sp.grid().labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let img = ImageBuffer::from_fn(4, 4, |_, _| [0.5; 3]).unwrap();
        let units = solid_units(4, 4, |x, _| (x / 2) as u32);
        let x = extract_features(&img, &units, FeatureOptions::default()).unwrap();
        assert!(merge_isolated(&[0], &units, &x, MergeOptions::default()).is_err());
    }
}
