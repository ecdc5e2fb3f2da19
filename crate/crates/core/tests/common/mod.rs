//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use lcsseg::{build_weight_matrix, AdjacencyMatrix, FeatureMatrix, LabelGrid, SpatialWeights};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Random symmetric 0/1 matrix with zero diagonal.
pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                om[(i, j)] = 1.0;
                om[(j, i)] = 1.0;
            }
        }
    }
    om
}

pub fn weights_of(omega: DMatrix<f64>) -> SpatialWeights {
    build_weight_matrix(&AdjacencyMatrix::from_matrix(omega).unwrap())
}

pub fn fig3_omega() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[0., 1., 1., 0., 1., 0., 0., 1., 1., 0., 0., 1., 0., 1., 1., 0.])
}

/// Rows centred and scaled to unit population variance.
pub fn standardized(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    for mut row in x.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
        let sd = (row.norm_squared() / n).sqrt();
        if sd > 0.0 {
            row /= sd;
        }
    }
    x
}

pub fn features(x: DMatrix<f64>) -> FeatureMatrix {
    FeatureMatrix::from_matrix(x).unwrap()
}

pub fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves `A·U + U·B = C` through the `n²` linear system
/// `(I ⊗ A + Bᵀ ⊗ I) vec(U) = vec(C)` with column-major `vec`.
pub fn kronecker_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.nrows();
    let eye_m = DMatrix::<f64>::identity(m, m);
    let eye_n = DMatrix::<f64>::identity(n, n);
    let big = eye_m.kronecker(a) + b.transpose().kronecker(&eye_n);
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = big.lu().solve(&rhs).expect("Kronecker system is singular");
    DMatrix::from_column_slice(n, m, sol.as_slice())
}

/// `½‖X − XZ‖²_F + λ1‖Z‖₁ + λ2‖ZW‖₂,₁`, entry by entry.
pub fn naive_objective(x: &DMatrix<f64>, z: &DMatrix<f64>, w: &DMatrix<f64>, l1: f64, l2: f64) -> f64 {
    let (d, n) = x.shape();
    let mut fit = 0.0;
    for r in 0..d {
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += x[(r, i)] * z[(i, j)];
            }
            fit += (x[(r, j)] - s).powi(2);
        }
    }
    let mut sparse = 0.0;
    for i in 0..n {
        for j in 0..n {
            sparse += z[(i, j)].abs();
        }
    }
    0.5 * fit + l1 * sparse + l2 * naive_l21_of_product(z, w)
}

/// `Σ_j ‖(ZW)_{:,j}‖₂` with the product formed by explicit loops.
pub fn naive_l21_of_product(z: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let n = z.nrows();
    let mut total = 0.0;
    for j in 0..w.ncols() {
        let mut sq = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..z.ncols() {
                s += z[(i, k)] * w[(k, j)];
            }
            sq += s * s;
        }
        total += sq.sqrt();
    }
    total
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, labels: u32) -> LabelGrid {
    LabelGrid::new(w, h, (0..w * h).map(|_| rng.random_range(0..labels)).collect()).unwrap()
}

/// Pixels of each superpixel inside its best ground-truth segment, summed.
pub fn best_overlap_brute(sp: &LabelGrid, gt: &LabelGrid) -> usize {
    let sps: Vec<u32> = {
        let mut v: Vec<u32> = sp.labels().to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let gts: Vec<u32> = {
        let mut v: Vec<u32> = gt.labels().to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut total = 0;
    for &s in &sps {
        let mut best = 0;
        for &g in &gts {
            let overlap = (0..sp.len()).filter(|&p| sp.labels()[p] == s && gt.labels()[p] == g).count();
            best = best.max(overlap);
        }
        total += best;
    }
    total
}

pub fn asa_brute(sp: &LabelGrid, gt: &LabelGrid) -> f64 {
    best_overlap_brute(sp, gt) as f64 / sp.len() as f64
}

pub fn use_brute(sp: &LabelGrid, gt: &LabelGrid) -> f64 {
    (sp.len() - best_overlap_brute(sp, gt)) as f64 / sp.len() as f64
}

fn is_boundary(g: &LabelGrid, x: usize, y: usize) -> bool {
    let l = g.get(x, y);
    let (w, h) = (g.width() as i64, g.height() as i64);
    [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().any(|&(dx, dy)| {
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        nx >= 0 && ny >= 0 && nx < w && ny < h && g.get(nx as usize, ny as usize) != l
    })
}

/// Ground-truth boundary pixels with a superpixel boundary pixel in the
/// `(2t+1)²` window around them, over all ground-truth boundary pixels.
pub fn br_brute(sp: &LabelGrid, gt: &LabelGrid, t: usize) -> f64 {
    let (w, h) = (gt.width(), gt.height());
    let (mut total, mut hit) = (0usize, 0usize);
    for y in 0..h {
        for x in 0..w {
            if !is_boundary(gt, x, y) {
                continue;
            }
            total += 1;
            let found = (y.saturating_sub(t)..=(y + t).min(h - 1))
                .any(|yy| (x.saturating_sub(t)..=(x + t).min(w - 1)).any(|xx| is_boundary(sp, xx, yy)));
            if found {
                hit += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// True when the two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}
