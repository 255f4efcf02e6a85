//! Deterministic evaluation of `Σ_ij f_i g_j κ(i - j)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::kernel::{kernel_table, KernelTable};
use crate::fields::Grid;

/// Pair counts above this go through the FFT convolution.
pub const DIRECT_LIMIT: usize = 1 << 24;

/// Fixed-shape pairwise reduction; independent of the thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// `Σ_ij f_i g_j κ(i - j)` (no `h` factors).
pub fn kernel_pair_sum(grid: &Grid, lam: f64, f: &[f64], g: &[f64]) -> f64 {
    let nf = f.iter().filter(|v| **v != 0.0).count();
    let ng = g.iter().filter(|v| **v != 0.0).count();
    if nf == 0 || ng == 0 {
        return 0.0;
    }
    let table = kernel_table(grid.dim(), lam, shape(grid));
    if nf.saturating_mul(ng) <= DIRECT_LIMIT {
        direct(grid, &table, f, g)
    } else {
        fft_sum(grid, lam, &table, f, g)
    }
}

/// Potential `Σ_j κ(i - j) g_j` at every cell.
pub fn kernel_potential(grid: &Grid, lam: f64, g: &[f64]) -> Vec<f64> {
    let table = kernel_table(grid.dim(), lam, shape(grid));
    let ng = g.iter().filter(|v| **v != 0.0).count();
    if ng.saturating_mul(grid.len()) <= DIRECT_LIMIT {
        (0..grid.len()).into_par_iter().map(|i| row(grid, &table, i, g)).collect()
    } else {
        convolve(grid, lam, &table, g)
    }
}

/// Extents padded with leading ones; the flat layout is unchanged.
pub(crate) fn shape(grid: &Grid) -> [usize; 3] {
    let dim = grid.dim();
    let e = grid.extent();
    let mut s = [1usize; 3];
    s[3 - dim..].copy_from_slice(e);
    s
}

fn row(grid: &Grid, table: &KernelTable, i: usize, g: &[f64]) -> f64 {
    let e = shape(grid);
    let ii = [i / (e[1] * e[2]), (i / e[2]) % e[1], i % e[2]];
    let mut acc = 0.0;
    for j0 in 0..e[0] {
        let d0 = ii[0].abs_diff(j0);
        for j1 in 0..e[1] {
            let d1 = ii[1].abs_diff(j1);
            let trow = &table.values[(d0 * e[1] + d1) * e[2]..][..e[2]];
            let grow = &g[(j0 * e[1] + j1) * e[2]..][..e[2]];
            let c = ii[2];
            // split at the diagonal so both halves index the table linearly
            for j2 in 0..c {
                acc += grow[j2] * trow[c - j2];
            }
            for j2 in c..e[2] {
                acc += grow[j2] * trow[j2 - c];
            }
        }
    }
    acc
}

fn direct(grid: &Grid, table: &KernelTable, f: &[f64], g: &[f64]) -> f64 {
    let partial: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| if f[i] == 0.0 { 0.0 } else { f[i] * row(grid, table, i, g) })
        .collect();
    pairwise_sum(&partial)
}

fn padded_dims(grid: &Grid) -> [usize; 3] {
    let e = shape(grid);
    let mut p = [1usize; 3];
    for k in 0..3 {
        p[k] = if e[k] > 1 { 2 * e[k] } else { 1 };
    }
    p
}

type SpectrumKey = (u64, [usize; 3], usize);

fn kernel_spectrum(grid: &Grid, lam: f64, table: &KernelTable) -> Arc<Vec<Complex64>> {
    static CACHE: OnceLock<Mutex<HashMap<SpectrumKey, Arc<Vec<Complex64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (lam.to_bits(), shape(grid), grid.dim());
    if let Some(s) = cache.lock().expect("spectrum cache poisoned").get(&key) {
        return s.clone();
    }
    let e = shape(grid);
    let p = padded_dims(grid);
    let mut buf = vec![Complex64::new(0.0, 0.0); p[0] * p[1] * p[2]];
    let fold = |m: usize, n: usize, pk: usize| -> Option<usize> {
        let d = if m <= pk / 2 { m } else { pk - m };
        (d < n).then_some(d)
    };
    for m0 in 0..p[0] {
        let Some(d0) = fold(m0, e[0], p[0]) else { continue };
        for m1 in 0..p[1] {
            let Some(d1) = fold(m1, e[1], p[1]) else { continue };
            for m2 in 0..p[2] {
                let Some(d2) = fold(m2, e[2], p[2]) else { continue };
                let v = table.values[(d0 * e[1] + d1) * e[2] + d2];
                buf[(m0 * p[1] + m1) * p[2] + m2] = Complex64::new(v, 0.0);
            }
        }
    }
    fft_nd(&mut buf, p, false);
    let spec = Arc::new(buf);
    let mut guard = cache.lock().expect("spectrum cache poisoned");
    if guard.len() > 6 {
        guard.clear();
    }
    guard.entry(key).or_insert(spec).clone()
}

/// Linear convolution of `g` with the kernel table, restricted to the grid.
fn convolve(grid: &Grid, lam: f64, table: &KernelTable, g: &[f64]) -> Vec<f64> {
    let e = shape(grid);
    let p = padded_dims(grid);
    let total = p[0] * p[1] * p[2];
    let spec = kernel_spectrum(grid, lam, table);
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for i0 in 0..e[0] {
        for i1 in 0..e[1] {
            for i2 in 0..e[2] {
                buf[(i0 * p[1] + i1) * p[2] + i2] = Complex64::new(g[(i0 * e[1] + i1) * e[2] + i2], 0.0);
            }
        }
    }
    fft_nd(&mut buf, p, false);
    for (b, s) in buf.iter_mut().zip(spec.iter()) {
        *b *= s;
    }
    fft_nd(&mut buf, p, true);
    let scale = 1.0 / total as f64;
    let mut out = vec![0.0; grid.len()];
    for i0 in 0..e[0] {
        for i1 in 0..e[1] {
            for i2 in 0..e[2] {
                out[(i0 * e[1] + i1) * e[2] + i2] = buf[(i0 * p[1] + i1) * p[2] + i2].re * scale;
            }
        }
    }
    out
}

fn fft_sum(grid: &Grid, lam: f64, table: &KernelTable, f: &[f64], g: &[f64]) -> f64 {
    let conv = convolve(grid, lam, table, g);
    let prod: Vec<f64> = f.iter().zip(&conv).map(|(a, b)| a * b).collect();
    pairwise_sum(&prod)
}

/// In-place multidimensional FFT, one axis at a time, sequential.
pub fn fft_nd(buf: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let strides = [dims[1] * dims[2], dims[2], 1];
    for axis in 0..3 {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let stride = strides[axis];
        let others: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
        for a in 0..dims[others[0]] {
            for b in 0..dims[others[1]] {
                let base = a * strides[others[0]] + b * strides[others[1]];
                for k in 0..n {
                    line[k] = buf[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    buf[base + k * stride] = line[k];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn field(n: usize, seed: u64) -> Vec<f64> {
        (0..n).map(|i| (((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0) - 1.0).collect()
    }

    #[test]
    fn fft_and_direct_agree() {
        for (dim, n) in [(1usize, 300usize), (2, 20), (3, 8)] {
            let grid = Grid::new(Point::origin(dim), 0.1, &vec![n; dim]).unwrap();
            let f = field(grid.len(), 3);
            let g = field(grid.len(), 11);
            let table = kernel_table(dim, 0.6, shape(&grid));
            let a = direct(&grid, &table, &f, &g);
            let b = fft_sum(&grid, 0.6, &table, &f, &g);
            let scale: f64 = direct(
                &grid,
                &table,
                &f.iter().map(|v| v.abs()).collect::<Vec<_>>(),
                &g.iter().map(|v| v.abs()).collect::<Vec<_>>(),
            );
            assert!((a - b).abs() < 1e-12 * scale, "dim {dim}: {a} {b}");
        }
    }

    #[test]
    fn symmetric_in_arguments() {
        let grid = Grid::new(Point::origin(2), 0.1, &[12, 9]).unwrap();
        let f = field(grid.len(), 5);
        let g = field(grid.len(), 8);
        let a = kernel_pair_sum(&grid, 1.2, &f, &g);
        let b = kernel_pair_sum(&grid, 1.2, &g, &f);
        assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
    }

    #[test]
    fn potential_matches_pair_sum() {
        let grid = Grid::new(Point::origin(1), 0.5, &[40]).unwrap();
        let f = field(40, 1);
        let g = field(40, 2);
        let pot = kernel_potential(&grid, 0.5, &g);
        let a: f64 = f.iter().zip(&pot).map(|(x, y)| x * y).sum();
        let b = kernel_pair_sum(&grid, 0.5, &f, &g);
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
    }
}
