//! Cell-pair integrals of `|x - y|^-λ` for piecewise-constant fields.
//!
//! For cells of unit width the pair integral depends only on the integer
//! offset `d`: `κ(d) = ∫_{[-1,1]^N} |w + d|^-λ ∏ (1 - |w_k|) dw`. The energy
//! of two grid fields is then `h^(2N-λ) Σ_ij f_i g_j κ(i - j)`, exact for the
//! piecewise-constant interpolants.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::quadrature::gauss_legendre;

/// Offsets beyond this Euclidean length use the far-field expansion.
const FAR: f64 = 8.0;
const DUFFY_GL: usize = 16;

fn g1(z: f64, lam: f64) -> f64 {
    z.abs().powf(2.0 - lam) / ((1.0 - lam) * (2.0 - lam))
}

/// Far-field expansion of `κ` through fourth order in `1/|d|`.
fn kappa_far(d: &[f64], lam: f64) -> f64 {
    let n = d.len() as f64;
    let r2: f64 = d.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    let s = -lam;
    let k0 = r.powf(s);
    let lap = s * (s + n - 2.0) * k0 / r2;
    let bilap = s * (s + n - 2.0) * (s - 2.0) * (s + n - 4.0) * k0 / (r2 * r2);
    let d4: f64 = d.iter().map(|v| v.powi(4)).sum();
    let s4 = (3.0 * n * s * (s - 2.0) + 6.0 * s * (s - 2.0) * (s - 4.0)) * k0 / (r2 * r2)
        + s * (s - 2.0) * (s - 4.0) * (s - 6.0) * d4 * k0 / (r2 * r2 * r2 * r2);
    k0 + lap / 12.0 + (bilap / 12.0 - s4 / 60.0) / 24.0
}

/// `κ(d)` in one dimension.
pub fn kappa_1d(d: i64, lam: f64) -> f64 {
    let d = d.unsigned_abs() as f64;
    if d > 30.0 {
        return kappa_far(&[d], lam);
    }
    g1(d + 1.0, lam) - 2.0 * g1(d, lam) + g1(d - 1.0, lam)
}

/// `κ(d)` in two or three dimensions.
pub fn kappa_nd(d: &[i64], lam: f64) -> f64 {
    let dim = d.len();
    if dim == 1 {
        return kappa_1d(d[0], lam);
    }
    let df: Vec<f64> = d.iter().map(|&v| v as f64).collect();
    let r = df.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r > FAR {
        return kappa_far(&df, lam);
    }
    let linf = d.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    let q = match linf {
        0..=2 => 12,
        3..=4 => 8,
        _ => 6,
    };
    let mut total = 0.0;
    for sigma in 0..(1usize << dim) {
        let sg: Vec<f64> = (0..dim).map(|k| if sigma >> k & 1 == 1 { -1.0 } else { 1.0 }).collect();
        // the kernel vanishes at u* = -σ d
        let ustar: Vec<f64> = (0..dim).map(|k| -sg[k] * df[k]).collect();
        let vertex = ustar.iter().all(|&u| u == 0.0 || u == 1.0);
        total += if vertex {
            duffy_orthant(&ustar, lam)
        } else {
            tensor_orthant(&sg, &df, lam, q)
        };
    }
    total
}

/// `∫_{[0,1]^N} |σ∘u + d|^-λ ∏(1 - u_k) du` by a tensor rule.
fn tensor_orthant(sg: &[f64], d: &[f64], lam: f64, q: usize) -> f64 {
    let rule = gauss_legendre(q);
    let (x, w) = (&rule.0, &rule.1);
    let dim = d.len();
    let nodes: Vec<f64> = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
    let mut acc = 0.0;
    let count = q.pow(dim as u32);
    for idx in 0..count {
        let mut rem = idx;
        let mut wt = 1.0;
        let mut r2 = 0.0;
        for k in 0..dim {
            let j = rem % q;
            rem /= q;
            let u = nodes[j];
            wt *= weights[j] * (1.0 - u);
            let c = sg[k] * u + d[k];
            r2 += c * c;
        }
        acc += wt * r2.powf(-0.5 * lam);
    }
    acc
}

/// Orthant whose singular point is a vertex of the unit box: Duffy
/// pyramids, exact in the radial variable, Gauss–Legendre on the rest.
fn duffy_orthant(ustar: &[f64], lam: f64) -> f64 {
    let dim = ustar.len();
    // weight in v = |u - u*|: (1 - v_k) if u*_k = 0, v_k if u*_k = 1
    let (a, b): (Vec<f64>, Vec<f64>) =
        ustar.iter().map(|&u| if u == 0.0 { (1.0, -1.0) } else { (0.0, 1.0) }).unzip();
    let rule = gauss_legendre(DUFFY_GL);
    let nodes: Vec<f64> = rule.0.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = rule.1.iter().map(|t| 0.5 * t).collect();
    let inner = dim - 1;
    let count = DUFFY_GL.pow(inner as u32);
    let mut total = 0.0;
    for m in 0..dim {
        for idx in 0..count {
            let mut rem = idx;
            let mut wt = 1.0;
            let mut vhat = [1.0f64; 3];
            let mut norm2 = 1.0;
            for k in 0..dim {
                if k == m {
                    continue;
                }
                let j = rem % DUFFY_GL;
                rem /= DUFFY_GL;
                vhat[k] = nodes[j];
                wt *= weights[j];
                norm2 += nodes[j] * nodes[j];
            }
            // ∏ (a_k + b_k s v̂_k) as a polynomial in s
            let mut poly = [0.0f64; 4];
            poly[0] = 1.0;
            let mut deg = 0;
            for k in 0..dim {
                let (c0, c1) = (a[k], b[k] * vhat[k]);
                for j in (0..=deg + 1).rev() {
                    let lower = if j > 0 { poly[j - 1] } else { 0.0 };
                    poly[j] = poly[j] * c0 + lower * c1;
                }
                deg += 1;
            }
            let radial: f64 = (0..=deg)
                .map(|j| poly[j] / (dim as f64 - lam + j as f64))
                .sum();
            total += wt * norm2.powf(-0.5 * lam) * radial;
        }
    }
    total
}

/// `κ` over all non-negative offsets of a grid, row-major, with the
/// extents right-aligned (leading axes of length one).
#[derive(Debug)]
pub struct KernelTable {
    pub extent: [usize; 3],
    pub values: Vec<f64>,
}

type TableKey = (usize, u64, [usize; 3]);

/// Cached table for the given dimension, exponent and extents.
pub fn kernel_table(dim: usize, lam: f64, extent: [usize; 3]) -> Arc<KernelTable> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<KernelTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (dim, lam.to_bits(), extent);
    if let Some(t) = cache.lock().expect("kernel cache poisoned").get(&key) {
        return t.clone();
    }
    let table = Arc::new(build_table(dim, lam, extent));
    let mut guard = cache.lock().expect("kernel cache poisoned");
    if guard.len() > 64 {
        guard.clear();
    }
    guard.entry(key).or_insert(table).clone()
}

fn build_table(dim: usize, lam: f64, extent: [usize; 3]) -> KernelTable {
    let len = extent.iter().product::<usize>();
    let values = (0..len)
        .into_par_iter()
        .map(|flat| {
            let i0 = flat / (extent[1] * extent[2]);
            let i1 = (flat / extent[2]) % extent[1];
            let i2 = flat % extent[2];
            let d = [i0 as i64, i1 as i64, i2 as i64];
            kappa_nd(&d[3 - dim..], lam)
        })
        .collect();
    KernelTable { extent, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gl_integrate;

    #[test]
    fn unit_square_closed_form() {
        // ∬_{[0,1]^2} |x-y|^-1/2 = 2/((1-λ)(2-λ)) = 8/3
        assert!((kappa_1d(0, 0.5) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn far_expansion_joins_closed_form() {
        // 40-digit second differences at d = 30; the expansion's first omitted
        // term is 1e-11 to 3e-11 relative there
        let want = [
            (0.25, 0.427_299_373_374_857_36),
            (0.5, 0.182_586_868_708_837_89),
            (0.75, 0.078_021_061_507_338_037),
        ];
        for (lam, w) in want {
            assert!((kappa_1d(30, lam) - w).abs() < 1e-12 * w, "{lam}");
            assert!((kappa_far(&[30.0], lam) - w).abs() < 5e-11 * w, "{lam}");
        }
    }

    fn brute_2d(d: [f64; 2], lam: f64) -> f64 {
        // split [-1,1]^2 into quadrants, with the singular point on panel edges
        let br = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += gl_integrate(br[i], br[i + 1], 40, |x| {
                    gl_integrate(br[j], br[j + 1], 40, |y| {
                        let r2 = (x + d[0]).powi(2) + (y + d[1]).powi(2);
                        r2.powf(-0.5 * lam) * (1.0 - x.abs()) * (1.0 - y.abs())
                    })
                });
            }
        }
        acc
    }

    #[test]
    fn two_dim_against_brute_force() {
        // non-singular offsets: plain tensor rules converge fast
        for d in [[2i64, 1], [3, 0], [5, 4]] {
            let want = brute_2d([d[0] as f64, d[1] as f64], 0.7);
            let got = kappa_nd(&d, 0.7);
            assert!((got - want).abs() < 1e-9 * want, "{d:?}: {got} {want}");
        }
    }

    #[test]
    fn two_dim_singular_cells() {
        // an independent radial-polar evaluation for d = 0:
        // κ(0) = 4 ∫_{[0,1]^2} |u|^-λ (1-u)(1-v); in polar coordinates per triangle
        let lam: f64 = 0.5;
        let tri = gl_integrate(0.0, std::f64::consts::FRAC_PI_4, 60, |th| {
            let rmax = 1.0 / th.cos();
            // ∫_0^R r^a (1 - r(c+s) + r^2 cs) dr with a = 1-λ, exact
            let (c, s, a) = (th.cos(), th.sin(), 1.0 - lam);
            rmax.powf(a + 1.0) / (a + 1.0) - (c + s) * rmax.powf(a + 2.0) / (a + 2.0)
                + c * s * rmax.powf(a + 3.0) / (a + 3.0)
        });
        let want = 4.0 * 2.0 * tri;
        let got = kappa_nd(&[0, 0], lam);
        assert!((got - want).abs() < 1e-10 * want, "{got} {want}");
    }

    #[test]
    fn three_dim_far_field_continuity() {
        let lam = 1.0;
        let near = kappa_nd(&[6, 5, 2], lam);
        let far = kappa_far(&[6.0, 5.0, 2.0], lam);
        assert!((near - far).abs() < 1e-7 * near);
    }

    #[test]
    fn kernel_integrates_total_mass() {
        // Σ_d κ(d) over a large window approximates ∫|x|^-λ averaged against a tent
        // of unit mass; check the 1D identity Σ_d κ(d) (d ≤ M) against the G-telescoping sum
        let lam = 0.5;
        let m = 50i64;
        let sum: f64 = (-m..=m).map(|d| kappa_1d(d, lam)).sum();
        let tele = 2.0 * (g1(m as f64 + 1.0, lam) - g1(m as f64, lam));
        assert!((sum - tele).abs() < 1e-9 * sum);
    }
}
