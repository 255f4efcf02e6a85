//! Fixtures shared by the criterion benches.

use confpos::{make_extremizer, ExtremizerSpec, Field, Grid, KernelParams, Point};

/// The one-dimensional extremizer on `[-40, 40]` with `n` cells.
pub fn extremizer_1d(n: usize) -> (Field, KernelParams) {
    let kp = KernelParams::new(1, 0.5).expect("valid kernel");
    let spec = ExtremizerSpec::optimizer(1.0, 1.0, Point::origin(1), &kp).expect("valid spec");
    let grid = Grid::cube(1, -40.0, 40.0, n).expect("valid grid");
    (make_extremizer(spec, &kp, grid).expect("extremizer"), kp)
}

/// A Gaussian on the cube `[-4, 4]^dim` with `n` cells per axis.
pub fn gaussian(dim: usize, n: usize) -> Field {
    let grid = Grid::cube(dim, -4.0, 4.0, n).expect("valid grid");
    Field::from_fn(grid, |x| (-x.norm_sq()).exp())
}

/// The indicator of `[-1, 1]` on `[-40, 40]`.
pub fn indicator_1d(n: usize) -> Field {
    let grid = Grid::cube(1, -40.0, 40.0, n).expect("valid grid");
    Field::from_fn(grid, |x| if x.coords()[0].abs() < 1.0 { 1.0 } else { 0.0 })
}
