//! C¹ piecewise-bicubic Hermite interpolation of a regular height grid.
//!
//! Node derivatives (`f_x`, `f_y`, `f_xy`) come from central differences,
//! one-sided at the border. Each cell is the tensor Hermite patch of its
//! four corners, so values and first derivatives agree across shared edges.

use crate::error::{Result, WobbleError};

use super::Extent;

#[derive(Debug, Clone, PartialEq)]
pub struct BicubicGrid {
    origin: [f64; 2],
    spacing: f64,
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    fxy: Vec<f64>,
}

#[inline]
fn basis(t: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let a = [2.0 * t3 - 3.0 * t2 + 1.0, -2.0 * t3 + 3.0 * t2];
    let b = [t3 - 2.0 * t2 + t, t3 - t2];
    let da = [6.0 * t2 - 6.0 * t, -6.0 * t2 + 6.0 * t];
    let db = [3.0 * t2 - 4.0 * t + 1.0, 3.0 * t2 - 2.0 * t];
    (a, b, da, db)
}

fn diff_x(v: &[f64], rows: usize, cols: usize, d: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            out[k] = if j == 0 {
                (v[k + 1] - v[k]) / d
            } else if j == cols - 1 {
                (v[k] - v[k - 1]) / d
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * d)
            };
        }
    }
    out
}

fn diff_y(v: &[f64], rows: usize, cols: usize, d: f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            out[k] = if i == 0 {
                (v[k + cols] - v[k]) / d
            } else if i == rows - 1 {
                (v[k] - v[k - cols]) / d
            } else {
                (v[k + cols] - v[k - cols]) / (2.0 * d)
            };
        }
    }
    out
}

impl BicubicGrid {
    /// `heights` is row-major: row `i` at `y = origin[1] + i·spacing`,
    /// column `j` at `x = origin[0] + j·spacing`.
    pub fn new(origin: [f64; 2], spacing: f64, rows: usize, cols: usize, heights: Vec<f64>) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(WobbleError::Validation(format!(
                "grid needs at least 2x2 nodes, got {rows}x{cols}"
            )));
        }
        if rows * cols != heights.len() {
            return Err(WobbleError::Validation(format!(
                "grid rows*cols = {} but {} heights given",
                rows * cols,
                heights.len()
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(WobbleError::Validation(format!("grid spacing must be positive, got {spacing}")));
        }
        if !origin.iter().chain(heights.iter()).all(|v| v.is_finite()) {
            return Err(WobbleError::Validation("grid contains non-finite values".into()));
        }
        let fx = diff_x(&heights, rows, cols, spacing);
        let fy = diff_y(&heights, rows, cols, spacing);
        let fxy = diff_y(&fx, rows, cols, spacing);
        Ok(BicubicGrid {
            origin,
            spacing,
            rows,
            cols,
            heights,
            fx,
            fy,
            fxy,
        })
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.heights[i * self.cols + j]
    }

    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin[0] + j as f64 * self.spacing,
            self.origin[1] + i as f64 * self.spacing,
        )
    }

    pub fn extent(&self) -> Extent {
        Extent {
            min_x: self.origin[0],
            max_x: self.origin[0] + (self.cols - 1) as f64 * self.spacing,
            min_y: self.origin[1],
            max_y: self.origin[1] + (self.rows - 1) as f64 * self.spacing,
        }
    }

    pub(crate) fn scaled(&self, k: f64) -> BicubicGrid {
        let s = |v: &[f64]| v.iter().map(|x| x * k).collect::<Vec<_>>();
        BicubicGrid {
            heights: s(&self.heights),
            fx: s(&self.fx),
            fy: s(&self.fy),
            fxy: s(&self.fxy),
            ..self.clone()
        }
    }

    #[inline]
    fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let gx = (x - self.origin[0]) / self.spacing;
        let gy = (y - self.origin[1]) / self.spacing;
        let j = (gx.floor().max(0.0) as usize).min(self.cols - 2);
        let i = (gy.floor().max(0.0) as usize).min(self.rows - 2);
        (i, j, gx - j as f64, gy - i as f64)
    }

    /// Value and gradient of the patch containing `(x, y)`.
    fn patch(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (i, j, u, v) = self.locate(x, y);
        let (au, bu, dau, dbu) = basis(u);
        let (av, bv, dav, dbv) = basis(v);
        let d = self.spacing;
        let (mut f, mut dfu, mut dfv) = (0.0, 0.0, 0.0);
        for b in 0..2 {
            for a in 0..2 {
                let k = (i + b) * self.cols + (j + a);
                let (h, hx, hy, hxy) = (self.heights[k], self.fx[k] * d, self.fy[k] * d, self.fxy[k] * d * d);
                f += h * au[a] * av[b] + hx * bu[a] * av[b] + hy * au[a] * bv[b] + hxy * bu[a] * bv[b];
                dfu += h * dau[a] * av[b] + hx * dbu[a] * av[b] + hy * dau[a] * bv[b] + hxy * dbu[a] * bv[b];
                dfv += h * au[a] * dav[b] + hx * bu[a] * dav[b] + hy * au[a] * dbv[b] + hxy * bu[a] * dbv[b];
            }
        }
        (f, dfu / d, dfv / d)
    }

    pub(crate) fn eval(&self, x: f64, y: f64) -> f64 {
        self.patch(x, y).0
    }

    pub(crate) fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (_, gx, gy) = self.patch(x, y);
        (gx, gy)
    }

    /// Gradient of a specific cell's patch, evaluated possibly on its
    /// boundary. Used to compare one-sided derivatives across cell edges.
    pub fn cell_gradient(&self, i: usize, j: usize, x: f64, y: f64) -> (f64, f64) {
        let d = self.spacing;
        let u = (x - self.origin[0]) / d - j as f64;
        let v = (y - self.origin[1]) / d - i as f64;
        let (au, bu, dau, dbu) = basis(u);
        let (av, bv, dav, dbv) = basis(v);
        let (mut dfu, mut dfv) = (0.0, 0.0);
        for b in 0..2 {
            for a in 0..2 {
                let k = (i + b) * self.cols + (j + a);
                let (h, hx, hy, hxy) = (self.heights[k], self.fx[k] * d, self.fy[k] * d, self.fxy[k] * d * d);
                dfu += h * dau[a] * av[b] + hx * dbu[a] * av[b] + hy * dau[a] * bv[b] + hxy * dbu[a] * bv[b];
                dfv += h * au[a] * dav[b] + hx * bu[a] * dav[b] + hy * au[a] * dbv[b] + hxy * bu[a] * dbv[b];
            }
        }
        (dfu / d, dfv / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> BicubicGrid {
        let (rows, cols) = (7, 9);
        let heights = (0..rows * cols)
            .map(|k| {
                let (i, j) = ((k / cols) as f64, (k % cols) as f64);
                0.1 * (0.7 * j).sin() * (0.4 * i).cos() + 0.01 * i * j
            })
            .collect();
        BicubicGrid::new([-1.0, -2.0], 0.5, rows, cols, heights).unwrap()
    }

    #[test]
    fn interpolates_nodes_exactly() {
        let g = sample_grid();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let (x, y) = g.node_position(i, j);
                assert!((g.eval(x, y) - g.node(i, j)).abs() < 1e-15, "node {i},{j}");
            }
        }
    }

    #[test]
    fn size_mismatch_is_validation_error() {
        let r = BicubicGrid::new([0.0, 0.0], 1.0, 3, 3, vec![0.0; 8]);
        assert!(matches!(r, Err(WobbleError::Validation(_))));
    }

    #[test]
    fn reproduces_bilinear_free_plane() {
        // a plane is reproduced exactly by the Hermite patches
        let (rows, cols) = (4, 5);
        let heights = (0..rows * cols)
            .map(|k| 0.3 * (k % cols) as f64 - 0.2 * (k / cols) as f64)
            .collect();
        let g = BicubicGrid::new([0.0, 0.0], 1.0, rows, cols, heights).unwrap();
        let (gx, gy) = g.gradient(1.37, 2.81);
        assert!((gx - 0.3).abs() < 1e-14 && (gy + 0.2).abs() < 1e-14);
        assert!((g.eval(1.37, 2.81) - (0.3 * 1.37 - 0.2 * 2.81)).abs() < 1e-14);
    }
}
