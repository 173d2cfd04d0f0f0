//! Orthonormal DCT-II and its inverse, separable, for square blocks.

use std::sync::LazyLock;

pub const BLOCK: usize = 8;

/// Orthonormal DCT-II basis: `basis[u][x] = c(u) * cos((2x + 1) u pi / 2n)`.
#[derive(Debug, Clone)]
pub struct DctBasis {
    n: usize,
    basis: Vec<f64>,
}

impl DctBasis {
    pub fn new(n: usize) -> Self {
        let mut basis = vec![0.0; n * n];
        for u in 0..n {
            let scale = if u == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for x in 0..n {
                basis[u * n + x] =
                    scale * (((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI) / (2 * n) as f64).cos();
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, u: usize, x: usize) -> f64 {
        self.basis[u * self.n + x]
    }

    /// 2-D forward transform of a row-major `n * n` block.
    pub fn forward(&self, block: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        // rows: tmp[y][u] = sum_x block[y][x] * b[u][x]
        for y in 0..n {
            for u in 0..n {
                tmp[y * n + u] = (0..n).map(|x| block[y * n + x] * self.at(u, x)).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for v in 0..n {
            for u in 0..n {
                out[v * n + u] = (0..n).map(|y| tmp[y * n + u] * self.at(v, y)).sum();
            }
        }
        out
    }

    /// 2-D inverse of [`forward`](Self::forward).
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut tmp = vec![0.0; n * n];
        for y in 0..n {
            for u in 0..n {
                tmp[y * n + u] = (0..n).map(|v| coeffs[v * n + u] * self.at(v, y)).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for y in 0..n {
            for x in 0..n {
                out[y * n + x] = (0..n).map(|u| tmp[y * n + u] * self.at(u, x)).sum();
            }
        }
        out
    }

    /// A single coefficient (row frequency `v`, column frequency `u`) of a
    /// row-major block.
    pub fn coefficient(&self, block: &[f64], v: usize, u: usize) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for y in 0..n {
            let by = self.at(v, y);
            let row = &block[y * n..(y + 1) * n];
            let mut r = 0.0;
            for (x, &p) in row.iter().enumerate() {
                r += p * self.at(u, x);
            }
            acc += by * r;
        }
        acc
    }
}

/// Shared 8x8 basis.
pub fn block8() -> &'static DctBasis {
    static BASIS: LazyLock<DctBasis> = LazyLock::new(|| DctBasis::new(BLOCK));
    &BASIS
}
