//! Truncation and collocation geometry for the channel `T x (0, 1)`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly(n: usize) -> usize {
    let mut k = n.max(1);
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 1;
    }
}

/// Spectral truncation (`-N..=N` Fourier modes in x, `1..=M` sine modes in y)
/// together with the physical collocation grid used for transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n_modes_x: usize,
    n_modes_y: usize,
    oversample: usize,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(n_modes_x: usize, n_modes_y: usize, oversample: usize) -> Result<Self> {
        if n_modes_x == 0 || n_modes_y == 0 {
            return Err(Error::InvalidInput(
                "grid needs n_modes_x >= 1 and n_modes_y >= 1".into(),
            ));
        }
        if oversample == 0 {
            return Err(Error::InvalidInput("grid oversample must be >= 1".into()));
        }
        let width = 2 * n_modes_x + 1;
        // 3/2-rule capacity, rounded up
        let dealias = (3 * width).div_ceil(2);
        let nx = fft_friendly((2 * oversample * width).max(dealias));
        let ny = oversample * (n_modes_y + 1);
        Ok(Self {
            n_modes_x,
            n_modes_y,
            oversample,
            nx,
            ny,
        })
    }

    /// Same truncation, different physical refinement.
    pub fn with_oversample(&self, oversample: usize) -> Result<Self> {
        Self::new(self.n_modes_x, self.n_modes_y, oversample)
    }

    /// N: Fourier modes run over `-N..=N`.
    pub fn n_modes_x(&self) -> usize {
        self.n_modes_x
    }

    /// M: sine modes run over `1..=M`.
    pub fn n_modes_y(&self) -> usize {
        self.n_modes_y
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Number of x collocation nodes (X).
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of interior y collocation nodes (Y).
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of stored coefficients, `(2N + 1) * M`.
    pub fn n_coef(&self) -> usize {
        (2 * self.n_modes_x + 1) * self.n_modes_y
    }

    /// Row-major coefficient index for `(n, m)`: n ascending from `-N`, then m.
    #[inline]
    pub fn idx(&self, n: i64, m: usize) -> usize {
        debug_assert!(n.unsigned_abs() as usize <= self.n_modes_x);
        debug_assert!((1..=self.n_modes_y).contains(&m));
        (n + self.n_modes_x as i64) as usize * self.n_modes_y + (m - 1)
    }

    /// Inverse of [`Grid::idx`].
    #[inline]
    pub fn mode_of(&self, i: usize) -> (i64, usize) {
        let row = i / self.n_modes_y;
        (row as i64 - self.n_modes_x as i64, i % self.n_modes_y + 1)
    }

    /// Iterator over all `(n, m)` pairs in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        (0..self.n_coef()).map(move |i| self.mode_of(i))
    }

    pub fn x_node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.nx as f64
    }

    /// Interior node `y_k = k / (Y + 1)` for `k = 1..=Y`; `k` here is zero based.
    pub fn y_node(&self, k: usize) -> f64 {
        (k + 1) as f64 / (self.ny + 1) as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / (self.ny + 1) as f64
    }
}
