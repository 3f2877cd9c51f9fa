//! Exact sine-basis projection of quadratic products.
//!
//! Every field entering the nonlinearity (`u`, `u_x`, `u_y`, `Tu`) is a
//! trigonometric polynomial of degree `<= M` in `pi y` with period 2, so their
//! products have degree `<= 2M`. Sampling on `L >= 4M + 1` points of the full
//! period recovers the product's cosine and sine coefficients without
//! aliasing; the sine-series projection on `(0, 1)` then follows from
//!
//! ```text
//! 2 int_0^1 sin(j pi y) sin(k pi y) dy = delta_jk
//! 2 int_0^1 cos(j pi y) sin(k pi y) dy = 2k (1 - (-1)^(j+k)) / (pi (k^2 - j^2)),  j != k
//! ```
//!
//! In x the usual 3/2 rule (`X >= 3N + 1`) keeps the retained modes exact.

use crate::field::SpectralField;
use crate::grid::{fft_friendly, Grid};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `2 int_0^1 cos(j pi y) sin(k pi y) dy` for `k >= 1`, `j >= 0`.
pub fn cos_sin_overlap(k: usize, j: usize) -> f64 {
    if (j + k) % 2 == 0 {
        return 0.0;
    }
    let (kf, jf) = (k as f64, j as f64);
    4.0 * kf / (PI * (kf * kf - jf * jf))
}

/// Sine coefficient `k` of `(1 - cos(m pi y)) / (m pi)` on `(0, 1)`.
pub fn antiderivative_overlap(k: usize, m: usize) -> f64 {
    (cos_sin_overlap(k, 0) - cos_sin_overlap(k, m)) / (m as f64 * PI)
}

/// Oversampled full-period grid plus the projection tables.
#[derive(Clone)]
pub struct ProductGrid {
    grid: Grid,
    xp: usize,
    lp: usize,
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
    /// `overlap[(k - 1) * (2M + 1) + j]`
    overlap: Vec<f64>,
    /// `t_overlap[(k - 1) * M + (m - 1)]`
    t_overlap: Vec<f64>,
    rows: Vec<Complex64>,
    xbuf: Vec<Complex64>,
}

impl std::fmt::Debug for ProductGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProductGrid")
            .field("xp", &self.xp)
            .field("lp", &self.lp)
            .finish()
    }
}

impl ProductGrid {
    pub fn new(grid: Grid) -> Self {
        let (nn, mm) = (grid.n_modes_x(), grid.n_modes_y());
        let xp = fft_friendly(3 * nn + 1);
        let lp = fft_friendly(4 * mm + 1);
        let mut planner = FftPlanner::new();
        let jw = 2 * mm + 1;
        let mut overlap = vec![0.0; mm * jw];
        for k in 1..=mm {
            for j in 0..jw {
                overlap[(k - 1) * jw + j] = cos_sin_overlap(k, j);
            }
        }
        let mut t_overlap = vec![0.0; mm * mm];
        for k in 1..=mm {
            for m in 1..=mm {
                t_overlap[(k - 1) * mm + (m - 1)] = antiderivative_overlap(k, m);
            }
        }
        Self {
            grid,
            xp,
            lp,
            x_fwd: planner.plan_fft_forward(xp),
            x_inv: planner.plan_fft_inverse(xp),
            y_fwd: planner.plan_fft_forward(lp),
            y_inv: planner.plan_fft_inverse(lp),
            overlap,
            t_overlap,
            rows: vec![ZERO; (2 * nn + 1) * lp],
            xbuf: vec![ZERO; xp],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of physical samples per field.
    pub fn len(&self) -> usize {
        self.xp * self.lp
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.xp, self.lp)
    }

    /// Writes physical samples (`out[ix * L + l]`) of the field whose row `n`
    /// has period-2 spectrum written by `fill(n, row)` in wrap-around order.
    pub fn synthesize(&mut self, fill: impl Fn(i64, &mut [Complex64]), out: &mut [f64]) {
        let nn = self.grid.n_modes_x();
        let (xp, lp) = (self.xp, self.lp);
        for r in 0..=2 * nn {
            let n = r as i64 - nn as i64;
            let row = &mut self.rows[r * lp..(r + 1) * lp];
            row.fill(ZERO);
            fill(n, row);
            self.y_inv.process(row);
        }
        for l in 0..lp {
            self.xbuf.fill(ZERO);
            for r in 0..=2 * nn {
                let n = r as i64 - nn as i64;
                self.xbuf[n.rem_euclid(xp as i64) as usize] = self.rows[r * lp + l];
            }
            self.x_inv.process(&mut self.xbuf);
            for ix in 0..xp {
                out[ix * lp + l] = self.xbuf[ix].re;
            }
        }
    }

    /// Exact sine-basis projection of the sampled product back onto the truncation.
    pub fn project(&mut self, values: &[f64]) -> SpectralField {
        let g = self.grid;
        let (nn, mm) = (g.n_modes_x(), g.n_modes_y());
        let (xp, lp) = (self.xp, self.lp);
        let norm = 1.0 / (xp * lp) as f64;
        for l in 0..lp {
            for ix in 0..xp {
                self.xbuf[ix] = Complex64::new(values[ix * lp + l], 0.0);
            }
            self.x_fwd.process(&mut self.xbuf);
            for r in 0..=2 * nn {
                let n = r as i64 - nn as i64;
                self.rows[r * lp + l] = self.xbuf[n.rem_euclid(xp as i64) as usize] * norm;
            }
        }
        let jw = 2 * mm + 1;
        let mut cos_part = vec![ZERO; jw];
        let mut out = SpectralField::zeros(g);
        let i = Complex64::new(0.0, 1.0);
        for r in 0..=2 * nn {
            let n = r as i64 - nn as i64;
            let row = &mut self.rows[r * lp..(r + 1) * lp];
            self.y_fwd.process(row);
            cos_part[0] = row[0];
            for j in 1..jw {
                cos_part[j] = row[j] + row[lp - j];
            }
            for k in 1..=mm {
                let mut s = i * (row[k] - row[lp - k]);
                let tab = &self.overlap[(k - 1) * jw..k * jw];
                // only j + k odd contributes
                let mut j = if k % 2 == 0 { 1 } else { 0 };
                while j < jw {
                    s += cos_part[j] * tab[j];
                    j += 2;
                }
                out.set(n, k, s);
            }
        }
        out
    }

    /// Exact sine-basis projection of `Tu`.
    pub fn project_t(&self, u: &SpectralField) -> SpectralField {
        let g = self.grid;
        let (nn, mm) = (g.n_modes_x() as i64, g.n_modes_y());
        let mut out = SpectralField::zeros(g);
        for n in -nn..=nn {
            if n == 0 {
                continue;
            }
            let i_n = Complex64::new(0.0, n as f64);
            for k in 1..=mm {
                let tab = &self.t_overlap[(k - 1) * mm..k * mm];
                let mut s = ZERO;
                for m in 1..=mm {
                    s += u.get(n, m) * tab[m - 1];
                }
                out.set(n, k, s * i_n);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on (0, 1) with many panels.
    fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
        let h = 1.0 / panels as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn overlap_matches_quadrature() {
        for k in 1..6 {
            for j in 0..9 {
                let q = 2.0
                    * simpson(
                        |y| (j as f64 * PI * y).cos() * (k as f64 * PI * y).sin(),
                        4000,
                    );
                assert!((q - cos_sin_overlap(k, j)).abs() < 1e-10, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn antiderivative_overlap_matches_quadrature() {
        for k in 1..6 {
            for m in 1..6 {
                let q = 2.0
                    * simpson(
                        |y| {
                            (1.0 - (m as f64 * PI * y).cos()) / (m as f64 * PI)
                                * (k as f64 * PI * y).sin()
                        },
                        4000,
                    );
                assert!((q - antiderivative_overlap(k, m)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projects_a_product_exactly() {
        // sin(x) sin(pi y) * cos(x) cos(2 pi y) = sin(2x)/2 * sin(pi y) cos(2 pi y)
        let g = Grid::new(3, 4, 1).unwrap();
        let mut pg = ProductGrid::new(g);
        let mut a = vec![0.0; pg.len()];
        let mut b = vec![0.0; pg.len()];
        let half_i = Complex64::new(0.0, -0.5);
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                // sin x = (e^{ix} - e^{-ix}) / 2i ; sin(pi y) likewise
                if n.abs() == 1 {
                    let cx = half_i * n as f64;
                    row[1] = cx * half_i;
                    row[lp - 1] = -cx * half_i;
                }
            },
            &mut a,
        );
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                if n.abs() == 1 {
                    row[2] = Complex64::new(0.25, 0.0);
                    row[lp - 2] = Complex64::new(0.25, 0.0);
                }
            },
            &mut b,
        );
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let s = pg.project(&prod);
        for k in 1..=4 {
            let q = 2.0
                * simpson(
                    |y| (PI * y).sin() * (2.0 * PI * y).cos() * (k as f64 * PI * y).sin(),
                    4000,
                );
            // coefficient of sin(2x) is 1/2, i.e. -i/4 at n = 2
            let expect = Complex64::new(0.0, -0.25) * q;
            assert!((s.get(2, k) - expect).norm() < 1e-12, "k={k}");
            assert!(s.get(1, k).norm() < 1e-14);
        }
    }
}
