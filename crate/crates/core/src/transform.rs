//! Mixed Fourier (x) by type-I sine (y) transform pair on the collocation grid.
//!
//! The y direction uses the DST-I on the interior nodes `k / (Y + 1)`,
//! evaluated through a complex FFT of the odd extension of length `2(Y + 1)`.

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Relative Hermitian defect above which a field is rejected as non-real.
pub const HERMITIAN_LIMIT: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    Odd,
    Even,
}

/// Precomputed FFT plans for one [`Grid`].
#[derive(Clone)]
pub struct SpectralTransform {
    grid: Grid,
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let ly = 2 * (grid.ny() + 1);
        Self {
            grid,
            x_fwd: planner.plan_fft_forward(grid.nx()),
            x_inv: planner.plan_fft_inverse(grid.nx()),
            y_fwd: planner.plan_fft_forward(ly),
            y_inv: planner.plan_fft_inverse(ly),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Spectral to physical; rejects fields that do not represent a real function.
    pub fn inverse(&self, s: &SpectralField) -> Result<PhysicalField> {
        self.check_grid(s.grid())?;
        s.check_hermitian(HERMITIAN_LIMIT)?;
        Ok(self.inverse_unchecked(s))
    }

    pub(crate) fn inverse_unchecked(&self, s: &SpectralField) -> PhysicalField {
        let rows = self.y_synthesis(|n, m| s.get(n, m), Parity::Odd, |_| ZERO);
        self.x_synthesis(&rows)
    }

    /// Physical field of `sum_m a(n, m) cos(m pi y) + b(n)` per Fourier row.
    pub(crate) fn cosine_synthesis(
        &self,
        a: impl Fn(i64, usize) -> Complex64,
        constant: impl Fn(i64) -> Complex64,
    ) -> PhysicalField {
        let rows = self.y_synthesis(a, Parity::Even, constant);
        self.x_synthesis(&rows)
    }

    /// Physical to spectral; exact for mode sums with `|n| <= N`, `m <= M`.
    pub fn forward(&self, p: &PhysicalField) -> Result<SpectralField> {
        self.check_grid(p.grid())?;
        let g = self.grid;
        let (nx, ny, nn, mm) = (g.nx(), g.ny(), g.n_modes_x(), g.n_modes_y());
        let width = 2 * nn + 1;
        // G(n, k) for |n| <= N, stored row per n
        let mut rows = vec![ZERO; width * ny];
        let mut buf = vec![ZERO; nx];
        let inv_nx = 1.0 / nx as f64;
        for k in 0..ny {
            for (j, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(p.at(j, k), 0.0);
            }
            self.x_fwd.process(&mut buf);
            for r in 0..width {
                let n = r as i64 - nn as i64;
                rows[r * ny + k] = buf[n.rem_euclid(nx as i64) as usize] * inv_nx;
            }
        }
        let ly = 2 * (ny + 1);
        let mut ybuf = vec![ZERO; ly];
        let mut out = SpectralField::zeros(g);
        let scale = Complex64::new(0.0, 1.0 / (ny + 1) as f64);
        for r in 0..width {
            ybuf.fill(ZERO);
            for k in 0..ny {
                let v = rows[r * ny + k];
                ybuf[k + 1] = v;
                ybuf[ly - k - 1] = -v;
            }
            self.y_fwd.process(&mut ybuf);
            let n = r as i64 - nn as i64;
            for m in 1..=mm {
                out.set(n, m, ybuf[m] * scale);
            }
        }
        Ok(out)
    }

    fn check_grid(&self, g: &Grid) -> Result<()> {
        if *g != self.grid {
            return Err(Error::GridMismatch(format!(
                "transform built for {:?}, field on {:?}",
                self.grid, g
            )));
        }
        Ok(())
    }

    /// Per Fourier row, values `g_n(y_k)` for the interior nodes.
    fn y_synthesis(
        &self,
        coef: impl Fn(i64, usize) -> Complex64,
        parity: Parity,
        constant: impl Fn(i64) -> Complex64,
    ) -> Vec<Complex64> {
        let g = self.grid;
        let (ny, nn, mm) = (g.ny(), g.n_modes_x(), g.n_modes_y());
        let width = 2 * nn + 1;
        let ly = 2 * (ny + 1);
        let mut rows = vec![ZERO; width * ny];
        let mut ybuf = vec![ZERO; ly];
        // odd extension sums to 2i * sine series, even extension to 2 * cosine series
        let norm = match parity {
            Parity::Odd => Complex64::new(0.0, -0.5),
            Parity::Even => Complex64::new(0.5, 0.0),
        };
        for r in 0..width {
            let n = r as i64 - nn as i64;
            ybuf.fill(ZERO);
            for m in 1..=mm {
                let c = coef(n, m);
                ybuf[m] = c;
                ybuf[ly - m] = match parity {
                    Parity::Odd => -c,
                    Parity::Even => c,
                };
            }
            self.y_inv.process(&mut ybuf);
            let c0 = constant(n);
            for k in 0..ny {
                rows[r * ny + k] = ybuf[k + 1] * norm + c0;
            }
        }
        rows
    }

    fn x_synthesis(&self, rows: &[Complex64]) -> PhysicalField {
        let g = self.grid;
        let (nx, ny, nn) = (g.nx(), g.ny(), g.n_modes_x());
        let width = 2 * nn + 1;
        let mut values = vec![0.0; nx * ny];
        let mut buf = vec![ZERO; nx];
        for k in 0..ny {
            buf.fill(ZERO);
            for r in 0..width {
                let n = r as i64 - nn as i64;
                buf[n.rem_euclid(nx as i64) as usize] = rows[r * ny + k];
            }
            self.x_inv.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                values[j * ny + k] = b.re;
            }
        }
        PhysicalField::from_values(g, values).expect("shape matches grid")
    }
}

/// Evaluates `s` on its collocation grid.
pub fn inverse_transform(s: &SpectralField) -> Result<PhysicalField> {
    SpectralTransform::new(*s.grid()).inverse(s)
}

/// Sine-Fourier coefficients of a collocation-grid field.
pub fn forward_transform(p: &PhysicalField) -> Result<SpectralField> {
    SpectralTransform::new(*p.grid()).forward(p)
}

/// Zeroes every coefficient with `|n| > n_cut` or `m > m_cut`.
pub fn project_modes(s: &SpectralField, n_cut: usize, m_cut: usize) -> Result<SpectralField> {
    let g = s.grid();
    if n_cut > g.n_modes_x() || m_cut > g.n_modes_y() {
        return Err(Error::InvalidInput(format!(
            "cut ({n_cut}, {m_cut}) exceeds truncation ({}, {})",
            g.n_modes_x(),
            g.n_modes_y()
        )));
    }
    let mut out = s.clone();
    for (c, (n, m)) in out.coef_mut().iter_mut().zip(g.modes()) {
        if n.unsigned_abs() as usize > n_cut || m > m_cut {
            *c = ZERO;
        }
    }
    Ok(out)
}
