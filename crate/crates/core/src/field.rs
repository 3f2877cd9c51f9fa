//! Coefficient-space and physical-space field containers.

use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Coefficients `u_hat(n, m)` of `sum u_hat(n, m) e^{inx} sin(m pi y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coef: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coef: vec![Complex64::new(0.0, 0.0); grid.n_coef()],
        }
    }

    pub fn from_coef(grid: Grid, coef: Vec<Complex64>) -> Result<Self> {
        if coef.len() != grid.n_coef() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.n_coef(),
                coef.len()
            )));
        }
        Ok(Self { grid, coef })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coef(&self) -> &[Complex64] {
        &self.coef
    }

    pub fn coef_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }

    pub fn into_coef(self) -> Vec<Complex64> {
        self.coef
    }

    #[inline]
    pub fn get(&self, n: i64, m: usize) -> Complex64 {
        self.coef[self.grid.idx(n, m)]
    }

    #[inline]
    pub fn set(&mut self, n: i64, m: usize, value: Complex64) {
        let i = self.grid.idx(n, m);
        self.coef[i] = value;
    }

    /// Sets `(n, m)` and its Hermitian partner `(-n, m)`.
    pub fn set_hermitian(&mut self, n: i64, m: usize, value: Complex64) {
        if n == 0 {
            self.set(0, m, Complex64::new(value.re, 0.0));
        } else {
            self.set(n, m, value);
            self.set(-n, m, value.conj());
        }
    }

    /// Adds `amp * sin(n x + phase) * sin(m pi y)` for `n >= 0`.
    pub fn add_sine_mode(&mut self, n: usize, m: usize, amp: f64, phase: f64) {
        // sin(nx + p) = (e^{i(nx+p)} - e^{-i(nx+p)}) / 2i
        let n = n as i64;
        if n == 0 {
            let c = self.get(0, m) + Complex64::new(amp * phase.sin(), 0.0);
            self.set(0, m, c);
        } else {
            let c = Complex64::from_polar(amp / 2.0, phase) * Complex64::new(0.0, -1.0);
            let v = self.get(n, m) + c;
            self.set_hermitian(n, m, v);
        }
    }

    /// Largest `|c(-n, m) - conj c(n, m)|`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let big = self.max_abs();
        if big == 0.0 {
            return 0.0;
        }
        let g = &self.grid;
        let mut worst = 0.0f64;
        for n in 0..=g.n_modes_x() as i64 {
            for m in 1..=g.n_modes_y() {
                let d = (self.get(-n, m) - self.get(n, m).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / big
    }

    pub fn check_hermitian(&self, limit: f64) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > limit {
            return Err(Error::NotHermitian { defect, limit });
        }
        Ok(())
    }

    /// Replaces the field by its Hermitian part so it represents a real function.
    pub fn enforce_hermitian(&mut self) {
        let g = self.grid;
        for m in 1..=g.n_modes_y() {
            let i0 = g.idx(0, m);
            self.coef[i0].im = 0.0;
            for n in 1..=g.n_modes_x() as i64 {
                let (ip, im) = (g.idx(n, m), g.idx(-n, m));
                let avg = (self.coef[ip] + self.coef[im].conj()) * 0.5;
                self.coef[ip] = avg;
                self.coef[im] = avg.conj();
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coef {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (c, o) in self.coef.iter_mut().zip(&other.coef) {
            *c += o * a;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `(f, g)_{L2}` computed from coefficients: `pi * sum f conj(g)`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        PI * self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (PI * self.coef.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coef
            .iter()
            .zip(&other.coef)
            .fold(0.0, |a, (x, y)| a.max((x - y).norm()))
    }

    /// Copies coefficients onto another truncation, zero padding or cutting.
    pub fn resample(&self, target: Grid) -> SpectralField {
        let mut out = SpectralField::zeros(target);
        let nn = self.grid.n_modes_x().min(target.n_modes_x()) as i64;
        let mm = self.grid.n_modes_y().min(target.n_modes_y());
        for n in -nn..=nn {
            for m in 1..=mm {
                out.set(n, m, self.get(n, m));
            }
        }
        out
    }

    /// Direct evaluation of the series at one point.
    pub fn eval_at(&self, x: f64, y: f64) -> f64 {
        self.eval_with_derivatives(x, y)[0]
    }

    /// `[u, u_x, u_y, u_xx, u_xy, u_yy]` at `(x, y)` by direct summation.
    pub fn eval_with_derivatives(&self, x: f64, y: f64) -> [f64; 6] {
        let g = &self.grid;
        let mm = g.n_modes_y();
        let mut sines = Vec::with_capacity(mm);
        let mut cosines = Vec::with_capacity(mm);
        for m in 1..=mm {
            let a = m as f64 * PI * y;
            sines.push(a.sin());
            cosines.push(a.cos());
        }
        let mut out = [0.0; 6];
        let nmax = g.n_modes_x() as i64;
        for n in -nmax..=nmax {
            let e = Complex64::from_polar(1.0, n as f64 * x);
            let nf = n as f64;
            let mut s = Complex64::new(0.0, 0.0);
            let mut sy = Complex64::new(0.0, 0.0);
            let mut syy = Complex64::new(0.0, 0.0);
            for m in 1..=mm {
                let c = self.get(n, m);
                let k = m as f64 * PI;
                s += c * sines[m - 1];
                sy += c * (k * cosines[m - 1]);
                syy -= c * (k * k * sines[m - 1]);
            }
            let i_n = Complex64::new(0.0, nf);
            out[0] += (e * s).re;
            out[1] += (e * s * i_n).re;
            out[2] += (e * sy).re;
            out[3] += (e * s * (-nf * nf)).re;
            out[4] += (e * sy * i_n).re;
            out[5] += (e * syy).re;
        }
        out
    }
}

/// Real values on the `X x Y` collocation nodes, stored x-major:
/// `values[j * Y + k]` is `u(x_j, y_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.nx() * grid.ny()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx() * grid.ny() {
            return Err(Error::GridMismatch(format!(
                "expected {} physical values, got {}",
                grid.nx() * grid.ny(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` on the collocation nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.nx() * grid.ny());
        for j in 0..grid.nx() {
            let x = grid.x_node(j);
            for k in 0..grid.ny() {
                values.push(f(x, grid.y_node(k)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.grid.ny() + k]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &PhysicalField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_mode_coefficients() {
        let g = Grid::new(3, 3, 1).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(1, 1, 1.0, 0.0);
        assert!((u.get(1, 1) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((u.get(-1, 1) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        let v = u.eval_at(0.3, 0.4);
        assert!((v - 0.3f64.sin() * (0.4 * PI).sin()).abs() < 1e-14);
        assert_eq!(u.hermitian_defect(), 0.0);
    }

    #[test]
    fn enforce_hermitian_fixes_defect() {
        let g = Grid::new(2, 2, 1).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set(1, 2, Complex64::new(1.0, 2.0));
        u.set(0, 1, Complex64::new(1.0, 0.5));
        assert!(u.hermitian_defect() > 0.1);
        assert!(u.check_hermitian(1e-12).is_err());
        u.enforce_hermitian();
        assert!(u.hermitian_defect() < 1e-16);
    }

    #[test]
    fn derivatives_match_closed_form() {
        let g = Grid::new(3, 3, 1).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(2, 3, 0.7, 0.4);
        let (x, y) = (1.1, 0.23);
        let d = u.eval_with_derivatives(x, y);
        let k = 3.0 * PI;
        let sx = (2.0 * x + 0.4).sin();
        let cx = (2.0 * x + 0.4).cos();
        let expect = [
            0.7 * sx * (k * y).sin(),
            0.7 * 2.0 * cx * (k * y).sin(),
            0.7 * sx * k * (k * y).cos(),
            -0.7 * 4.0 * sx * (k * y).sin(),
            0.7 * 2.0 * cx * k * (k * y).cos(),
            -0.7 * sx * k * k * (k * y).sin(),
        ];
        for (a, b) in d.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
