//! Spatial operators of the reduced channel model
//!
//! ```text
//! u_t + u u_x - Tu u_y = mu Lap u + alpha u - beta Tu + F,   Tu = int_0^y u_x dxi
//! ```
//!
//! Sign convention: [`nonlinear_term`] returns the right-hand-side
//! contribution `-u u_x + Tu u_y`.

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::galerkin::ProductGrid;
use crate::grid::Grid;
use crate::mms::ManufacturedCase;
use crate::transform::{SpectralTransform, HERMITIAN_LIMIT};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// External heat-source term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    None,
    /// Forcing that makes a single decaying mode an exact solution.
    Manufactured(ManufacturedCase),
}

/// Constants of the model equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub forcing: Forcing,
    /// Switch for verification runs; the model always has it on.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

fn default_true() -> bool {
    true
}

impl ModelParams {
    pub fn new(mu: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            mu,
            alpha,
            beta,
            forcing: Forcing::None,
            nonlinear: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu > 0 violated (mu = {})", self.mu)));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidInput("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    /// The setting the decay estimates are stated for: `alpha <= 0`, no forcing.
    pub fn is_theorem_regime(&self) -> bool {
        self.alpha <= 0.0 && self.forcing == Forcing::None && self.nonlinear
    }

    /// Diagonal symbol of `mu Lap + alpha` on mode `(n, m)`.
    #[inline]
    pub fn linear_symbol(&self, n: i64, m: usize) -> f64 {
        self.alpha - self.mu * laplacian_symbol(n, m).abs()
    }
}

/// `-(n^2 + m^2 pi^2)`
#[inline]
pub fn laplacian_symbol(n: i64, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64 * PI);
    -(nf * nf + mf * mf)
}

/// Scratch state for operator evaluation on one grid. Not shareable between
/// simultaneous evaluations.
#[derive(Debug, Clone)]
pub struct OperatorWorkspace {
    grid: Grid,
    transform: SpectralTransform,
    product: ProductGrid,
    u: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
    tu: Vec<f64>,
    prod: Vec<f64>,
    forcing_cache: Option<ForcingCache>,
}

#[derive(Debug, Clone)]
struct ForcingCache {
    key: (ManufacturedCase, [u64; 3]),
    /// `(decay rate, projected spatial part)`
    parts: Vec<(f64, SpectralField)>,
}

impl OperatorWorkspace {
    pub fn new(grid: Grid) -> Self {
        let product = ProductGrid::new(grid);
        let len = product.len();
        Self {
            grid,
            transform: SpectralTransform::new(grid),
            product,
            u: vec![0.0; len],
            ux: vec![0.0; len],
            uy: vec![0.0; len],
            tu: vec![0.0; len],
            prod: vec![0.0; len],
            forcing_cache: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn transform(&self) -> &SpectralTransform {
        &self.transform
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "workspace built for {:?}, field on {:?}",
                self.grid,
                u.grid()
            )));
        }
        u.check_hermitian(HERMITIAN_LIMIT)
    }

    /// Tu on the collocation grid.
    pub fn apply_t(&self, u: &SpectralField) -> Result<PhysicalField> {
        self.check(u)?;
        Ok(self.apply_t_unchecked(u))
    }

    fn apply_t_unchecked(&self, u: &SpectralField) -> PhysicalField {
        // mode (n, m) contributes i n u_hat (1 - cos(m pi y)) / (m pi) e^{inx}
        let mm = self.grid.n_modes_y();
        self.transform.cosine_synthesis(
            |n, m| -u.get(n, m) * Complex64::new(0.0, n as f64 / (m as f64 * PI)),
            |n| {
                let s: Complex64 = (1..=mm).map(|m| u.get(n, m) / (m as f64 * PI)).sum();
                s * Complex64::new(0.0, n as f64)
            },
        )
    }

    /// Sine-basis projection of Tu (exact Galerkin projection on (0, 1)).
    pub fn spectral_t(&self, u: &SpectralField) -> SpectralField {
        self.product.project_t(u)
    }

    /// `-u u_x + Tu u_y`, dealiased and projected onto the truncation.
    pub fn nonlinear_term(&mut self, u: &SpectralField) -> Result<SpectralField> {
        self.check(u)?;
        Ok(self.nonlinear_unchecked(u))
    }

    pub(crate) fn nonlinear_unchecked(&mut self, u: &SpectralField) -> SpectralField {
        let mm = self.grid.n_modes_y();
        let half_i = Complex64::new(0.0, 0.5);
        let pg = &mut self.product;
        // sin(m pi y) = (e^{i m pi y} - e^{-i m pi y}) / 2i
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                for m in 1..=mm {
                    let c = u.get(n, m);
                    row[m] = -c * half_i;
                    row[lp - m] = c * half_i;
                }
            },
            &mut self.u,
        );
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                let i_n = Complex64::new(0.0, n as f64);
                for m in 1..=mm {
                    let c = u.get(n, m) * i_n;
                    row[m] = -c * half_i;
                    row[lp - m] = c * half_i;
                }
            },
            &mut self.ux,
        );
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                for m in 1..=mm {
                    let c = u.get(n, m) * (0.5 * m as f64 * PI);
                    row[m] = c;
                    row[lp - m] = c;
                }
            },
            &mut self.uy,
        );
        pg.synthesize(
            |n, row| {
                let lp = row.len();
                let i_n = Complex64::new(0.0, n as f64);
                let mut constant = Complex64::new(0.0, 0.0);
                for m in 1..=mm {
                    let c = u.get(n, m) * i_n / (m as f64 * PI);
                    constant += c;
                    row[m] = -c * 0.5;
                    row[lp - m] = -c * 0.5;
                }
                row[0] = constant;
            },
            &mut self.tu,
        );
        for i in 0..self.prod.len() {
            self.prod[i] = -self.u[i] * self.ux[i] + self.tu[i] * self.uy[i];
        }
        self.product.project(&self.prod)
    }

    /// Projected forcing at time `t`, or `None` when the model is unforced.
    pub fn forcing(&mut self, p: &ModelParams, t: f64) -> Option<SpectralField> {
        let case = match p.forcing {
            Forcing::None => return None,
            Forcing::Manufactured(case) => case,
        };
        let key = (
            case,
            [p.mu.to_bits(), p.alpha.to_bits(), p.beta.to_bits()],
        );
        if self.forcing_cache.as_ref().map(|c| c.key) != Some(key) {
            let parts = case
                .separable_forcing(p)
                .into_iter()
                .map(|(rate, f)| {
                    let phys = PhysicalField::from_fn(self.grid, f);
                    let spec = self
                        .transform
                        .forward(&phys)
                        .expect("collocation field matches workspace grid");
                    (rate, spec)
                })
                .collect();
            self.forcing_cache = Some(ForcingCache { key, parts });
        }
        let cache = self.forcing_cache.as_ref().expect("filled above");
        let mut out = SpectralField::zeros(self.grid);
        for (rate, part) in &cache.parts {
            out.axpy((-rate * t).exp(), part);
        }
        Some(out)
    }

    /// Everything except the diagonal `mu Lap + alpha` part:
    /// `-u u_x + Tu u_y - beta P(Tu) + P F(t)`.
    pub fn explicit_tendency(
        &mut self,
        u: &SpectralField,
        p: &ModelParams,
        t: f64,
    ) -> SpectralField {
        let mut out = if p.nonlinear {
            self.nonlinear_unchecked(u)
        } else {
            SpectralField::zeros(self.grid)
        };
        if p.beta != 0.0 {
            out.axpy(-p.beta, &self.spectral_t(u));
        }
        if let Some(f) = self.forcing(p, t) {
            out.axpy(1.0, &f);
        }
        out
    }

    /// Full right-hand side `du/dt`.
    pub fn rhs(&mut self, u: &SpectralField, p: &ModelParams, t: f64) -> Result<SpectralField> {
        self.check(u)?;
        let mut out = self.explicit_tendency(u, p, t);
        let g = self.grid;
        for (i, (n, m)) in g.modes().enumerate() {
            out.coef_mut()[i] += u.coef()[i] * p.linear_symbol(n, m);
        }
        Ok(out)
    }
}

/// Tu evaluated on the collocation grid of `u`.
pub fn apply_t(u: &SpectralField) -> Result<PhysicalField> {
    OperatorWorkspace::new(*u.grid()).apply_t(u)
}

/// Multiplies every coefficient by `-(n^2 + m^2 pi^2)`.
pub fn apply_laplacian(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    let g = *u.grid();
    for (c, (n, m)) in out.coef_mut().iter_mut().zip(g.modes()) {
        *c *= laplacian_symbol(n, m);
    }
    out
}

pub fn nonlinear_term(u: &SpectralField, ws: &mut OperatorWorkspace) -> Result<SpectralField> {
    ws.nonlinear_term(u)
}

pub fn rhs(
    u: &SpectralField,
    p: &ModelParams,
    t: f64,
    ws: &mut OperatorWorkspace,
) -> Result<SpectralField> {
    ws.rhs(u, p, t)
}

/// Vertical velocity `v = -Tu` from incompressibility and `v(x, 0) = 0`.
pub fn reconstruct_v(u: &SpectralField) -> Result<PhysicalField> {
    let mut v = apply_t(u)?;
    for x in v.values_mut() {
        *x = -*x;
    }
    Ok(v)
}

/// `x`-derivative in coefficient space.
pub fn d_dx(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    let g = *u.grid();
    for (c, (n, _)) in out.coef_mut().iter_mut().zip(g.modes()) {
        *c *= Complex64::new(0.0, n as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::cos_sin_overlap;
    use crate::transform::{forward_transform, inverse_transform};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(g: Grid, rng: &mut ChaCha8Rng, nb: usize, mb: usize) -> SpectralField {
        let mut s = SpectralField::zeros(g);
        for n in 0..=nb.min(g.n_modes_x()) {
            for m in 1..=mb.min(g.n_modes_y()) {
                let amp = rng.gen_range(-1.0..1.0) / (1.0 + (n * n + m * m) as f64);
                s.add_sine_mode(n, m, amp, rng.gen_range(0.0..6.28));
            }
        }
        s
    }

    fn sin_sin(g: Grid) -> SpectralField {
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(1, 1, 1.0, 0.0);
        u
    }

    #[test]
    fn t_of_single_mode() {
        let g = Grid::new(4, 4, 2).unwrap();
        let tu = apply_t(&sin_sin(g)).unwrap();
        let expect = PhysicalField::from_fn(g, |x, y| x.cos() * (1.0 - (PI * y).cos()) / PI);
        assert!(tu.max_abs_diff(&expect) < 1e-14);
        assert_eq!(apply_t(&SpectralField::zeros(g)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn t_matches_cumulative_trapezoid() {
        let g = Grid::new(5, 6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random_field(g, &mut rng, 5, 6);
        let tu = apply_t(&u).unwrap();
        let ux = d_dx(&u);
        // fine y grid, 4x the collocation density, cumulative trapezoid of u_x
        let fine = 4 * (g.ny() + 1);
        let h = 1.0 / fine as f64;
        let scale = tu.max_abs();
        for j in (0..g.nx()).step_by(7) {
            let x = g.x_node(j);
            let mut acc = 0.0;
            let mut prev = ux.eval_at(x, 0.0);
            let mut node = 0;
            for k in 0..g.ny() {
                let target = 4 * (k + 1);
                while node < target {
                    node += 1;
                    let cur = ux.eval_at(x, node as f64 * h);
                    acc += 0.5 * h * (prev + cur);
                    prev = cur;
                }
                let rel = (acc - tu.at(j, k)).abs() / scale;
                assert!(rel < 1e-3, "rel {rel}");
            }
        }
    }

    #[test]
    fn laplacian_symbol_on_mode() {
        let g = Grid::new(3, 3, 1).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(2, 3, 1.0, 0.0);
        let lu = apply_laplacian(&u);
        let f = -(4.0 + 9.0 * PI * PI);
        assert!((lu.get(2, 3) - u.get(2, 3) * f).norm() < 1e-13);
        assert_eq!(apply_laplacian(&SpectralField::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn laplacian_integration_by_parts() {
        let g = Grid::new(6, 6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_field(g, &mut rng, 6, 6);
        // quadrature (Lap u, u) on the collocation grid against -|grad u|^2 from coefficients
        let lu = inverse_transform(&apply_laplacian(&u)).unwrap();
        let pu = inverse_transform(&u).unwrap();
        let quad: f64 = lu
            .values()
            .iter()
            .zip(pu.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * g.dx()
            * g.dy();
        let grad2: f64 = g
            .modes()
            .zip(u.coef())
            .map(|((n, m), c)| PI * -laplacian_symbol(n, m) * c.norm_sqr())
            .sum();
        assert!(((quad + grad2) / grad2).abs() < 1e-10);
    }

    #[test]
    fn nonlinear_single_mode_closed_form() {
        let g = Grid::new(4, 6, 2).unwrap();
        let mut ws = OperatorWorkspace::new(g);
        let nl = ws.nonlinear_term(&sin_sin(g)).unwrap();
        // (1/2) sin(2x) (cos(pi y) - 1): sin 2x -> -i/2 at n = 2
        for (n, m) in g.modes() {
            let profile = -cos_sin_overlap(m, 0) + cos_sin_overlap(m, 1);
            let expect = match n {
                2 => Complex64::new(0.0, -0.25 * profile),
                -2 => Complex64::new(0.0, 0.25 * profile),
                _ => Complex64::new(0.0, 0.0),
            };
            assert!((nl.get(n, m) - expect).norm() < 1e-14, "({n},{m})");
        }
        let zero = ws.nonlinear_term(&SpectralField::zeros(g)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn nonlinear_orthogonal_to_u() {
        let g = Grid::new(8, 8, 2).unwrap();
        let mut ws = OperatorWorkspace::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let u = random_field(g, &mut rng, 8, 8);
            let nl = ws.nonlinear_term(&u).unwrap();
            let h1 = u.l2_norm().powi(2)
                + g.modes()
                    .zip(u.coef())
                    .map(|((n, m), c)| PI * -laplacian_symbol(n, m) * c.norm_sqr())
                    .sum::<f64>();
            assert!(nl.inner(&u).abs() <= 1e-10 * h1, "{}", nl.inner(&u));
        }
    }

    #[test]
    fn rhs_linear_eigenmode() {
        let g = Grid::new(3, 3, 2).unwrap();
        let mut ws = OperatorWorkspace::new(g);
        let p = ModelParams::new(0.7, 0.0, 0.0).unwrap();
        let u = sin_sin(g);
        let r = crate::transform::project_modes(&ws.rhs(&u, &p, 0.0).unwrap(), 1, 1).unwrap();
        let expect = u.scaled(-0.7 * (1.0 + PI * PI));
        assert!(r.max_abs_diff(&expect) < 1e-14);
        let z = ws.rhs(&SpectralField::zeros(g), &p, 0.0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn v_closed_form() {
        let g = Grid::new(4, 4, 2).unwrap();
        let v = reconstruct_v(&sin_sin(g)).unwrap();
        let expect = PhysicalField::from_fn(g, |x, y| -x.cos() * (1.0 - (PI * y).cos()) / PI);
        assert!(v.max_abs_diff(&expect) < 1e-14);
        assert_eq!(reconstruct_v(&SpectralField::zeros(g)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn spectral_t_matches_quadrature_projection_of_apply_t() {
        // the DST of the collocated Tu converges to the exact projection at second order
        let mut errs = Vec::new();
        for os in [2, 4, 8] {
            let g = Grid::new(3, 4, os).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let u = random_field(g, &mut rng, 3, 4);
            let ws = OperatorWorkspace::new(g);
            let exact = ws.spectral_t(&u);
            let quad = forward_transform(&ws.apply_t(&u).unwrap()).unwrap();
            errs.push(exact.max_abs_diff(&quad));
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "order {order} from {errs:?}");
        }
    }

    /// Composite Simpson of `f` on `[0, b]`.
    fn simpson(f: impl Fn(f64) -> f64, b: f64, panels: usize) -> f64 {
        let h = b / panels as f64;
        let mut s = f(0.0) + f(b);
        for i in 1..panels {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn t_matches_simpson_oracle() {
        let g = Grid::new(3, 2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random_field(g, &mut rng, 3, 2);
        let tu = apply_t(&u).unwrap();
        let scale = tu.max_abs();
        for j in (0..g.nx()).step_by(3) {
            let x = g.x_node(j);
            for k in 0..g.ny() {
                let y = g.y_node(k);
                let q = simpson(|s| u.eval_with_derivatives(x, s)[1], y, 400);
                assert!((q - tu.at(j, k)).abs() <= 1e-6 * scale, "({j},{k})");
            }
        }
    }

    #[test]
    fn velocity_is_divergence_free() {
        // v = -Tu, so u_x + v_y = 0; centered differences in y converge at second order
        let mut errs = Vec::new();
        for os in [4, 8] {
            let g = Grid::new(4, 4, os).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let u = random_field(g, &mut rng, 4, 4);
            let v = reconstruct_v(&u).unwrap();
            let ux = inverse_transform(&d_dx(&u)).unwrap();
            let h = g.dy();
            let mut worst: f64 = 0.0;
            for j in 0..g.nx() {
                for k in 1..g.ny() - 1 {
                    let vy = (v.at(j, k + 1) - v.at(j, k - 1)) / (2.0 * h);
                    worst = worst.max((vy + ux.at(j, k)).abs());
                }
            }
            errs.push(worst / ux.max_abs());
        }
        assert!(errs[1] < 1e-2, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn jensen_bound_on_random_fields() {
        let g = Grid::new(8, 8, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        for _ in 0..200 {
            let u = random_field(g, &mut rng, 8, 8);
            let tu = crate::diagnostics::tu_norm(&u);
            let grad = crate::diagnostics::h1_seminorm(&u);
            assert!(tu <= grad, "{tu} > {grad}");
        }
    }

    #[test]
    fn t_is_linear() {
        let g = Grid::new(4, 5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_field(g, &mut rng, 4, 5);
        let w = random_field(g, &mut rng, 4, 5);
        let mut comb = u.scaled(0.3);
        comb.axpy(-1.7, &w);
        let lhs = apply_t(&comb).unwrap();
        let (tu, tw) = (apply_t(&u).unwrap(), apply_t(&w).unwrap());
        let scale = tu.max_abs().max(tw.max_abs());
        for i in 0..lhs.values().len() {
            let rhs = 0.3 * tu.values()[i] - 1.7 * tw.values()[i];
            assert!((lhs.values()[i] - rhs).abs() <= 1e-13 * scale.max(1.0));
        }
    }
}
