//! Norms, extrema and identity residuals of a spectral field.

use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::SolverState;
use crate::operators::{laplacian_symbol, ModelParams, OperatorWorkspace};
use crate::transform::SpectralTransform;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Oversampling used when hunting for extrema on the physical grid.
pub const EXTREMUM_OVERSAMPLE: usize = 4;
/// Points of the finite-difference stencil behind the identity residuals.
/// Fast-decaying modes make lower-order stencils dominate the residual.
pub const RESIDUAL_STENCIL: usize = 7;
/// Number of grid candidates refined by Newton iteration.
const EXTREMUM_CANDIDATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub x: f64,
    pub y: f64,
}

/// One row of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub h1_dot: f64,
    pub linf: f64,
    pub max_u: Extremum,
    pub min_u: Extremum,
    pub mean: f64,
    pub wiener0: f64,
    pub wiener1: f64,
    pub wiener2: f64,
    /// `(Tu, u)`
    pub tu_u: f64,
    /// `(F, u)`, zero when unforced
    pub forcing_work: f64,
    pub energy_residual: f64,
    pub wiener_ineq_residual: f64,
}

impl DiagnosticsRecord {
    pub fn energy(&self) -> f64 {
        0.5 * self.l2 * self.l2
    }

    /// Right-hand side of the energy identity `dE/dt = ...`.
    pub fn energy_rate(&self, p: &ModelParams) -> f64 {
        -p.mu * self.h1_dot * self.h1_dot + p.alpha * self.l2 * self.l2 - p.beta * self.tu_u
            + self.forcing_work
    }

    /// `2 A0 A2 - mu A2`, the bound on `dA0/dt`.
    pub fn wiener_bound(&self, p: &ModelParams) -> f64 {
        2.0 * self.wiener0 * self.wiener2 - p.mu * self.wiener2
    }
}

/// Saved field for later comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: SpectralField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub params: ModelParams,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

impl TrajectoryLog {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    /// Recomputes both identity residuals with a seven-point time derivative
    /// over the logged samples. With fewer than two samples the residuals are zero.
    pub fn finalize_residuals(&mut self) {
        let p = self.params;
        let ts: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        let e: Vec<f64> = self.records.iter().map(|r| r.energy()).collect();
        let w: Vec<f64> = self.records.iter().map(|r| r.wiener0).collect();
        let de = time_derivative_width(&ts, &e, RESIDUAL_STENCIL);
        let dw = time_derivative_width(&ts, &w, RESIDUAL_STENCIL);
        for (i, r) in self.records.iter_mut().enumerate() {
            r.energy_residual = (de[i] - r.energy_rate(&p)).abs();
            r.wiener_ineq_residual = (dw[i] - r.wiener_bound(&p)).max(0.0);
        }
    }

    pub fn final_record(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }
}

/// Finite-difference weights for the first derivative at `x0` over nodes
/// `xs` (Fornberg's recursion).
pub fn derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative k, k in {0, 1}
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// `dv/dt` at every sample from three-point stencils (one-sided at the ends).
pub fn time_derivative(ts: &[f64], vs: &[f64]) -> Vec<f64> {
    time_derivative_width(ts, vs, 3)
}

/// `dv/dt` from `width`-point stencils, centered where possible and shifted
/// inward near the ends; shorter series use all their points.
pub fn time_derivative_width(ts: &[f64], vs: &[f64], width: usize) -> Vec<f64> {
    let n = ts.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = n.min(width);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let nodes = &ts[start..start + width];
            derivative_weights(ts[i], nodes)
                .iter()
                .zip(&vs[start..start + width])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect()
}

pub fn l2_norm(u: &SpectralField) -> f64 {
    u.l2_norm()
}

/// `||grad u||` from the coefficients.
pub fn h1_seminorm(u: &SpectralField) -> f64 {
    let g = *u.grid();
    g.modes()
        .zip(u.coef())
        .map(|((n, m), c)| PI * -laplacian_symbol(n, m) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Wiener-type norm `sum (|n|^s + m^s) |u_hat(n, m)|`.
pub fn wiener_norm(u: &SpectralField, s: u32) -> f64 {
    let g = *u.grid();
    g.modes()
        .zip(u.coef())
        .map(|((n, m), c)| {
            let w = (n.unsigned_abs() as f64).powi(s as i32) + (m as f64).powi(s as i32);
            w * c.norm()
        })
        .sum()
}

/// Domain average `(1 / 2 pi) int int u`.
pub fn mean(u: &SpectralField) -> f64 {
    let mm = u.grid().n_modes_y();
    (1..=mm)
        .step_by(2)
        .map(|m| 2.0 * u.get(0, m).re / (m as f64 * PI))
        .sum()
}

/// `||Tu||` in closed form: per row, `Tu_n = i n sum_m c_m (1 - cos(m pi y))`.
pub fn tu_norm(u: &SpectralField) -> f64 {
    let g = *u.grid();
    let (nn, mm) = (g.n_modes_x() as i64, g.n_modes_y());
    let mut acc = 0.0;
    for n in -nn..=nn {
        if n == 0 {
            continue;
        }
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        let mut sq = 0.0;
        for m in 1..=mm {
            let c = u.get(n, m) / (m as f64 * PI);
            sum += c;
            sq += c.norm_sqr();
        }
        acc += (n * n) as f64 * (sum.norm_sqr() + 0.5 * sq);
    }
    (2.0 * PI * acc).sqrt()
}

/// Evaluator for everything in a [`DiagnosticsRecord`].
#[derive(Debug, Clone)]
pub struct Diagnostics {
    grid: Grid,
    sup_grid: Grid,
    sup: SpectralTransform,
    ws: OperatorWorkspace,
    params: ModelParams,
}

impl Diagnostics {
    pub fn new(grid: Grid, params: ModelParams) -> Self {
        let sup_grid = grid
            .with_oversample(EXTREMUM_OVERSAMPLE)
            .expect("oversampling a valid grid");
        Self {
            grid,
            sup_grid,
            sup: SpectralTransform::new(sup_grid),
            ws: OperatorWorkspace::new(grid),
            params,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `(Tu, u)` with the exact projection of `Tu`.
    pub fn tu_inner(&self, u: &SpectralField) -> f64 {
        self.ws.spectral_t(u).inner(u)
    }

    /// Maximum and minimum of `u` over the closed domain.
    pub fn extrema(&self, u: &SpectralField) -> (Extremum, Extremum) {
        let on_sup = SpectralField::from_coef(self.sup_grid, u.coef().to_vec())
            .expect("same truncation");
        let phys = self.sup.inverse_unchecked(&on_sup);
        let g = self.sup_grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut out = [Extremum { value: 0.0, x: 0.0, y: 0.0 }; 2];
        for (slot, sign) in [(0usize, 1.0f64), (1, -1.0)] {
            let val = |j: usize, k: isize| -> f64 {
                if k < 0 || k >= ny as isize {
                    0.0
                } else {
                    sign * phys.at(j % nx, k as usize)
                }
            };
            let mut cands: Vec<(f64, usize, usize)> = Vec::new();
            for j in 0..nx {
                for k in 0..ny {
                    let v = sign * phys.at(j, k);
                    let mut is_peak = true;
                    'nb: for dj in [nx - 1, 0, 1] {
                        for dk in [-1isize, 0, 1] {
                            if (dj == 0 && dk == 0) || val(j + dj, k as isize + dk) <= v {
                                continue;
                            }
                            is_peak = false;
                            break 'nb;
                        }
                    }
                    if is_peak {
                        cands.push((v, j, k));
                    }
                }
            }
            cands.sort_by(|a, b| b.0.total_cmp(&a.0));
            cands.truncate(EXTREMUM_CANDIDATES);
            // the boundary value 0 is always attained
            let mut best = Extremum { value: 0.0, x: 0.0, y: 0.0 };
            for &(_, j, k) in &cands {
                let e = polish(u, g.x_node(j), g.y_node(k), sign, g.dx(), g.dy());
                if e.value > best.value {
                    best = e;
                }
            }
            best.value *= sign;
            out[slot] = best;
        }
        (out[0], out[1])
    }

    pub fn sup_norm(&self, u: &SpectralField) -> f64 {
        let (mx, mn) = self.extrema(u);
        mx.value.abs().max(mn.value.abs())
    }

    /// All diagnostics at time `t`. Residuals are left at zero; they are
    /// filled by [`TrajectoryLog::finalize_residuals`].
    pub fn record(&mut self, t: f64, u: &SpectralField) -> DiagnosticsRecord {
        debug_assert_eq!(*u.grid(), self.grid);
        let (max_u, min_u) = self.extrema(u);
        let forcing_work = self
            .ws
            .forcing(&self.params, t)
            .map(|f| f.inner(u))
            .unwrap_or(0.0);
        DiagnosticsRecord {
            t,
            l2: u.l2_norm(),
            h1_dot: h1_seminorm(u),
            linf: max_u.value.abs().max(min_u.value.abs()),
            max_u,
            min_u,
            mean: mean(u),
            wiener0: wiener_norm(u, 0),
            wiener1: wiener_norm(u, 1),
            wiener2: wiener_norm(u, 2),
            tu_u: self.tu_inner(u),
            forcing_work,
            energy_residual: 0.0,
            wiener_ineq_residual: 0.0,
        }
    }
}

/// Newton refinement of a local maximum of `sign * u` started at a grid node.
fn polish(u: &SpectralField, x0: f64, y0: f64, sign: f64, hx: f64, hy: f64) -> Extremum {
    let (mut x, mut y) = (x0, y0);
    let mut d = u.eval_with_derivatives(x, y);
    let mut best = sign * d[0];
    for _ in 0..40 {
        let (gx, gy) = (sign * d[1], sign * d[2]);
        let (hxx, hxy, hyy) = (sign * d[3], sign * d[4], sign * d[5]);
        let det = hxx * hyy - hxy * hxy;
        if !(hxx < 0.0 && det > 0.0) {
            break;
        }
        let dx = (-(hyy * gx - hxy * gy) / det).clamp(-hx, hx);
        let dy = (-(hxx * gy - hxy * gx) / det).clamp(-hy, hy);
        let (xn, yn) = (x + dx, (y + dy).clamp(1e-12, 1.0 - 1e-12));
        let dn = u.eval_with_derivatives(xn, yn);
        if sign * dn[0] < best {
            break;
        }
        x = xn;
        y = yn;
        d = dn;
        best = sign * d[0];
        if dx.abs() < 1e-14 && dy.abs() < 1e-14 {
            break;
        }
    }
    Extremum {
        value: best,
        x: x.rem_euclid(2.0 * PI),
        y,
    }
}

/// Record of `state` with both residuals from a backward difference
/// against `prev` (zero without one). Builds a fresh evaluator each call.
pub fn compute_record(
    state: &SolverState,
    params: &ModelParams,
    prev: Option<&DiagnosticsRecord>,
) -> DiagnosticsRecord {
    let mut rec = Diagnostics::new(*state.u.grid(), *params).record(state.t, &state.u);
    if let Some(prev) = prev {
        let h = rec.t - prev.t;
        if h > 0.0 {
            let de = (rec.energy() - prev.energy()) / h;
            let dw = (rec.wiener0 - prev.wiener0) / h;
            rec.energy_residual = (de - rec.energy_rate(params)).abs();
            rec.wiener_ineq_residual = (dw - rec.wiener_bound(params)).max(0.0);
        }
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(g: Grid, n: usize, m: usize, a: f64) -> SpectralField {
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(n, m, a, 0.0);
        u
    }

    #[test]
    fn norms_of_single_mode() {
        let g = Grid::new(4, 4, 2).unwrap();
        let u = mode(g, 2, 3, 0.5);
        // int int (0.5 sin 2x sin 3 pi y)^2 = 0.25 * pi * 1/2 ... = pi / 8
        assert!((u.l2_norm().powi(2) - PI / 8.0).abs() < 1e-14);
        let grad = (4.0 + 9.0 * PI * PI) * PI / 8.0;
        assert!((h1_seminorm(&u).powi(2) - grad).abs() < 1e-12);
        // two coefficients of modulus 1/4
        assert!((wiener_norm(&u, 0) - 1.0).abs() < 1e-14);
        assert!((wiener_norm(&u, 1) - 0.5 * 5.0).abs() < 1e-14);
        assert!((wiener_norm(&u, 2) - 0.5 * 13.0).abs() < 1e-14);
        assert_eq!(mean(&u), 0.0);
    }

    #[test]
    fn zero_state_record_and_linear_decay_residual() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.0).unwrap();
        let z = compute_record(&SolverState::new(SpectralField::zeros(g)), &p, None);
        assert_eq!(z.l2 + z.h1_dot + z.linf + z.wiener0 + z.energy_residual, 0.0);
        // exact decay of one mode sampled at spacing h: residual O(h)
        let rate = -0.1 - (1.0 + PI * PI);
        let mut residuals = Vec::new();
        for h in [1e-3, 5e-4] {
            let u0 = mode(g, 1, 1, 0.1);
            let r0 = compute_record(&SolverState::new(u0.clone()), &p, None);
            let s1 = SolverState { t: h, step: 1, u: u0.scaled((rate * h).exp()) };
            residuals.push(compute_record(&s1, &p, Some(&r0)).energy_residual);
        }
        assert!((residuals[0] / residuals[1] - 2.0).abs() < 0.05);
    }

    #[test]
    fn mean_of_x_independent_mode() {
        let g = Grid::new(2, 3, 2).unwrap();
        let mut u = SpectralField::zeros(g);
        // 0.3 sin(pi y): c(0, 1) = 0.3, mean 0.3 * 2 / pi
        u.set(0, 1, num_complex::Complex64::new(0.3, 0.0));
        assert!((mean(&u) - 0.6 / PI).abs() < 1e-15);
    }

    #[test]
    fn extrema_of_single_mode() {
        let g = Grid::new(5, 5, 2).unwrap();
        let u = mode(g, 1, 1, 0.7);
        let d = Diagnostics::new(g, ModelParams::new(1.0, 0.0, 0.0).unwrap());
        let (mx, mn) = d.extrema(&u);
        assert!((mx.value - 0.7).abs() < 1e-13);
        assert!((mn.value + 0.7).abs() < 1e-13);
        assert!((mx.x - PI / 2.0).abs() < 1e-6 && (mx.y - 0.5).abs() < 1e-6);
        let (z1, z2) = d.extrema(&SpectralField::zeros(g));
        assert_eq!((z1.value, z2.value), (0.0, 0.0));
    }

    #[test]
    fn tu_norm_matches_quadrature() {
        let g = Grid::new(3, 3, 8).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(1, 1, 0.4, 0.3);
        u.add_sine_mode(2, 3, -0.2, 1.1);
        u.add_sine_mode(3, 2, 0.1, 2.0);
        let tu = crate::operators::apply_t(&u).unwrap();
        // trapezoid in y is exact for this cosine series; Tu(x, 1) != 0 needs its half weight
        let ux = crate::operators::d_dx(&u);
        let mut top = 0.0;
        for j in 0..g.nx() {
            let x = g.x_node(j);
            let panels = 2000;
            let h = 1.0 / panels as f64;
            let mut acc = ux.eval_at(x, 0.0) + ux.eval_at(x, 1.0);
            for i in 1..panels {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * ux.eval_at(x, i as f64 * h);
            }
            top += 0.5 * (acc * h / 3.0).powi(2);
        }
        let interior: f64 = tu.values().iter().map(|v| v * v).sum();
        let quad = (interior + top) * g.dx() * g.dy();
        let exact = tu_norm(&u).powi(2);
        assert!(((quad - exact) / exact).abs() < 1e-10, "{quad} {exact}");
    }

    #[test]
    fn five_point_derivative_is_exact_on_quartics() {
        let ts: Vec<f64> = (0..9).map(|i| 0.1 * i as f64 + 0.01 * (i * i) as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|t| t.powi(4) - 2.0 * t + 1.0).collect();
        let d = time_derivative_width(&ts, &vs, 5);
        for (t, dv) in ts.iter().zip(d) {
            assert!((dv - (4.0 * t.powi(3) - 2.0)).abs() < 1e-10);
        }
        assert_eq!(time_derivative(&[1.0], &[2.0]), vec![0.0]);
    }
}
