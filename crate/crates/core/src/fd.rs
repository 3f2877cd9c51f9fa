//! Second-order finite-difference solver used only as a cross-check.
//!
//! Nodes `x_j = 2 pi j / nx` (periodic) and `y_k = k / ny`, `k = 0..=ny`,
//! with the boundary rows held at zero. Centered differences in space,
//! trapezoid cumulative sums for `T`, classical RK4 in time. Nothing here
//! touches the spectral representation.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::{Forcing, ModelParams};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Growth of the max norm beyond which a run is declared unstable.
pub const FD_GROWTH_LIMIT: f64 = 1e6;
/// Leftmost point of the RK4 stability region on the negative real axis.
const RK4_REAL_REACH: f64 = 2.78;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FdGrid {
    nx: usize,
    ny: usize,
}

impl FdGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 8 || nx % 2 != 0 || ny < 8 {
            return Err(Error::InvalidInput(format!(
                "FD grid needs nx >= 8 even and ny >= 8, got {nx} x {ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.hx()
    }

    pub fn y(&self, k: usize) -> f64 {
        k as f64 * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * (self.ny + 1) + k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdState {
    pub grid: FdGrid,
    pub t: f64,
    /// `values[j * (ny + 1) + k]`
    pub values: Vec<f64>,
}

impl FdState {
    pub fn zeros(grid: FdGrid) -> Self {
        Self {
            grid,
            t: 0.0,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at the interior nodes; boundary rows are zero.
    pub fn from_fn(grid: FdGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut s = Self::zeros(grid);
        for j in 0..grid.nx {
            for k in 1..grid.ny {
                s.values[grid.idx(j, k)] = f(grid.x(j), grid.y(k));
            }
        }
        s
    }

    /// Samples a spectral field at the FD nodes by direct summation.
    pub fn from_spectral(grid: FdGrid, u: &SpectralField) -> Self {
        let values = sample_spectral(grid, u);
        Self { grid, t: 0.0, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Values of a spectral field at every FD node (boundary rows included).
pub fn sample_spectral(grid: FdGrid, u: &SpectralField) -> Vec<f64> {
    let g = u.grid();
    let (nn, mm) = (g.n_modes_x() as i64, g.n_modes_y());
    let stride = grid.ny + 1;
    // per (n, k): sum_m c(n, m) sin(m pi y_k)
    let width = (2 * nn + 1) as usize;
    let mut rows = vec![Complex64::new(0.0, 0.0); width * stride];
    for k in 0..=grid.ny {
        let y = grid.y(k);
        let s: Vec<f64> = (1..=mm).map(|m| (m as f64 * PI * y).sin()).collect();
        for n in -nn..=nn {
            let r = (n + nn) as usize;
            rows[r * stride + k] = (1..=mm).map(|m| u.get(n, m) * s[m - 1]).sum();
        }
    }
    let mut out = vec![0.0; grid.len()];
    for j in 0..grid.nx {
        let x = grid.x(j);
        for n in -nn..=nn {
            let e = Complex64::from_polar(1.0, n as f64 * x);
            let r = (n + nn) as usize;
            for k in 0..=grid.ny {
                out[j * stride + k] += (e * rows[r * stride + k]).re;
            }
        }
    }
    out
}

/// `Tu` by centered `x`-differences and cumulative trapezoid sums from `y = 0`.
pub fn fd_t(state: &FdState) -> FdState {
    let mut out = FdState::zeros(state.grid);
    out.t = state.t;
    t_into(&state.grid, &state.values, &mut out.values);
    out
}

fn t_into(g: &FdGrid, u: &[f64], tu: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let stride = ny + 1;
    let (rx, hy) = (0.5 / g.hx(), g.hy());
    for j in 0..nx {
        let (jp, jm) = ((j + 1) % nx, (j + nx - 1) % nx);
        let mut acc = 0.0;
        let mut prev = rx * (u[jp * stride] - u[jm * stride]);
        tu[j * stride] = 0.0;
        for k in 1..=ny {
            let cur = rx * (u[jp * stride + k] - u[jm * stride + k]);
            acc += 0.5 * hy * (prev + cur);
            tu[j * stride + k] = acc;
            prev = cur;
        }
    }
}

/// Scratch space for the right-hand side and the RK4 stages.
#[derive(Debug, Clone)]
pub struct FdSolver {
    grid: FdGrid,
    params: ModelParams,
    tu: Vec<f64>,
    stage: Vec<f64>,
    k: [Vec<f64>; 4],
    initial_max: Option<f64>,
}

impl FdSolver {
    pub fn new(grid: FdGrid, params: ModelParams) -> Self {
        let n = grid.len();
        Self {
            grid,
            params,
            tu: vec![0.0; n],
            stage: vec![0.0; n],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            initial_max: None,
        }
    }

    /// Full right-hand side at interior nodes; boundary rows get zero.
    pub fn rhs(&mut self, u: &[f64], t: f64, out: &mut [f64]) {
        let g = self.grid;
        let p = self.params;
        t_into(&g, u, &mut self.tu);
        let (nx, ny) = (g.nx, g.ny);
        let stride = ny + 1;
        let (hx, hy) = (g.hx(), g.hy());
        let (rx, ry) = (0.5 / hx, 0.5 / hy);
        let (rxx, ryy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
        let nl = if p.nonlinear { 1.0 } else { 0.0 };
        for j in 0..nx {
            let (jp, jm) = ((j + 1) % nx, (j + nx - 1) % nx);
            out[j * stride] = 0.0;
            out[j * stride + ny] = 0.0;
            for k in 1..ny {
                let c = j * stride + k;
                let uc = u[c];
                let ux = rx * (u[jp * stride + k] - u[jm * stride + k]);
                let uy = ry * (u[c + 1] - u[c - 1]);
                let lap = rxx * (u[jp * stride + k] - 2.0 * uc + u[jm * stride + k])
                    + ryy * (u[c + 1] - 2.0 * uc + u[c - 1]);
                let tu = self.tu[c];
                out[c] = nl * (-uc * ux + tu * uy) + p.mu * lap + p.alpha * uc - p.beta * tu;
            }
        }
        if let Forcing::Manufactured(case) = p.forcing {
            for j in 0..nx {
                for k in 1..ny {
                    out[j * stride + k] += case.forcing(g.x(j), g.y(k), t, &p);
                }
            }
        }
    }

    /// One classical RK4 step in place.
    pub fn step(&mut self, state: &mut FdState, dt: f64) -> Result<()> {
        let init = *self
            .initial_max
            .get_or_insert_with(|| state.max_abs().max(f64::MIN_POSITIVE));
        let t = state.t;
        let u = &state.values;
        let mut k = std::mem::take(&mut self.k);
        let mut stage = std::mem::take(&mut self.stage);
        self.rhs(u, t, &mut k[0]);
        for (s, (a, b)) in stage.iter_mut().zip(u.iter().zip(&k[0])) {
            *s = a + 0.5 * dt * b;
        }
        self.rhs(&stage, t + 0.5 * dt, &mut k[1]);
        for (s, (a, b)) in stage.iter_mut().zip(u.iter().zip(&k[1])) {
            *s = a + 0.5 * dt * b;
        }
        self.rhs(&stage, t + 0.5 * dt, &mut k[2]);
        for (s, (a, b)) in stage.iter_mut().zip(u.iter().zip(&k[2])) {
            *s = a + dt * b;
        }
        self.rhs(&stage, t + dt, &mut k[3]);
        for i in 0..state.values.len() {
            state.values[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        self.k = k;
        self.stage = stage;
        state.t = t + dt;
        let growth = state.max_abs() / init;
        if !growth.is_finite() || growth > FD_GROWTH_LIMIT {
            return Err(Error::FdUnstable {
                t: state.t,
                growth,
            });
        }
        Ok(())
    }
}

/// Largest RK4 step allowed by diffusion and advection, times `safety`.
pub fn fd_stable_dt(grid: &FdGrid, p: &ModelParams, u_max: f64, safety: f64) -> f64 {
    let (hx, hy) = (grid.hx(), grid.hy());
    let diff = 4.0 * p.mu * (1.0 / (hx * hx) + 1.0 / (hy * hy)) + p.alpha.abs();
    let mut dt = RK4_REAL_REACH / diff;
    if u_max > 0.0 && p.nonlinear {
        dt = dt.min(hx / u_max).min(hy / u_max);
    }
    safety * dt
}

/// One RK4 step with a throwaway solver.
pub fn fd_step_rk4(state: &FdState, p: &ModelParams, dt: f64) -> Result<FdState> {
    let mut s = FdSolver::new(state.grid, *p);
    let mut out = state.clone();
    s.step(&mut out, dt)?;
    Ok(out)
}

/// Integrates to `t_end` with uniform steps no larger than the stable step.
pub fn fd_run(u0: &FdState, p: &ModelParams, t_end: f64, safety: f64) -> Result<FdState> {
    let dt_max = fd_stable_dt(&u0.grid, p, u0.max_abs(), safety);
    let steps = ((t_end - u0.t) / dt_max).ceil().max(1.0) as usize;
    let dt = (t_end - u0.t) / steps as f64;
    let mut solver = FdSolver::new(u0.grid, *p);
    let mut s = u0.clone();
    for _ in 0..steps {
        solver.step(&mut s, dt)?;
    }
    s.t = t_end;
    Ok(s)
}

/// One resolution of a spectral-versus-FD comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Max nodal difference from the spectral solution at `t_end`.
    pub discrepancy: f64,
    /// `discrepancy / h^2`
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStudy {
    pub t_end: f64,
    pub rows: Vec<OracleRow>,
    /// Successive orders in `h = hx`.
    pub orders: Vec<f64>,
}

impl OracleStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("spectral vs finite differences at t = {}\n", self.t_end);
        s.push_str("    nx     ny   discrepancy   disc/h^2   order\n");
        for (i, r) in self.rows.iter().enumerate() {
            let order = if i == 0 { "-".to_string() } else { format!("{:.3}", self.orders[i - 1]) };
            s.push_str(&format!(
                "{:>6} {:>6}   {:.4e}   {:.4e}   {order}\n",
                r.nx, r.ny, r.discrepancy, r.constant
            ));
        }
        s
    }
}

/// Runs the FD solver on `sizes` x `sizes` grids and compares each with the
/// spectral solution `u_spec` reached at `t_end` from the same data.
pub fn cross_solver_study(
    u0: &SpectralField,
    u_spec: &SpectralField,
    p: &ModelParams,
    t_end: f64,
    sizes: &[usize],
    safety: f64,
) -> Result<OracleStudy> {
    let rows = sizes
        .par_iter()
        .map(|&n| {
            let g = FdGrid::new(n, n)?;
            let s0 = FdState::from_spectral(g, u0);
            let s = fd_run(&s0, p, t_end, safety)?;
            let disc = s.max_abs_diff(&sample_spectral(g, u_spec));
            let h = g.hx();
            Ok(OracleRow { nx: n, ny: n, h, discrepancy: disc, constant: disc / (h * h) })
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = rows
        .windows(2)
        .map(|w| (w[0].discrepancy / w[1].discrepancy).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(OracleStudy { t_end, rows, orders })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_sin(g: FdGrid) -> FdState {
        FdState::from_fn(g, |x, y| x.sin() * (PI * y).sin())
    }

    #[test]
    fn grid_validation() {
        assert!(FdGrid::new(7, 8).is_err());
        assert!(FdGrid::new(8, 4).is_err());
        assert!(FdGrid::new(8, 8).is_ok());
    }

    #[test]
    fn t_of_zero_and_of_single_mode() {
        let g = FdGrid::new(16, 16).unwrap();
        assert_eq!(fd_t(&FdState::zeros(g)).max_abs(), 0.0);
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let g = FdGrid::new(n, n).unwrap();
            let tu = fd_t(&sin_sin(g));
            let exact = FdState::from_fn(g, |x, y| x.cos() * (1.0 - (PI * y).cos()) / PI);
            // the top row is not sampled by from_fn; compare interior nodes only
            let mut e: f64 = 0.0;
            for j in 0..n {
                for k in 1..n {
                    e = e.max((tu.values[g.idx(j, k)] - exact.values[g.idx(j, k)]).abs());
                }
            }
            errs.push(e);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
        }
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = FdGrid::new(16, 16).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.5).unwrap();
        let s = fd_step_rk4(&FdState::zeros(g), &p, 1e-4).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn linear_decay_converges_at_second_order() {
        let p = ModelParams::new(1.0, -0.2, 0.0).unwrap().linear_only();
        let t_end = 0.05;
        let rate = -0.2 - (1.0 + PI * PI);
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let g = FdGrid::new(n, n).unwrap();
            let s = fd_run(&sin_sin(g), &p, t_end, 0.9).unwrap();
            let exact = sin_sin(g);
            let e = exact
                .values
                .iter()
                .zip(&s.values)
                .fold(0.0f64, |a, (x, y)| a.max((x * (rate * t_end).exp() - y).abs()));
            errs.push(e);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "order {order} from {errs:?}");
        }
    }

    #[test]
    fn unstable_step_is_reported() {
        let g = FdGrid::new(32, 32).unwrap();
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let mut solver = FdSolver::new(g, p);
        let mut s = sin_sin(g);
        let mut res = Ok(());
        for _ in 0..200 {
            res = solver.step(&mut s, 1e-2);
            if res.is_err() {
                break;
            }
        }
        assert!(matches!(res, Err(Error::FdUnstable { .. })));
    }

    #[test]
    fn sampling_matches_spectral_evaluation() {
        let sg = crate::grid::Grid::new(4, 4, 1).unwrap();
        let mut u = SpectralField::zeros(sg);
        u.add_sine_mode(2, 3, 0.7, 0.4);
        u.add_sine_mode(1, 1, -0.3, 1.9);
        let g = FdGrid::new(10, 12).unwrap();
        let v = sample_spectral(g, &u);
        for j in 0..10 {
            for k in 0..=12 {
                let e = u.eval_at(g.x(j), g.y(k));
                assert!((v[g.idx(j, k)] - e).abs() < 1e-14);
            }
        }
    }
    #[test]
    fn spectral_rhs_matches_fd_rhs() {
        // even sine modes keep Tu zero on both walls, so the projected
        // products converge quickly and the FD truncation error dominates
        let g = crate::grid::Grid::new(8, 64, 2).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(1, 2, 0.8, 0.3);
        u.add_sine_mode(2, 2, 0.4, 1.0);
        u.add_sine_mode(1, 4, 0.2, 2.0);
        let p = ModelParams::new(0.5, -0.2, 0.7).unwrap();
        let mut ws = crate::operators::OperatorWorkspace::new(g);
        let r = ws.rhs(&u, &p, 0.0).unwrap();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let fg = FdGrid::new(n, n).unwrap();
            let values = sample_spectral(fg, &u);
            let mut out = vec![0.0; fg.len()];
            FdSolver::new(fg, p).rhs(&values, 0.0, &mut out);
            let expect = sample_spectral(fg, &r);
            let mut worst: f64 = 0.0;
            for j in 0..fg.nx() {
                for k in n / 4..=3 * n / 4 {
                    worst = worst.max((out[fg.idx(j, k)] - expect[fg.idx(j, k)]).abs());
                }
            }
            errs.push(worst);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.8, "order {order} from {errs:?}");
        }
    }
}
