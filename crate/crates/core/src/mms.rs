//! Manufactured solutions and the convergence study built on them.
//!
//! The exact solution is a single decaying mode
//! `u_e = a e^{-lambda t} sin(n0 x) sin(m0 pi y)`; the forcing is whatever
//! makes it satisfy the full equation.

use crate::diagnostics::Diagnostics;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::{run_simulation, StepperConfig};
use crate::operators::{Forcing, ModelParams};
use crate::report::{Clause, VerificationReport};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedCase {
    pub amplitude: f64,
    pub decay: f64,
    pub n0: usize,
    pub m0: usize,
}

impl ManufacturedCase {
    pub fn new(amplitude: f64, decay: f64, n0: usize, m0: usize) -> Self {
        Self {
            amplitude,
            decay,
            n0,
            m0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 || self.m0 == 0 {
            return Err(Error::InvalidInput(
                "manufactured mode needs n0 >= 1 and m0 >= 1".into(),
            ));
        }
        if !self.amplitude.is_finite() || !self.decay.is_finite() {
            return Err(Error::InvalidInput("manufactured amplitude and decay must be finite".into()));
        }
        Ok(())
    }

    /// Coefficients of the exact solution at time `t` on `grid`.
    pub fn exact_field(&self, grid: Grid, t: f64) -> SpectralField {
        let mut u = SpectralField::zeros(grid);
        let a = self.amplitude * (-self.decay * t).exp();
        // a sin(n0 x) -> -i a / 2 at n0
        u.set_hermitian(self.n0 as i64, self.m0, Complex64::new(0.0, -0.5 * a));
        u
    }

    fn k2(&self) -> f64 {
        let (n, m) = (self.n0 as f64, self.m0 as f64 * PI);
        n * n + m * m
    }

    pub fn exact(&self, x: f64, y: f64, t: f64) -> f64 {
        self.amplitude
            * (-self.decay * t).exp()
            * (self.n0 as f64 * x).sin()
            * (self.m0 as f64 * PI * y).sin()
    }

    /// The forcing in closed form.
    pub fn forcing(&self, x: f64, y: f64, t: f64, p: &ModelParams) -> f64 {
        self.separable_forcing(p)
            .iter()
            .map(|(rate, f)| (-rate * t).exp() * f(x, y))
            .sum()
    }

    /// Forcing split as `sum_i e^{-rate_i t} f_i(x, y)`.
    #[allow(clippy::type_complexity)]
    pub fn separable_forcing(&self, p: &ModelParams) -> Vec<(f64, Box<dyn Fn(f64, f64) -> f64>)> {
        let a = self.amplitude;
        let (n0, mpi) = (self.n0 as f64, self.m0 as f64 * PI);
        let lin = a * (-self.decay - p.alpha + p.mu * self.k2());
        let drift = a * p.beta * n0 / mpi;
        let mut parts: Vec<(f64, Box<dyn Fn(f64, f64) -> f64>)> = vec![(
            self.decay,
            Box::new(move |x, y| {
                lin * (n0 * x).sin() * (mpi * y).sin()
                    + drift * (n0 * x).cos() * (1.0 - (mpi * y).cos())
            }),
        )];
        if p.nonlinear {
            let quad = 0.5 * a * a * n0;
            parts.push((
                2.0 * self.decay,
                Box::new(move |x, y| quad * (2.0 * n0 * x).sin() * (1.0 - (mpi * y).cos())),
            ));
        }
        parts
    }
}


/// Which discretization parameter a study row varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// `N` varies; errors against a run with `reference_n` modes.
    X,
    /// `M` varies; errors against the exact solution. Orders are fitted in
    /// the collocation spacing `1 / (Y + 1)`.
    Y,
    /// `dt` varies; errors against the same grid at `dt_min / 8`.
    T,
}

impl Block {
    pub fn name(&self) -> &'static str {
        match self {
            Block::X => "x",
            Block::Y => "y",
            Block::T => "t",
        }
    }
}

/// Resolutions and step sizes of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub t_end: f64,
    pub oversample: usize,
    /// `N` values of the x block, run at `x_block_m` sine modes.
    pub resolutions_x: Vec<usize>,
    pub x_block_m: usize,
    pub reference_n: usize,
    /// `M` values of the y block, run at `y_block_n` Fourier modes.
    pub resolutions_y: Vec<usize>,
    pub y_block_n: usize,
    /// Step of the two spatial blocks.
    pub dt_space: f64,
    /// Step sizes of the time block, run on (`t_block_n`, `t_block_m`).
    pub dts: Vec<f64>,
    pub t_block_n: usize,
    pub t_block_m: usize,
    /// Number of intermediate samples for the time-max errors.
    pub samples: usize,
}

impl Default for StudyPlan {
    fn default() -> Self {
        Self {
            t_end: 0.5,
            oversample: 2,
            resolutions_x: vec![4, 8, 16],
            x_block_m: 16,
            reference_n: 32,
            resolutions_y: vec![8, 16, 32, 64],
            y_block_n: 8,
            dt_space: 1e-4,
            dts: vec![4e-3, 2e-3, 1e-3, 5e-4],
            t_block_n: 8,
            t_block_m: 32,
            samples: 5,
        }
    }
}

impl StudyPlan {
    pub fn validate(&self) -> Result<()> {
        if self.resolutions_x.len() < 3 || self.resolutions_y.len() < 3 || self.dts.len() < 3 {
            return Err(Error::InvalidInput(
                "convergence study needs at least 3 entries per list".into(),
            ));
        }
        if !(self.t_end > 0.0) || self.samples == 0 {
            return Err(Error::InvalidInput("study needs t_end > 0 and samples >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub block: Block,
    pub resolution_x: usize,
    pub resolution_y: usize,
    pub dt: f64,
    pub err_l2: f64,
    pub err_linf: f64,
    pub err_l2_tmax: f64,
    pub err_linf_tmax: f64,
    pub failed: bool,
}

/// Observed orders of one block: successive and least-squares fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub block: Block,
    pub successive_l2: Vec<f64>,
    pub successive_linf: Vec<f64>,
    pub fitted_l2: f64,
    pub fitted_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<StudyRow>,
    pub orders: Vec<OrderEstimate>,
}

/// Least-squares slope of `ln e` against `ln(1 / h)`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (-h.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    -num / den
}

fn successive(h: &[f64], e: &[f64]) -> Vec<f64> {
    (1..h.len())
        .map(|i| (e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln())
        .collect()
}

impl ConvergenceTable {
    pub fn rows_of(&self, block: Block) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.block == block).collect()
    }

    pub fn order(&self, block: Block) -> Option<&OrderEstimate> {
        self.orders.iter().find(|o| o.block == block)
    }

    /// CSV with one row per run and order estimates as `#` footer lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("resolution_x,resolution_y,dt,err_l2,err_linf\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.16e},{:.16e},{:.16e}",
                r.resolution_x, r.resolution_y, r.dt, r.err_l2, r.err_linf
            );
        }
        for o in &self.orders {
            let b = o.block.name();
            let _ = writeln!(s, "# order_{b}_l2,{:.6}", o.fitted_l2);
            let _ = writeln!(s, "# order_{b}_linf,{:.6}", o.fitted_linf);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>5} {:>10} {:>12} {:>12} {:>12} {:>12}",
            "block", "N", "M", "dt", "err_l2", "err_linf", "tmax_l2", "tmax_linf"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>5} {:>10.3e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}{}",
                r.block.name(),
                r.resolution_x,
                r.resolution_y,
                r.dt,
                r.err_l2,
                r.err_linf,
                r.err_l2_tmax,
                r.err_linf_tmax,
                if r.failed { "  FAILED" } else { "" }
            );
        }
        for o in &self.orders {
            let _ = writeln!(
                s,
                "order {}: fitted l2 {:.3} linf {:.3}; successive l2 {:?}",
                o.block.name(),
                o.fitted_l2,
                o.fitted_linf,
                o.successive_l2.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
            );
        }
        s
    }
}

struct Job {
    block: Block,
    n: usize,
    m: usize,
    dt: f64,
}

/// Final state and states at the sample times of one forced run.
fn forced_run(
    case: &ManufacturedCase,
    p: &ModelParams,
    grid: Grid,
    dt: f64,
    plan: &StudyPlan,
) -> Result<Vec<(f64, SpectralField)>> {
    let interval = plan.t_end / plan.samples as f64;
    let per_sample = (interval / dt).round().max(1.0);
    if (per_sample * dt - interval).abs() > 1e-9 * interval {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} does not divide the sampling interval {interval}"
        )));
    }
    let cfg = StepperConfig {
        dt,
        t_end: plan.t_end,
        log_every: per_sample as usize,
        ..Default::default()
    };
    let u0 = case.exact_field(grid, 0.0);
    let mut states = Vec::new();
    run_simulation(&u0, p, &cfg, &mut |s, _| states.push((s.t, s.u.clone())))
        .map_err(|f| f.error)?;
    Ok(states)
}

/// Runs the manufactured case through the spectral solver and tabulates
/// errors per block. Rows that blow up are marked failed.
pub fn convergence_study(
    case: &ManufacturedCase,
    p: &ModelParams,
    plan: &StudyPlan,
) -> Result<ConvergenceTable> {
    case.validate()?;
    plan.validate()?;
    let p = p.with_forcing(Forcing::Manufactured(*case));
    p.validate()?;
    let mut jobs: Vec<Job> = Vec::new();
    for &n in &plan.resolutions_x {
        jobs.push(Job { block: Block::X, n, m: plan.x_block_m, dt: plan.dt_space });
    }
    for &m in &plan.resolutions_y {
        jobs.push(Job { block: Block::Y, n: plan.y_block_n, m, dt: plan.dt_space });
    }
    for &dt in &plan.dts {
        jobs.push(Job { block: Block::T, n: plan.t_block_n, m: plan.t_block_m, dt });
    }
    let dt_min = plan.dts.iter().cloned().fold(f64::INFINITY, f64::min);
    // references: (grid, dt) of the x and t blocks
    let x_ref_grid = Grid::new(plan.reference_n, plan.x_block_m, plan.oversample)?;
    let t_ref_grid = Grid::new(plan.t_block_n, plan.t_block_m, plan.oversample)?;
    let refs: Vec<Result<Vec<(f64, SpectralField)>>> = [
        (x_ref_grid, plan.dt_space),
        (t_ref_grid, dt_min / 8.0),
    ]
    .par_iter()
    .map(|&(g, dt)| forced_run(case, &p, g, dt, plan))
    .collect();
    let mut refs = refs.into_iter();
    let x_ref = refs.next().expect("two references")?;
    let t_ref = refs.next().expect("two references")?;

    let rows: Vec<StudyRow> = jobs
        .par_iter()
        .map(|job| -> Result<StudyRow> {
            let grid = Grid::new(job.n, job.m, plan.oversample)?;
            let mut row = StudyRow {
                block: job.block,
                resolution_x: job.n,
                resolution_y: job.m,
                dt: job.dt,
                err_l2: f64::NAN,
                err_linf: f64::NAN,
                err_l2_tmax: f64::NAN,
                err_linf_tmax: f64::NAN,
                failed: true,
            };
            let states = match forced_run(case, &p, grid, job.dt, plan) {
                Ok(s) => s,
                Err(Error::BlowUp { .. }) => return Ok(row),
                Err(e) => return Err(e),
            };
            let diag = Diagnostics::new(grid, p);
            let mut errs = Vec::with_capacity(states.len());
            for (i, (t, u)) in states.iter().enumerate() {
                let target = match job.block {
                    Block::Y => case.exact_field(grid, *t),
                    Block::X => reference_at(&x_ref, i, *t, grid)?,
                    Block::T => reference_at(&t_ref, i, *t, grid)?,
                };
                let e = u.sub(&target);
                errs.push((e.l2_norm(), diag.sup_norm(&e)));
            }
            let last = *errs.last().expect("at least the initial sample");
            row.err_l2 = last.0;
            row.err_linf = last.1;
            row.err_l2_tmax = errs.iter().map(|e| e.0).fold(0.0, f64::max);
            row.err_linf_tmax = errs.iter().map(|e| e.1).fold(0.0, f64::max);
            row.failed = false;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut orders = Vec::new();
    for block in [Block::X, Block::Y, Block::T] {
        let rs: Vec<&StudyRow> = rows.iter().filter(|r| r.block == block && !r.failed).collect();
        let h: Vec<f64> = rs
            .iter()
            .map(|r| match block {
                Block::X => 1.0 / r.resolution_x as f64,
                // the forcing projection error scales with the collocation spacing
                Block::Y => Grid::new(r.resolution_x, r.resolution_y, plan.oversample)
                    .map(|g| g.dy())
                    .unwrap_or(f64::NAN),
                Block::T => r.dt,
            })
            .collect();
        let e2: Vec<f64> = rs.iter().map(|r| r.err_l2).collect();
        let ei: Vec<f64> = rs.iter().map(|r| r.err_linf).collect();
        orders.push(OrderEstimate {
            block,
            successive_l2: successive(&h, &e2),
            successive_linf: successive(&h, &ei),
            fitted_l2: fitted_order(&h, &e2),
            fitted_linf: fitted_order(&h, &ei),
        });
    }
    Ok(ConvergenceTable { rows, orders })
}

/// Temporal order must lie within this distance of 2.
pub const TEMPORAL_ORDER_BAND: f64 = 0.1;
/// Largest x-block error once `n0 < N / 2`.
pub const X_ERROR_LIMIT: f64 = 1e-10;
/// Smallest acceptable fitted y order.
pub const Y_ORDER_MIN: f64 = 1.9;

/// Pass/fail summary of a convergence table for `case`.
pub fn assess(table: &ConvergenceTable, case: &ManufacturedCase) -> VerificationReport {
    let mut rep = VerificationReport::new("mms");
    if let Some(failed) = table.rows.iter().find(|r| r.failed) {
        rep.push(
            Clause::bound("runs_completed", 1.0, 0.0)
                .with_detail(&format!("{} block run blew up", failed.block.name())),
        );
    }
    let xs: Vec<&StudyRow> = table
        .rows_of(Block::X)
        .into_iter()
        .filter(|r| 2 * case.n0 < r.resolution_x && !r.failed)
        .collect();
    let worst = xs.iter().map(|r| r.err_linf).fold(0.0, f64::max);
    rep.push(Clause::bound("x_spectral", worst, X_ERROR_LIMIT).with_detail("max error over N > 2 n0"));
    match table.order(Block::Y) {
        Some(o) => rep.push(
            Clause::bound("y_order", Y_ORDER_MIN - o.fitted_l2, 0.0)
                .with_detail(&format!("fitted order {:.4}, need >= {Y_ORDER_MIN}", o.fitted_l2)),
        ),
        None => rep.push(Clause::skipped("y_order", "no y block")),
    }
    match table.order(Block::T) {
        Some(o) => rep.push(
            Clause::bound("t_order", (o.fitted_l2 - 2.0).abs(), TEMPORAL_ORDER_BAND)
                .with_detail(&format!("fitted order {:.4}", o.fitted_l2)),
        ),
        None => rep.push(Clause::skipped("t_order", "no time block")),
    }
    rep
}

/// Reference state at sample `i`, which must be at time `t`, moved onto `grid`.
fn reference_at(
    states: &[(f64, SpectralField)],
    i: usize,
    t: f64,
    grid: Grid,
) -> Result<SpectralField> {
    match states.get(i) {
        Some((tr, u)) if (tr - t).abs() <= 1e-9 * t.max(1.0) => Ok(u.resample(grid)),
        _ => Err(Error::InvalidInput(format!(
            "reference run has no sample at t = {t}"
        ))),
    }
}
