//! Time stepping: the diagonal part `mu Lap + alpha` is integrated exactly,
//! everything else explicitly at second order.

use crate::diagnostics::{Diagnostics, DiagnosticsRecord, Snapshot, TrajectoryLog};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::operators::{ModelParams, OperatorWorkspace};
use crate::transform::HERMITIAN_LIMIT;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Norm beyond which a run is declared blown up.
pub const BLOWUP_NORM: f64 = 1e12;
/// Tolerance on the domain average when a run requires mean-zero data.
pub const MEAN_ZERO_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrating-factor Heun.
    IfRk2,
    /// Exponential time differencing, Cox-Matthews second order. Keeps
    /// second order when the explicit terms force stiff modes.
    #[default]
    EtdRk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub adapt: bool,
    pub log_every: usize,
    pub snapshot_every: Option<usize>,
    pub scheme: Scheme,
    /// Zero the explicit tendency outside `|n| <= n_cut, m <= m_cut`.
    pub explicit_cut: Option<(usize, usize)>,
    pub require_mean_zero: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            cfl_safety: 0.5,
            adapt: false,
            log_every: 10,
            snapshot_every: None,
            scheme: Scheme::default(),
            explicit_cut: None,
            require_mean_zero: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("dt > 0 violated (dt = {})", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "t_end >= 0 violated (t_end = {})",
                self.t_end
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cfl_safety in (0, 1] violated (cfl_safety = {})",
                self.cfl_safety
            )));
        }
        if self.log_every == 0 {
            return Err(Error::InvalidInput("log_every >= 1 violated".into()));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::InvalidInput("snapshot_every >= 1 violated".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub u: SpectralField,
}

impl SolverState {
    pub fn new(u: SpectralField) -> Self {
        Self { t: 0.0, step: 0, u }
    }
}

/// Reusable stepper holding operator scratch space and the exponential
/// factors for the last step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    ws: OperatorWorkspace,
    params: ModelParams,
    scheme: Scheme,
    cut: Option<(usize, usize)>,
    symbol: Vec<f64>,
    cached_h: f64,
    expo: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1e-2 {
        let (z2, z3, z4, z5) = (z * z, z * z * z, z.powi(4), z.powi(5));
        let p1 = 1.0 + z / 2.0 + z2 / 6.0 + z3 / 24.0 + z4 / 120.0 + z5 / 720.0;
        let p2 = 0.5 + z / 6.0 + z2 / 24.0 + z3 / 120.0 + z4 / 720.0 + z5 / 5040.0;
        (p1, p2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

impl Stepper {
    pub fn new(grid: Grid, params: ModelParams, cfg: &StepperConfig) -> Self {
        let symbol: Vec<f64> = grid.modes().map(|(n, m)| params.linear_symbol(n, m)).collect();
        let len = symbol.len();
        Self {
            ws: OperatorWorkspace::new(grid),
            params,
            scheme: cfg.scheme,
            cut: cfg.explicit_cut,
            symbol,
            cached_h: f64::NAN,
            expo: vec![0.0; len],
            phi1: vec![0.0; len],
            phi2: vec![0.0; len],
        }
    }

    fn prepare(&mut self, h: f64) {
        if self.cached_h == h {
            return;
        }
        for (i, &l) in self.symbol.iter().enumerate() {
            let z = l * h;
            self.expo[i] = z.exp();
            let (p1, p2) = phi12(z);
            self.phi1[i] = p1;
            self.phi2[i] = p2;
        }
        self.cached_h = h;
    }

    fn tendency(&mut self, u: &SpectralField, t: f64) -> SpectralField {
        let mut g = self.ws.explicit_tendency(u, &self.params, t);
        if let Some((nc, mc)) = self.cut {
            let grid = *g.grid();
            for (c, (n, m)) in g.coef_mut().iter_mut().zip(grid.modes()) {
                if n.unsigned_abs() as usize > nc || m > mc {
                    *c = num_complex::Complex64::new(0.0, 0.0);
                }
            }
        }
        g
    }

    /// Advances `state` by `h`. On error the state is left untouched.
    pub fn step(&mut self, state: &mut SolverState, h: f64) -> Result<()> {
        self.prepare(h);
        let t = state.t;
        let u = &state.u;
        let k1 = self.tendency(u, t);
        let mut next = SpectralField::zeros(*u.grid());
        match self.scheme {
            Scheme::IfRk2 => {
                let mut stage = u.clone();
                for (i, c) in stage.coef_mut().iter_mut().enumerate() {
                    *c = (*c + k1.coef()[i] * h) * self.expo[i];
                }
                let k2 = self.tendency(&stage, t + h);
                for (i, c) in next.coef_mut().iter_mut().enumerate() {
                    *c = (u.coef()[i] + k1.coef()[i] * (0.5 * h)) * self.expo[i]
                        + k2.coef()[i] * (0.5 * h);
                }
            }
            Scheme::EtdRk2 => {
                let mut stage = u.clone();
                for (i, c) in stage.coef_mut().iter_mut().enumerate() {
                    *c = *c * self.expo[i] + k1.coef()[i] * (h * self.phi1[i]);
                }
                let k2 = self.tendency(&stage, t + h);
                for (i, c) in next.coef_mut().iter_mut().enumerate() {
                    *c = stage.coef()[i] + (k2.coef()[i] - k1.coef()[i]) * (h * self.phi2[i]);
                }
            }
        }
        next.enforce_hermitian();
        let norm = next.l2_norm();
        if !next.is_finite() || !(norm <= BLOWUP_NORM) {
            return Err(Error::BlowUp {
                t: t + h,
                last_valid_t: t,
                reason: if next.is_finite() {
                    format!("L2 norm {norm:.3e} exceeds {BLOWUP_NORM:.0e}")
                } else {
                    "non-finite coefficients".into()
                },
            });
        }
        state.u = next;
        state.t = t + h;
        state.step += 1;
        Ok(())
    }
}

/// One step of size `cfg.dt` with a throwaway [`Stepper`].
pub fn step_imex(state: &SolverState, p: &ModelParams, cfg: &StepperConfig) -> Result<SolverState> {
    cfg.validate()?;
    p.validate()?;
    state.u.check_hermitian(HERMITIAN_LIMIT)?;
    let mut s = Stepper::new(*state.u.grid(), *p, cfg);
    let mut out = state.clone();
    s.step(&mut out, cfg.dt)?;
    Ok(out)
}

/// Advective step limit: `cfl_safety * min(dx / |u|, dy / |Tu|, 1 / (|beta| |T|))`
/// with sup norms bounded by coefficient sums and `dx`, `dy` the resolved
/// wavelengths. Never larger than `cfg.dt`.
pub fn stable_dt(u: &SpectralField, p: &ModelParams, cfg: &StepperConfig) -> f64 {
    let g = *u.grid();
    let (nn, mm) = (g.n_modes_x() as f64, g.n_modes_y() as f64);
    let dx = 2.0 * PI / (2.0 * nn + 1.0);
    let dy = 1.0 / (mm + 1.0);
    let mut sup_u = 0.0;
    let mut sup_tu = 0.0;
    for ((n, m), c) in g.modes().zip(u.coef()) {
        let a = c.norm();
        sup_u += a;
        sup_tu += 2.0 * n.unsigned_abs() as f64 * a / (m as f64 * PI);
    }
    let mut dt = cfg.dt;
    if p.nonlinear {
        if sup_u > 0.0 {
            dt = dt.min(cfg.cfl_safety * dx / sup_u);
        }
        if sup_tu > 0.0 {
            dt = dt.min(cfg.cfl_safety * dy / sup_tu);
        }
    }
    if p.beta != 0.0 {
        dt = dt.min(cfg.cfl_safety * PI / (2.0 * nn * p.beta.abs()));
    }
    dt
}

/// A failed run together with everything logged before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: Error,
    pub log: TrajectoryLog,
}

/// Integrates from `u0` at `t = 0` to `cfg.t_end`, logging diagnostics at
/// step 0, every `log_every` steps and at the end, and calling `hook` on
/// every logged state.
pub fn run_simulation(
    u0: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
    hook: &mut dyn FnMut(&SolverState, &DiagnosticsRecord),
) -> std::result::Result<TrajectoryLog, RunFailure> {
    let mut log = TrajectoryLog::new(*p);
    let fail = |error: Error, mut log: TrajectoryLog| {
        log.finalize_residuals();
        RunFailure { error, log }
    };
    if let Err(e) = cfg
        .validate()
        .and_then(|_| p.validate())
        .and_then(|_| u0.check_hermitian(HERMITIAN_LIMIT))
    {
        return Err(fail(e, log));
    }
    if cfg.require_mean_zero {
        let m = crate::diagnostics::mean(u0);
        if m.abs() > MEAN_ZERO_LIMIT {
            return Err(fail(
                Error::InvalidInput(format!("initial data must have zero mean (mean = {m:.3e})")),
                log,
            ));
        }
    }
    let grid = *u0.grid();
    let mut diag = Diagnostics::new(grid, *p);
    let mut stepper = Stepper::new(grid, *p, cfg);
    let mut state = SolverState::new(u0.clone());
    let mut emit = |state: &SolverState, log: &mut TrajectoryLog, diag: &mut Diagnostics| {
        let rec = diag.record(state.t, &state.u);
        hook(state, &rec);
        log.records.push(rec);
    };
    emit(&state, &mut log, &mut diag);
    if cfg.snapshot_every.is_some() {
        log.snapshots.push(Snapshot { step: 0, t: 0.0, u: state.u.clone() });
    }
    let t_end = cfg.t_end;
    let min_dt = 1e-12 * t_end.max(1.0);
    while t_end - state.t > 1e-12 * t_end.max(1.0) {
        let mut h = if cfg.adapt { stable_dt(&state.u, p, cfg) } else { cfg.dt };
        if h < min_dt {
            let t = state.t;
            return Err(fail(
                Error::BlowUp {
                    t,
                    last_valid_t: t,
                    reason: format!("step size collapsed to {h:.3e}"),
                },
                log,
            ));
        }
        h = h.min(t_end - state.t);
        if let Err(e) = stepper.step(&mut state, h) {
            return Err(fail(e, log));
        }
        if !cfg.adapt && h == cfg.dt {
            // keep fixed-step times on the lattice k * dt
            state.t = (state.step as f64 * cfg.dt).min(t_end);
        }
        let done = t_end - state.t <= 1e-12 * t_end.max(1.0);
        if state.step % cfg.log_every == 0 || done {
            emit(&state, &mut log, &mut diag);
        }
        if let Some(k) = cfg.snapshot_every {
            if state.step % k == 0 || done {
                log.snapshots.push(Snapshot {
                    step: state.step,
                    t: state.t,
                    u: state.u.clone(),
                });
            }
        }
    }
    log.finalize_residuals();
    Ok(log)
}

/// Final state of a run without logging overhead beyond the endpoints.
pub fn integrate(
    u0: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
) -> Result<SpectralField> {
    cfg.validate()?;
    p.validate()?;
    u0.check_hermitian(HERMITIAN_LIMIT)?;
    let mut stepper = Stepper::new(*u0.grid(), *p, cfg);
    let mut state = SolverState::new(u0.clone());
    let t_end = cfg.t_end;
    let n = (t_end / cfg.dt).round() as usize;
    if !cfg.adapt && ((n as f64) * cfg.dt - t_end).abs() <= 1e-9 * t_end.max(1.0) {
        for _ in 0..n {
            stepper.step(&mut state, cfg.dt)?;
        }
        return Ok(state.u);
    }
    while t_end - state.t > 1e-12 * t_end.max(1.0) {
        let h = if cfg.adapt { stable_dt(&state.u, p, cfg) } else { cfg.dt };
        let h = h.min(t_end - state.t);
        stepper.step(&mut state, h)?;
    }
    Ok(state.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Forcing;

    fn mode(g: Grid, n: usize, m: usize, a: f64) -> SpectralField {
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(n, m, a, 0.0);
        u
    }

    #[test]
    fn linear_mode_decays_exactly() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(0.8, -0.3, 0.0).unwrap().linear_only();
        for scheme in [Scheme::IfRk2, Scheme::EtdRk2] {
            let cfg = StepperConfig { dt: 0.01, t_end: 1.0, scheme, ..Default::default() };
            let u0 = mode(g, 2, 1, 1.0);
            let u = integrate(&u0, &p, &cfg).unwrap();
            let rate = -0.3 - 0.8 * (4.0 + PI * PI);
            let expect = u0.scaled(rate.exp());
            assert!(u.max_abs_diff(&expect) < 1e-14 * 100.0, "{scheme:?}");
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.5).unwrap();
        let cfg = StepperConfig { dt: 0.01, t_end: 0.2, ..Default::default() };
        let log = run_simulation(&SpectralField::zeros(g), &p, &cfg, &mut |_, _| {}).unwrap();
        assert!(log.records.iter().all(|r| r.l2 == 0.0 && r.energy_residual == 0.0));
        assert_eq!(log.records.len(), 3);
        assert!((log.records[2].t - 0.2).abs() < 1e-15);
    }

    #[test]
    fn blowup_is_reported_with_partial_log() {
        let g = Grid::new(8, 8, 1).unwrap();
        let p = ModelParams::new(1e-4, 0.0, 0.0).unwrap();
        let mut u0 = mode(g, 1, 1, 100.0);
        u0.add_sine_mode(3, 2, 60.0, 0.4);
        let cfg = StepperConfig { dt: 0.05, t_end: 50.0, log_every: 1, ..Default::default() };
        let err = run_simulation(&u0, &p, &cfg, &mut |_, _| {}).unwrap_err();
        match err.error {
            Error::BlowUp { last_valid_t, .. } => {
                let last = err.log.records.last().unwrap().t;
                assert!((last - last_valid_t).abs() < 1e-12);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn stable_dt_halves_with_doubled_amplitude() {
        let g = Grid::new(8, 8, 2).unwrap();
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let cfg = StepperConfig { dt: 1.0, ..Default::default() };
        let u = mode(g, 3, 2, 5.0);
        let a = stable_dt(&u, &p, &cfg);
        let b = stable_dt(&u.scaled(2.0), &p, &cfg);
        assert!(a < 1.0 && (a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config_and_nonzero_mean() {
        let g = Grid::new(2, 2, 1).unwrap();
        let p = ModelParams::new(1.0, 0.0, 0.0).unwrap();
        let bad = StepperConfig { dt: -1.0, ..Default::default() };
        assert!(run_simulation(&SpectralField::zeros(g), &p, &bad, &mut |_, _| {}).is_err());
        let cfg = StepperConfig { require_mean_zero: true, ..Default::default() };
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(0, 1, 1.0, PI / 2.0);
        let err = run_simulation(&u, &p, &cfg, &mut |_, _| {}).unwrap_err();
        assert!(err.to_string().contains("zero mean"));
    }

    #[test]
    fn manufactured_solution_is_tracked() {
        let g = Grid::new(8, 16, 2).unwrap();
        let case = crate::mms::ManufacturedCase::new(0.3, 1.0, 1, 1);
        let p = ModelParams::new(0.5, -0.1, 0.2)
            .unwrap()
            .with_forcing(Forcing::Manufactured(case));
        let cfg = StepperConfig { dt: 1e-3, t_end: 0.5, ..Default::default() };
        let mut u0 = SpectralField::zeros(g);
        u0.add_sine_mode(1, 1, 0.3, 0.0);
        let u = integrate(&u0, &p, &cfg).unwrap();
        let err = (0..20)
            .map(|i| {
                let (x, y) = (0.3 * i as f64, 0.05 * i as f64 + 0.01);
                (u.eval_at(x, y) - case.exact(x, y, 0.5)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }
}
