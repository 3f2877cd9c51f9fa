//! Runtime checks of the model's a-priori estimates on computed trajectories
//! and on random fields. Failed inequalities are report entries, never errors.

use crate::diagnostics::{h1_seminorm, tu_norm, wiener_norm, Diagnostics, TrajectoryLog};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::{SolverState, Stepper, StepperConfig};
use crate::operators::ModelParams;
use crate::report::{Clause, VerificationReport};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerances of [`check_theorem1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Tol {
    /// Allowed increase of `max u`, `||u||_inf` (and decrease of `min u`) per unit time.
    pub monotone: f64,
    /// Relative slack on `||u(t)||_inf <= ||u0||_inf`.
    pub linf: f64,
    /// `|mean| <= mean * ||u0||_L2`.
    pub mean: f64,
    /// Relative slack of the Gronwall bound.
    pub gronwall: f64,
    /// `energy_residual <= energy * ||u0||^2`.
    pub energy: f64,
}

impl Default for Theorem1Tol {
    fn default() -> Self {
        Self {
            monotone: 1e-6,
            linf: 1e-6,
            mean: 1e-8,
            gronwall: 1e-3,
            energy: 1e-4,
        }
    }
}

impl Theorem1Tol {
    pub fn uniform(tol: f64) -> Self {
        Self {
            monotone: tol,
            linf: tol,
            mean: tol,
            gronwall: tol,
            energy: tol,
        }
    }
}

/// Tolerances of [`check_theorem2`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Tol {
    /// Allowed increase of `||u||_A0` per unit time.
    pub monotone: f64,
    /// Relative slack of the integral bound on `||u||_A2`.
    pub integral: f64,
    /// Absolute bound on the differential-inequality residual.
    pub residual: f64,
}

impl Default for Theorem2Tol {
    fn default() -> Self {
        Self {
            monotone: 1e-6,
            integral: 1e-3,
            residual: 1e-4,
        }
    }
}

impl Theorem2Tol {
    pub fn uniform(tol: f64) -> Self {
        Self {
            monotone: tol,
            integral: tol,
            residual: tol,
        }
    }
}

/// Worst violation of `f(k + 1) - f(k) <= slack * (t_{k+1} - t_k)`:
/// `(observed increase, allowed increase, time)` at the worst interval.
fn worst_increase(log: &TrajectoryLog, slack: f64, f: impl Fn(usize) -> f64) -> (f64, f64, Option<f64>) {
    let r = &log.records;
    let mut worst = (0.0, 0.0, None);
    let mut worst_excess = f64::NEG_INFINITY;
    for k in 0..r.len().saturating_sub(1) {
        let inc = f(k + 1) - f(k);
        let allowed = slack * (r[k + 1].t - r[k].t);
        if inc - allowed > worst_excess {
            worst_excess = inc - allowed;
            worst = (inc, allowed, Some(r[k + 1].t));
        }
    }
    worst
}

fn trapezoid(ts: &[f64], vs: &[f64]) -> f64 {
    ts.windows(2)
        .zip(vs.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn argmax(vs: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    vs.enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
}

/// Maximum principle, mean conservation, energy identity and Gronwall bound.
pub fn check_theorem1(log: &TrajectoryLog, tol: &Theorem1Tol) -> VerificationReport {
    let mut rep = VerificationReport::new("theorem1");
    let r = &log.records;
    if r.is_empty() {
        rep.push(Clause::skipped("log", "empty trajectory log"));
        return rep;
    }
    let p = &log.params;
    let ts: Vec<f64> = r.iter().map(|x| x.t).collect();

    let (inc, allowed, t) = worst_increase(log, tol.monotone, |k| r[k].max_u.value);
    rep.push(Clause::bound("max_nonincreasing", inc, allowed).at_time(t));
    let (inc, allowed, t) = worst_increase(log, tol.monotone, |k| -r[k].min_u.value);
    rep.push(Clause::bound("min_nondecreasing", inc, allowed).at_time(t));
    let (inc, allowed, t) = worst_increase(log, tol.monotone, |k| r[k].linf);
    rep.push(Clause::bound("linf_stepwise", inc, allowed).at_time(t));

    let linf0 = r[0].linf;
    let (k, v) = argmax(r.iter().map(|x| x.linf)).expect("nonempty");
    rep.push(Clause::bound("linf_bounded", v, linf0 * (1.0 + tol.linf)).at_time(Some(r[k].t)));

    let l20 = r[0].l2;
    let (k, v) = argmax(r.iter().map(|x| x.mean.abs())).expect("nonempty");
    rep.push(Clause::bound("mean_zero", v, tol.mean * l20).at_time(Some(r[k].t)));

    let t_end = *ts.last().expect("nonempty");
    let sup2 = r.iter().map(|x| x.l2 * x.l2).fold(0.0, f64::max);
    let grad2: Vec<f64> = r.iter().map(|x| x.h1_dot * x.h1_dot).collect();
    let dissipated = trapezoid(&ts, &grad2);
    let lhs = sup2 + dissipated;
    let e0 = l20 * l20;
    rep.push(
        Clause::bound("gronwall", lhs, e0 * (p.beta * p.beta * t_end).exp() * (1.0 + tol.gronwall))
            .with_detail("sup ||u||^2 + int ||grad u||^2 against ||u0||^2 exp(beta^2 T)"),
    );
    rep.push(
        Clause::bound("gronwall_exp_t", lhs, e0 * t_end.exp() * (1.0 + tol.gronwall))
            .with_detail("same left side against ||u0||^2 exp(T)"),
    );
    // ||u(t)||^2 + mu int_0^t ||grad u||^2 <= ||u0||^2 exp(beta^2 t / mu) at every sample
    let mut running = 0.0;
    let mut worst = (0.0f64, 0usize);
    for k in 0..r.len() {
        if k > 0 {
            running += 0.5 * (ts[k] - ts[k - 1]) * (grad2[k] + grad2[k - 1]);
        }
        let ratio = (r[k].l2 * r[k].l2 + p.mu * running) * (-p.beta * p.beta * ts[k] / p.mu).exp();
        if ratio > worst.0 {
            worst = (ratio, k);
        }
    }
    rep.push(
        Clause::bound("gronwall_running", worst.0, e0 * (1.0 + tol.gronwall))
            .at_time(Some(ts[worst.1]))
            .with_detail("(||u(t)||^2 + mu int_0^t ||grad u||^2) exp(-beta^2 t / mu) against ||u0||^2"),
    );

    let (k, v) = argmax(r.iter().map(|x| x.energy_residual)).expect("nonempty");
    rep.push(Clause::bound("energy_identity", v, tol.energy * e0).at_time(Some(r[k].t)));
    rep
}

/// Wiener-norm decay and integrability under `2 ||u0||_A0 < mu`.
pub fn check_theorem2(log: &TrajectoryLog, tol: &Theorem2Tol) -> VerificationReport {
    let mut rep = VerificationReport::new("theorem2");
    let r = &log.records;
    if r.is_empty() {
        rep.push(Clause::skipped("log", "empty trajectory log"));
        return rep;
    }
    let mu = log.params.mu;
    let w0 = r[0].wiener0;
    let holds = 2.0 * w0 < mu;
    let mut pre = Clause::bound("precondition", 2.0 * w0, mu);
    if holds {
        pre.detail = format!("2 ||u0||_A0 = {:.6e} < mu = {mu}: true", 2.0 * w0);
        rep.push(pre);
        let (inc, allowed, t) = worst_increase(log, tol.monotone, |k| r[k].wiener0);
        rep.push(Clause::bound("wiener0_nonincreasing", inc, allowed).at_time(t));
        let ts: Vec<f64> = r.iter().map(|x| x.t).collect();
        let w2: Vec<f64> = r.iter().map(|x| x.wiener2).collect();
        let integral = trapezoid(&ts, &w2);
        let bound = w0 / (mu - 2.0 * w0) * (1.0 + tol.integral);
        rep.push(Clause::bound("wiener2_integral", integral, bound));
    } else {
        rep.push(Clause::skipped(
            "precondition",
            &format!("2 ||u0||_A0 = {:.6e} < mu = {mu}: false", 2.0 * w0),
        ));
        rep.push(Clause::skipped("wiener0_nonincreasing", "precondition false"));
        rep.push(Clause::skipped("wiener2_integral", "precondition false"));
    }
    let (k, v) = argmax(r.iter().map(|x| x.wiener_ineq_residual)).expect("nonempty");
    rep.push(Clause::bound("wiener_inequality", v, tol.residual).at_time(Some(r[k].t)));
    rep
}

/// Random real field with `|n| <= nb`, `m <= mb`, amplitudes decaying like
/// `(1 + n^2 + m^2)^(-decay/2)`, and zero domain average.
pub fn random_mean_zero_field(grid: Grid, rng: &mut ChaCha8Rng, nb: usize, mb: usize) -> SpectralField {
    let nb = nb.min(grid.n_modes_x());
    let mb = mb.min(grid.n_modes_y());
    let decay = rng.gen_range(0.0..3.0);
    let mut u = SpectralField::zeros(grid);
    for n in 0..=nb as i64 {
        for m in 1..=mb {
            let w = (1.0 + (n * n) as f64 + (m * m) as f64).powf(-0.5 * decay);
            let re = rng.gen_range(-1.0..1.0) * w;
            let im = if n == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) * w };
            u.set_hermitian(n, m, Complex64::new(re, im));
        }
    }
    let mean = crate::diagnostics::mean(&u);
    let c = u.get(0, 1);
    u.set(0, 1, c - Complex64::new(0.5 * PI * mean, 0.0));
    u
}

/// `(||u_x||_L4^2, ||u_y||_L4^2)` by trapezoid sums that are exact for the
/// fourth powers of these trigonometric polynomials.
pub fn l4_gradient_norms(u: &SpectralField) -> (f64, f64) {
    let g = u.grid();
    let (nn, mm) = (g.n_modes_x() as i64, g.n_modes_y());
    let px = 4 * nn as usize + 1;
    let ky = 2 * mm + 1;
    let width = (2 * nn + 1) as usize;
    let hy = 1.0 / ky as f64;
    // per (row, k): sum_m c sin(m pi y), sum_m c m pi cos(m pi y)
    let mut s = vec![Complex64::new(0.0, 0.0); width * (ky + 1)];
    let mut c = vec![Complex64::new(0.0, 0.0); width * (ky + 1)];
    for k in 0..=ky {
        let y = k as f64 * hy;
        for n in -nn..=nn {
            let r = (n + nn) as usize;
            let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for m in 1..=mm {
                let km = m as f64 * PI;
                let coef = u.get(n, m);
                a += coef * (km * y).sin();
                b += coef * (km * (km * y).cos());
            }
            s[r * (ky + 1) + k] = a;
            c[r * (ky + 1) + k] = b;
        }
    }
    let (mut ix, mut iy) = (0.0, 0.0);
    for j in 0..px {
        let x = 2.0 * PI * j as f64 / px as f64;
        for k in 0..=ky {
            let (mut ux, mut uy) = (0.0, 0.0);
            for n in -nn..=nn {
                let r = (n + nn) as usize;
                let e = Complex64::from_polar(1.0, n as f64 * x);
                ux += (e * Complex64::new(0.0, n as f64) * s[r * (ky + 1) + k]).re;
                uy += (e * c[r * (ky + 1) + k]).re;
            }
            let w = if k == 0 || k == ky { 0.5 } else { 1.0 };
            ix += w * ux.powi(4);
            iy += w * uy.powi(4);
        }
    }
    let area = 2.0 * PI / px as f64 * hy;
    ((ix * area).sqrt(), (iy * area).sqrt())
}

/// `(||u_xx||_L2, ||u_yy||_L2)` from the coefficients.
pub fn second_derivative_norms(u: &SpectralField) -> (f64, f64) {
    let g = *u.grid();
    let (mut a, mut b) = (0.0, 0.0);
    for ((n, m), c) in g.modes().zip(u.coef()) {
        let (n2, k2) = ((n * n) as f64, (m as f64 * PI).powi(2));
        a += n2 * n2 * c.norm_sqr();
        b += k2 * k2 * c.norm_sqr();
    }
    ((PI * a).sqrt(), (PI * b).sqrt())
}

/// Ratios of one field: Jensen, the two L4 interpolations and the A1 interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityRatios {
    /// `||Tu|| / ||grad u||`, bound 1
    pub jensen: f64,
    /// `||u_x||_L4^2 / (||u_xx|| ||u||_inf)`, bound 3
    pub interp_x: f64,
    /// `||u_y||_L4^2 / (||u_yy|| ||u||_inf)`, bound 3
    pub interp_y: f64,
    /// `||u||_A1^2 / (||u||_A0 ||u||_A2)`, bound 2
    pub wiener: f64,
}

pub const JENSEN_CONSTANT: f64 = 1.0;
pub const INTERPOLATION_CONSTANT: f64 = 3.0;
pub const WIENER_CONSTANT: f64 = 2.0;

/// All four ratios; `None` for the zero field.
pub fn inequality_ratios(u: &SpectralField, diag: &Diagnostics) -> Option<InequalityRatios> {
    let grad = h1_seminorm(u);
    if grad == 0.0 {
        return None;
    }
    let sup = diag.sup_norm(u);
    let (lx, ly) = l4_gradient_norms(u);
    let (uxx, uyy) = second_derivative_norms(u);
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    Some(InequalityRatios {
        jensen: tu_norm(u) / grad,
        interp_x: ratio(lx, uxx * sup),
        interp_y: ratio(ly, uyy * sup),
        wiener: wiener_norm(u, 1).powi(2) / (wiener_norm(u, 0) * wiener_norm(u, 2)),
    })
}

/// Grid and band of the random fields in the battery.
pub const BATTERY_GRID: (usize, usize) = (8, 8);
pub const BATTERY_BAND: (usize, usize) = (6, 6);

/// Evaluates every inequality on `trials` random mean-zero fields. Trial `i`
/// draws from stream `i` of the generator seeded with `seed`, so the result
/// does not depend on the thread count.
pub fn check_inequality_battery(trials: usize, seed: u64) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("battery needs trials >= 1".into()));
    }
    let grid = Grid::new(BATTERY_GRID.0, BATTERY_GRID.1, 2)?;
    let diag = Diagnostics::new(grid, ModelParams::new(1.0, 0.0, 0.0)?);
    let ratios: Vec<InequalityRatios> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            loop {
                let u = random_mean_zero_field(grid, &mut rng, BATTERY_BAND.0, BATTERY_BAND.1);
                if let Some(r) = inequality_ratios(&u, &diag) {
                    return r;
                }
            }
        })
        .collect();
    let mut rep = VerificationReport::new("inequality_battery");
    type Pick = fn(&InequalityRatios) -> f64;
    let families: [(&str, Pick, f64); 4] = [
        ("jensen", |r| r.jensen, JENSEN_CONSTANT),
        ("interpolation_x", |r| r.interp_x, INTERPOLATION_CONSTANT),
        ("interpolation_y", |r| r.interp_y, INTERPOLATION_CONSTANT),
        ("wiener_a1", |r| r.wiener, WIENER_CONSTANT),
    ];
    for (name, pick, constant) in families {
        let (k, worst) = argmax(ratios.iter().map(pick)).expect("trials >= 1");
        let violations = ratios.iter().filter(|r| pick(r) > constant).count();
        rep.push(
            Clause::bound(name, worst, constant)
                .with_seed(Some(k as u64))
                .with_detail(&format!(
                    "worst ratio {worst:.6} against constant {constant}; {violations} of {trials} violate"
                )),
        );
    }
    Ok(rep)
}

/// Outcome of running two nearby trajectories side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinRun {
    pub report: VerificationReport,
    /// `(t, ||U(t)||)` at every step, `U` the difference of the runs.
    pub history: Vec<(f64, f64)>,
    /// Fitted exponential rate of `||U||`.
    pub rate: f64,
}

impl TwinRun {
    pub fn final_norm(&self) -> f64 {
        self.history.last().map(|h| h.1).unwrap_or(0.0)
    }
}

/// Allowed ratio of `||U(t)||` to the fitted envelope `||U0|| e^{Kt}`.
pub const ENVELOPE_FACTOR: f64 = 2.0;
/// Largest admissible perturbation relative to `||u0||`.
pub const MAX_RELATIVE_PERTURBATION: f64 = 1e-3;

/// Runs `u0` and `u0 + perturbation` in lockstep with fixed steps, fits
/// `K` by least squares of `ln(||U(t)|| / ||U0||)` against `t` through the
/// origin, and checks `||U(t)|| <= 2 ||U0|| e^{Kt}`.
pub fn twin_run_stability(
    u0: &SpectralField,
    perturbation: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
) -> Result<TwinRun> {
    cfg.validate()?;
    let n0 = u0.l2_norm();
    let d0 = perturbation.l2_norm();
    if d0 > MAX_RELATIVE_PERTURBATION * n0 {
        return Err(Error::InvalidInput(format!(
            "perturbation norm {d0:.3e} exceeds {MAX_RELATIVE_PERTURBATION} * ||u0|| = {:.3e}",
            MAX_RELATIVE_PERTURBATION * n0
        )));
    }
    let mut rep = VerificationReport::new("twin_run");
    let mut a = SolverState::new(u0.clone());
    let mut b_u = u0.clone();
    b_u.axpy(1.0, perturbation);
    let mut b = SolverState::new(b_u);
    let mut stepper = Stepper::new(*u0.grid(), *p, cfg);
    let mut history = vec![(0.0, d0)];
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    for _ in 0..steps {
        let (ra, rb) = (stepper.step(&mut a, cfg.dt), stepper.step(&mut b, cfg.dt));
        if let Err(e) = ra.and(rb) {
            rep.push(Clause::skipped("envelope", &format!("inconclusive: {e}")));
            return Ok(TwinRun { report: rep, history, rate: f64::NAN });
        }
        history.push((a.t, b.u.sub(&a.u).l2_norm()));
    }
    if d0 == 0.0 {
        let worst = history.iter().map(|h| h.1).fold(0.0, f64::max);
        rep.push(Clause::bound("envelope", worst, 0.0).with_detail("zero perturbation"));
        return Ok(TwinRun { report: rep, history, rate: 0.0 });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, d) in &history[1..] {
        if d > 0.0 {
            num += t * (d / d0).ln();
            den += t * t;
        }
    }
    let rate = if den > 0.0 { num / den } else { 0.0 };
    let mut worst = (0.0f64, 0.0f64);
    for &(t, d) in &history {
        let ratio = d / (d0 * (rate * t).exp());
        if ratio > worst.0 {
            worst = (ratio, t);
        }
    }
    rep.push(
        Clause::bound("envelope", worst.0, ENVELOPE_FACTOR)
            .at_time(Some(worst.1))
            .with_detail(&format!("fitted K = {rate:.6}; ratio to ||U0|| e^(Kt)")),
    );
    Ok(TwinRun { report: rep, history, rate })
}

/// Twin runs with the perturbation and `factor` times it; the final
/// difference norms must scale by `factor` to within `rel_tol`.
pub fn perturbation_scaling(
    u0: &SpectralField,
    perturbation: &SpectralField,
    p: &ModelParams,
    cfg: &StepperConfig,
    factor: f64,
    rel_tol: f64,
) -> Result<VerificationReport> {
    let small = twin_run_stability(u0, perturbation, p, cfg)?;
    let large = twin_run_stability(u0, &perturbation.scaled(factor), p, cfg)?;
    let mut rep = VerificationReport::new("twin_run_scaling");
    let (a, b) = (small.final_norm(), large.final_norm());
    if a == 0.0 {
        rep.push(Clause::skipped("scaling", "zero final difference"));
        return Ok(rep);
    }
    let dev = (b / a / factor - 1.0).abs();
    rep.push(Clause::bound("scaling", dev, rel_tol).with_detail(&format!(
        "||U(T)|| = {a:.6e} and {b:.6e}, ratio {:.6} for factor {factor}",
        b / a
    )));
    rep.extend(small.report);
    rep.extend(large.report);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::run_simulation;

    #[test]
    fn zero_trajectory_passes_everything() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.5).unwrap();
        let cfg = StepperConfig { dt: 0.01, t_end: 0.1, log_every: 1, ..Default::default() };
        let log = run_simulation(&SpectralField::zeros(g), &p, &cfg, &mut |_, _| {}).unwrap();
        let r1 = check_theorem1(&log, &Theorem1Tol::default());
        assert!(r1.passed(), "{}", r1.to_text());
        let r2 = check_theorem2(&log, &Theorem2Tol::default());
        assert!(r2.passed(), "{}", r2.to_text());
    }

    #[test]
    fn inflated_linf_is_caught_at_its_time() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.0).unwrap();
        let mut u0 = SpectralField::zeros(g);
        u0.add_sine_mode(1, 1, 0.05, 0.0);
        let cfg = StepperConfig { dt: 0.01, t_end: 0.1, log_every: 1, ..Default::default() };
        let mut log = run_simulation(&u0, &p, &cfg, &mut |_, _| {}).unwrap();
        log.records[4].linf = 1.0;
        let rep = check_theorem1(&log, &Theorem1Tol::default());
        let c = rep.clause("linf_bounded").unwrap();
        assert!(!c.passed());
        assert!((c.worst_time.unwrap() - log.records[4].t).abs() < 1e-15);
    }

    #[test]
    fn wiener_precondition_gates_clauses() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.0).unwrap();
        let mut u0 = SpectralField::zeros(g);
        u0.add_sine_mode(1, 1, 5.0, 0.0);
        let cfg = StepperConfig { dt: 1e-3, t_end: 0.01, log_every: 1, ..Default::default() };
        let log = run_simulation(&u0, &p, &cfg, &mut |_, _| {}).unwrap();
        let rep = check_theorem2(&log, &Theorem2Tol::default());
        use crate::report::ClauseStatus::Skipped;
        assert_eq!(rep.clause("precondition").unwrap().status, Skipped);
        assert_eq!(rep.clause("wiener2_integral").unwrap().status, Skipped);
    }

    #[test]
    fn single_mode_ratios() {
        let g = Grid::new(4, 4, 2).unwrap();
        let mut u = SpectralField::zeros(g);
        u.add_sine_mode(1, 1, 1.0, 0.0);
        let diag = Diagnostics::new(g, ModelParams::new(1.0, 0.0, 0.0).unwrap());
        let r = inequality_ratios(&u, &diag).unwrap();
        // Tu = cos x (1 - cos pi y) / pi: ||Tu||^2 = pi (3 / 2) / pi^2
        let tu2 = 1.5 / PI;
        let grad2 = PI * 0.5 * (1.0 + PI * PI);
        assert!((r.jensen - (tu2 / grad2).sqrt()).abs() < 1e-14);
        assert!(r.jensen < 1.0);
        // ||u_x||_L4^4 = int cos^4 x sin^4(pi y) = (3 pi / 4)(3 / 8)
        let lx = ((3.0 * PI / 4.0) * 0.375f64).sqrt();
        let uxx = (PI / 2.0).sqrt();
        assert!((r.interp_x - lx / uxx).abs() < 1e-10);
        assert!((r.wiener - 1.0).abs() < 1e-14);
        assert!(inequality_ratios(&SpectralField::zeros(g), &diag).is_none());
    }

    #[test]
    fn random_fields_have_zero_mean() {
        let g = Grid::new(6, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = random_mean_zero_field(g, &mut rng, 6, 6);
            assert!(crate::diagnostics::mean(&u).abs() < 1e-15);
            assert!(u.hermitian_defect() == 0.0);
        }
    }

    #[test]
    fn battery_is_reproducible() {
        let a = check_inequality_battery(12, 3).unwrap();
        let b = check_inequality_battery(12, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{}", a.to_text());
        assert!(check_inequality_battery(0, 3).is_err());
    }

    #[test]
    fn zero_perturbation_gives_zero_difference() {
        let g = Grid::new(4, 4, 2).unwrap();
        let p = ModelParams::new(1.0, -0.1, 0.5).unwrap();
        let mut u0 = SpectralField::zeros(g);
        u0.add_sine_mode(1, 1, 0.05, 0.3);
        let cfg = StepperConfig { dt: 1e-3, t_end: 0.05, ..Default::default() };
        let tw = twin_run_stability(&u0, &SpectralField::zeros(g), &p, &cfg).unwrap();
        assert_eq!(tw.final_norm(), 0.0);
        assert!(tw.report.passed());
        let big = u0.scaled(0.5);
        assert!(twin_run_stability(&u0, &big, &p, &cfg).is_err());
    }
}
