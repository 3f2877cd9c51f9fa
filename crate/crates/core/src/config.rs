//! TOML scenario configuration.
//!
//! Every table rejects unknown keys. Only `params.mu` and one `initial`
//! source are required; everything else falls back to the defaults listed by
//! [`reference_page`].

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::{Scheme, StepperConfig};
use crate::mms::ManufacturedCase;
use crate::operators::{Forcing, ModelParams};
use crate::presets::{Preset, Scenario};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub modes: ModesConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_modes_x: usize,
    pub n_modes_y: usize,
    pub oversample: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_modes_x: 32, n_modes_y: 32, oversample: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub mu: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ForcingConfig {
    None,
    Manufactured {
        amplitude: f64,
        decay: f64,
        n0: usize,
        m0: usize,
    },
}

/// Exactly one of `preset`, `modes` or `snapshot`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
}

/// Coefficient `re + i im` of `e^{inx} sin(m pi y)`; the conjugate partner
/// at `-n` is filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub n: i64,
    pub m: usize,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub adapt: bool,
    pub log_every: usize,
    pub scheme: Scheme,
    pub require_mean_zero: bool,
}

impl Default for StepperSection {
    fn default() -> Self {
        let d = StepperConfig::default();
        Self {
            dt: d.dt,
            t_end: d.t_end,
            cfl_safety: d.cfl_safety,
            adapt: d.adapt,
            log_every: d.log_every,
            scheme: d.scheme,
            require_mean_zero: d.require_mean_zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: String,
    pub report: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            csv: "diagnostics.csv".into(),
            report: "report".into(),
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesConfig {
    pub theorem1: bool,
    pub theorem2: bool,
    pub mms: bool,
    pub oracle_compare: bool,
}

impl ModesConfig {
    pub fn any_theorem(&self) -> bool {
        self.theorem1 || self.theorem2
    }
}

impl ScenarioConfig {
    /// Parses and validates TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.grid()?;
        self.model_params()?;
        self.stepper_config().validate().map_err(config_error)?;
        let s = &self.stepper;
        if s.dt > s.t_end && s.t_end > 0.0 {
            return bad(format!("stepper.dt <= stepper.t_end violated (dt = {}, t_end = {})", s.dt, s.t_end));
        }
        let i = &self.initial;
        let sources =
            i.preset.is_some() as u8 + i.modes.is_some() as u8 + i.snapshot.is_some() as u8;
        if sources != 1 {
            return bad("initial: set exactly one of preset, modes, snapshot".into());
        }
        if let Some(name) = &i.preset {
            Preset::from_name(name)?;
        }
        if let Some(modes) = &i.modes {
            let (nn, mm) = (self.grid.n_modes_x as i64, self.grid.n_modes_y);
            for (k, md) in modes.iter().enumerate() {
                if md.n.abs() > nn || md.m == 0 || md.m > mm {
                    return bad(format!(
                        "initial.modes[{k}]: (n, m) = ({}, {}) outside |n| <= {nn}, 1 <= m <= {mm}",
                        md.n, md.m
                    ));
                }
                if md.n == 0 && md.im != 0.0 {
                    return bad(format!("initial.modes[{k}]: n = 0 coefficient must be real"));
                }
                if !(md.re.is_finite() && md.im.is_finite()) {
                    return bad(format!("initial.modes[{k}]: non-finite coefficient"));
                }
            }
        }
        if self.output.snapshot_every == Some(0) {
            return bad("output.snapshot_every >= 1 violated".into());
        }
        if self.modes.any_theorem() {
            let p = &self.params;
            if p.alpha > 0.0 {
                return bad(format!("theorem modes require alpha <= 0 (alpha = {})", p.alpha));
            }
            if !matches!(p.forcing, None | Some(ForcingConfig::None)) {
                return bad("theorem modes require params.forcing kind = \"none\"".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.n_modes_x, g.n_modes_y, g.oversample).map_err(config_error)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let p = &self.params;
        let mut mp = ModelParams::new(p.mu, p.alpha, p.beta).map_err(config_error)?;
        if let Some(ForcingConfig::Manufactured { amplitude, decay, n0, m0 }) = p.forcing {
            let case = ManufacturedCase::new(amplitude, decay, n0, m0);
            case.validate().map_err(config_error)?;
            mp = mp.with_forcing(Forcing::Manufactured(case));
        }
        Ok(mp)
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let s = &self.stepper;
        StepperConfig {
            dt: s.dt,
            t_end: s.t_end,
            cfl_safety: s.cfl_safety,
            adapt: s.adapt,
            log_every: s.log_every,
            snapshot_every: self.output.snapshot_every,
            scheme: s.scheme,
            explicit_cut: None,
            require_mean_zero: s.require_mean_zero || self.modes.any_theorem(),
        }
    }

    /// Builds the initial field; snapshot paths are relative to `base`.
    pub fn initial_field(&self, base: &Path) -> Result<SpectralField> {
        let grid = self.grid()?;
        let i = &self.initial;
        if let Some(name) = &i.preset {
            let preset = Preset::from_name(name)?;
            return Ok(preset.initial(preset.grid()).resample(grid));
        }
        if let Some(modes) = &i.modes {
            let mut u = SpectralField::zeros(grid);
            for md in modes {
                u.set_hermitian(md.n, md.m, Complex64::new(md.re, md.im));
            }
            return Ok(u);
        }
        let path = i.snapshot.as_ref().expect("validated initial source");
        let path = if path.is_relative() { base.join(path) } else { path.clone() };
        let u = crate::snapshot::read_snapshot(&path, grid.oversample())?;
        Ok(u.resample(grid))
    }

    pub fn scenario(&self, base: &Path) -> Result<Scenario> {
        let name = match &self.initial.preset {
            Some(p) => p.clone(),
            None => "custom".into(),
        };
        Ok(Scenario {
            name,
            params: self.model_params()?,
            stepper: self.stepper_config(),
            u0: self.initial_field(base)?,
        })
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Markdown page listing every key and its default.
pub fn reference_page() -> String {
    let g = GridConfig::default();
    let s = StepperSection::default();
    let o = OutputConfig::default();
    let scheme = match s.scheme {
        Scheme::EtdRk2 => "etd_rk2",
        Scheme::IfRk2 => "if_rk2",
    };
    let rows: Vec<(&str, String, &str)> = vec![
        ("grid.n_modes_x", g.n_modes_x.to_string(), "Fourier modes kept: abs(n) <= N"),
        ("grid.n_modes_y", g.n_modes_y.to_string(), "sine modes kept: 1 <= m <= M"),
        ("grid.oversample", g.oversample.to_string(), "collocation oversampling factor"),
        ("params.mu", "required".into(), "viscosity, must be > 0"),
        ("params.alpha", "0".into(), "linear growth rate"),
        ("params.beta", "0".into(), "rotation coefficient"),
        ("params.forcing.kind", "\"none\"".into(), "\"none\" or \"manufactured\" (then amplitude, decay, n0, m0)"),
        ("initial.preset", "-".into(), "one of small_data, wiener_small, wiener_large, blowup_stress"),
        ("initial.modes", "-".into(), "array of { n, m, re, im }"),
        ("initial.snapshot", "-".into(), "path to an MGSP snapshot"),
        ("stepper.dt", format!("{:e}", s.dt), "time step (initial step when adapting)"),
        ("stepper.t_end", s.t_end.to_string(), "final time"),
        ("stepper.cfl_safety", s.cfl_safety.to_string(), "safety factor of the adaptive step"),
        ("stepper.adapt", s.adapt.to_string(), "choose the step from the CFL limit"),
        ("stepper.log_every", s.log_every.to_string(), "steps between diagnostics rows"),
        ("stepper.scheme", format!("\"{scheme}\""), "\"etd_rk2\" or \"if_rk2\""),
        ("stepper.require_mean_zero", s.require_mean_zero.to_string(), "reject data with nonzero mean; implied by theorem modes"),
        ("output.dir", format!("\"{}\"", o.dir.display()), "directory for every output file"),
        ("output.csv", format!("\"{}\"", o.csv), "diagnostics CSV file name"),
        ("output.report", format!("\"{}\"", o.report), "report stem; .txt and .json are written"),
        ("output.snapshot_every", "unset".into(), "steps between snapshots"),
        ("modes.theorem1", "false".into(), "check the small-data decay estimates"),
        ("modes.theorem2", "false".into(), "check the Wiener-algebra estimates"),
        ("modes.mms", "false".into(), "run the manufactured-solution study"),
        ("modes.oracle_compare", "false".into(), "compare against the finite-difference solver"),
    ];
    let mut out = String::from(
        "# Configuration reference\n\nGenerated by `mgsim config-reference`. Unknown keys are rejected.\n\n| key | default | meaning |\n|---|---|---|\n",
    );
    for (k, d, m) in rows {
        out.push_str(&format!("| `{k}` | {d} | {m} |\n"));
    }
    out
}
